#include "rthkp/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace rthkp::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kDegenerateArea = 1e-18;

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) noexcept {
    const double dx = b.lon - a.lon;
    const double dy = b.lat - a.lat;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) {
        return std::hypot(p.lon - a.lon, p.lat - a.lat) <= kBoundaryEpsilonDeg;
    }
    // Clamp the projection parameter so the nearest point lies on the segment.
    const double t = std::clamp(((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2, 0.0, 1.0);
    const double nx = a.lon + t * dx;
    const double ny = a.lat + t * dy;
    return std::hypot(p.lon - nx, p.lat - ny) <= kBoundaryEpsilonDeg;
}

GeoPoint vertex_mean(const std::vector<GeoPoint>& ring) noexcept {
    const std::size_t n = ring.size() > 1 ? ring.size() - 1 : ring.size();
    if (n == 0) {
        return {};
    }
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += ring[i].lon;
        sy += ring[i].lat;
    }
    return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

}  // namespace

void BBox::expand(const GeoPoint& p) noexcept {
    min_lon = std::min(min_lon, p.lon);
    min_lat = std::min(min_lat, p.lat);
    max_lon = std::max(max_lon, p.lon);
    max_lat = std::max(max_lat, p.lat);
}

void BBox::expand(const BBox& other) noexcept {
    min_lon = std::min(min_lon, other.min_lon);
    min_lat = std::min(min_lat, other.min_lat);
    max_lon = std::max(max_lon, other.max_lon);
    max_lat = std::max(max_lat, other.max_lat);
}

double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept {
    const double lat1 = a.lat * kDegToRad;
    const double lat2 = b.lat * kDegToRad;
    const double s_lat = std::sin((lat2 - lat1) / 2.0);
    const double s_lon = std::sin((b.lon - a.lon) * kDegToRad / 2.0);
    // Squaring removes the sign of the differences, so swapping a and b
    // produces bitwise-identical terms.
    const double h = s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * (s_lon * s_lon);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

bool point_in_polygon(const GeoPoint& p, const GeoPolygon& poly) noexcept {
    const auto& ring = poly.exterior;
    if (ring.size() < 2) {
        return false;
    }
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        if (on_segment(p, ring[i], ring[i + 1])) {
            return true;
        }
    }
    bool inside = false;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        const GeoPoint& vi = ring[i];
        const GeoPoint& vj = ring[j];
        if ((vi.lat > p.lat) != (vj.lat > p.lat)) {
            const double x = vi.lon + (p.lat - vi.lat) * (vj.lon - vi.lon) / (vj.lat - vi.lat);
            if (p.lon < x) {
                inside = !inside;
            }
        }
    }
    return inside;
}

BBox polygon_bbox(const GeoPolygon& poly) noexcept {
    if (poly.exterior.empty()) {
        return {};
    }
    BBox box = BBox::of_point(poly.exterior.front());
    for (const auto& v : poly.exterior) {
        box.expand(v);
    }
    return box;
}

BBox geometry_bbox(const GeoPoint& marker, const std::optional<GeoPolygon>& boundary) noexcept {
    BBox box = BBox::of_point(marker);
    if (boundary) {
        for (const auto& v : boundary->exterior) {
            box.expand(v);
        }
    }
    return box;
}

GeoPoint polygon_centroid(const GeoPolygon& poly) noexcept {
    const auto& ring = poly.exterior;
    if (ring.size() < 2) {
        return vertex_mean(ring);
    }
    // Work relative to the first vertex; city-scale rings sit far from the
    // origin and the shoelace sums would otherwise cancel badly.
    const GeoPoint origin = ring.front();
    double twice_area = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double x0 = ring[i].lon - origin.lon;
        const double y0 = ring[i].lat - origin.lat;
        const double x1 = ring[i + 1].lon - origin.lon;
        const double y1 = ring[i + 1].lat - origin.lat;
        const double cross = x0 * y1 - x1 * y0;
        twice_area += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    if (std::abs(twice_area / 2.0) < kDegenerateArea) {
        return vertex_mean(ring);
    }
    return {origin.lon + cx / (3.0 * twice_area), origin.lat + cy / (3.0 * twice_area)};
}

std::vector<Violation> validate_point(const GeoPoint& p, const std::string& field) {
    std::vector<Violation> out;
    if (!std::isfinite(p.lon)) {
        out.push_back({field, "lon is not a finite number"});
    } else if (p.lon < -180.0 || p.lon > 180.0) {
        out.push_back({field, "lon out of range"});
    }
    if (!std::isfinite(p.lat)) {
        out.push_back({field, "lat is not a finite number"});
    } else if (p.lat < -90.0 || p.lat > 90.0) {
        out.push_back({field, "lat out of range"});
    }
    return out;
}

std::vector<Violation> validate_polygon(const GeoPolygon& poly, const std::string& field) {
    std::vector<Violation> out;
    const auto& ring = poly.exterior;
    if (ring.size() < 4) {
        out.push_back({field, "too few vertices"});
    }
    if (!ring.empty() && !(ring.front() == ring.back() && ring.size() > 1)) {
        out.push_back({field, "ring not closed"});
    }
    for (std::size_t i = 0; i < ring.size(); ++i) {
        auto vs = validate_point(ring[i], field + ".exterior[" + std::to_string(i) + "]");
        out.insert(out.end(), vs.begin(), vs.end());
    }
    return out;
}

std::vector<Violation> validate_geometry(const GeoPoint& marker,
                                         const std::optional<GeoPolygon>& boundary) {
    auto out = validate_point(marker, "marker");
    if (boundary) {
        auto vs = validate_polygon(*boundary, "boundary");
        out.insert(out.end(), vs.begin(), vs.end());
    }
    return out;
}

}  // namespace rthkp::geo

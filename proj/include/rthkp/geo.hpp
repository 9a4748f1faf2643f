#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rthkp::geo {

/// Mean earth radius of the spherical model, in meters.
inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Tolerance, in degrees, for treating a point as lying on a ring edge.
inline constexpr double kBoundaryEpsilonDeg = 1e-12;

/// WGS84 position in decimal degrees. lon in [-180, 180], lat in [-90, 90].
struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Single closed exterior ring. The first vertex is repeated as the last one.
struct GeoPolygon {
    std::vector<GeoPoint> exterior;

    friend bool operator==(const GeoPolygon&, const GeoPolygon&) = default;
};

struct BBox {
    double min_lon = 0.0;
    double min_lat = 0.0;
    double max_lon = 0.0;
    double max_lat = 0.0;

    friend bool operator==(const BBox&, const BBox&) = default;

    /// Closed-interval test; shared edges intersect.
    bool intersects(const BBox& other) const noexcept {
        return min_lon <= other.max_lon && other.min_lon <= max_lon &&
               min_lat <= other.max_lat && other.min_lat <= max_lat;
    }

    bool contains(const GeoPoint& p) const noexcept {
        return min_lon <= p.lon && p.lon <= max_lon && min_lat <= p.lat && p.lat <= max_lat;
    }

    bool contains(const BBox& other) const noexcept {
        return min_lon <= other.min_lon && other.max_lon <= max_lon &&
               min_lat <= other.min_lat && other.max_lat <= max_lat;
    }

    void expand(const GeoPoint& p) noexcept;
    void expand(const BBox& other) noexcept;

    static BBox of_point(const GeoPoint& p) noexcept { return {p.lon, p.lat, p.lon, p.lat}; }
};

/// One violated geometry invariant. `field` is a dotted path such as
/// "marker" or "boundary.exterior[2]".
struct Violation {
    std::string field;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_distance(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Even-odd ray casting in planar lon/lat, with points on an edge or vertex
/// (within kBoundaryEpsilonDeg) reported as inside.
bool point_in_polygon(const GeoPoint& p, const GeoPolygon& poly) noexcept;

BBox geometry_bbox(const GeoPoint& marker, const std::optional<GeoPolygon>& boundary) noexcept;
BBox polygon_bbox(const GeoPolygon& poly) noexcept;

/// Shoelace area centroid of the exterior ring. Rings whose area magnitude is
/// below 1e-18 fall back to the mean of the vertices (closing vertex excluded).
GeoPoint polygon_centroid(const GeoPolygon& poly) noexcept;

std::vector<Violation> validate_point(const GeoPoint& p, const std::string& field);
std::vector<Violation> validate_polygon(const GeoPolygon& poly, const std::string& field);

/// Every violated invariant of a marker and optional boundary; empty means valid.
std::vector<Violation> validate_geometry(const GeoPoint& marker,
                                         const std::optional<GeoPolygon>& boundary);

}  // namespace rthkp::geo

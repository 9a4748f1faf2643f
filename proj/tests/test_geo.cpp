#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "rthkp/geo.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace rthkp;
using namespace rthkp::geo;

namespace {

const GeoPolygon kUnitSquare{{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}};

bool has_violation(const std::vector<Violation>& vs, const std::string& message) {
    return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.message == message; });
}

}  // namespace

TEST_CASE("haversine closed forms") {
    CHECK(haversine_distance({0, 0}, {0, 0}) == 0.0);
    // pi R / 180 and pi R with R = 6371000 m.
    CHECK(std::abs(haversine_distance({0, 0}, {1, 0}) - 111194.93) <= 0.01);
    CHECK(std::abs(haversine_distance({0, 0}, {180, 0}) - 20015086.80) <= 0.01);
    CHECK(std::abs(haversine_distance({0, 0}, {1, 0}) - std::numbers::pi * kEarthRadiusM / 180.0) < 1e-6);
}

TEST_CASE("haversine matches law-of-cosines fixture in Palembang") {
    // Frozen from an independent 50-digit law-of-cosines evaluation.
    const double expected = 1111.9492664455874;
    const double d = haversine_distance({104.7566, -2.9909}, {104.7566, -2.9809});
    CHECK(std::abs(d - expected) < 1e-6);
}

TEST_CASE("haversine agrees with law of cosines on separated points") {
    test::Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        const GeoPoint a = test::random_point(rng);
        const GeoPoint b = test::random_point(rng);
        const double h = haversine_distance(a, b);
        if (h < 1000.0) {
            continue;
        }
        // The cosine route loses digits near 0 and pi; 1e-3 m covers both.
        CHECK(std::abs(h - test::law_of_cosines_distance(a, b)) < 1e-3 + h * 1e-9);
    }
}

TEST_CASE("haversine properties") {
    test::Rng rng(11);
    const double max_d = std::numbers::pi * kEarthRadiusM + 1e-6;
    for (int i = 0; i < 10'000; ++i) {
        const GeoPoint a = test::random_point(rng);
        const GeoPoint b = test::random_point(rng);
        const GeoPoint c = test::random_point(rng);
        const double ab = haversine_distance(a, b);
        REQUIRE(ab == haversine_distance(b, a));
        REQUIRE(haversine_distance(a, a) == 0.0);
        REQUIRE(ab >= 0.0);
        REQUIRE(ab <= max_d);
        REQUIRE(haversine_distance(a, c) <= ab + haversine_distance(b, c) + 1e-6);
    }
}

TEST_CASE("point_in_polygon examples") {
    CHECK(point_in_polygon({0.5, 0.5}, kUnitSquare));
    CHECK_FALSE(point_in_polygon({2, 2}, kUnitSquare));
    CHECK(point_in_polygon({0, 0}, kUnitSquare));
    CHECK(test::on_segment_oracle({0, 0}, {0, 0}, {1, 0}, kBoundaryEpsilonDeg));
}

TEST_CASE("point_in_polygon is boundary inclusive") {
    CHECK(point_in_polygon({0.5, 0.0}, kUnitSquare));
    CHECK(point_in_polygon({1.0, 0.25}, kUnitSquare));
    CHECK(point_in_polygon({1.0, 1.0}, kUnitSquare));
    CHECK(point_in_polygon({0.0, 1.0 - 5e-13}, kUnitSquare));
    CHECK_FALSE(point_in_polygon({-1e-9, 0.5}, kUnitSquare));
    CHECK_FALSE(point_in_polygon({1.0 + 1e-9, 0.5}, kUnitSquare));
}

TEST_CASE("point_in_polygon on a concave ring") {
    const GeoPolygon l_shape{{{0, 0}, {10, 0}, {10, 5}, {5, 5}, {5, 10}, {0, 10}, {0, 0}}};
    CHECK(point_in_polygon({7, 2}, l_shape));
    CHECK(point_in_polygon({2, 7}, l_shape));
    CHECK_FALSE(point_in_polygon({7, 7}, l_shape));
    CHECK(point_in_polygon({7, 5}, l_shape));  // on the notch edge
}

TEST_CASE("point_in_polygon agrees with winding number on convex polygons") {
    test::Rng rng(3);
    int compared = 0;
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint center = {test::uniform(rng, -100, 100), test::uniform(rng, -60, 60)};
        const GeoPolygon poly = test::random_convex_polygon(rng, center, test::uniform(rng, 0.01, 5.0));
        const BBox box = polygon_bbox(poly);
        const GeoPoint p = test::random_point_in(
            rng, {box.min_lon - 0.5, box.min_lat - 0.5, box.max_lon + 0.5, box.max_lat + 0.5});
        if (test::near_boundary(p, poly, 1e-9)) {
            continue;
        }
        ++compared;
        REQUIRE(point_in_polygon(p, poly) == test::winding_number_contains(p, poly));
    }
    CHECK(compared > 990);
}

TEST_CASE("containment implies inside bbox") {
    test::Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        const GeoPolygon poly = test::random_convex_polygon(rng, {0, 0}, 2.0);
        const GeoPoint p = test::random_point_in(rng, {-4, -4, 4, 4});
        if (!polygon_bbox(poly).contains(p)) {
            REQUIRE_FALSE(point_in_polygon(p, poly));
        }
    }
}

TEST_CASE("geometry_bbox") {
    CHECK(geometry_bbox({104.76, -2.99}, std::nullopt) == BBox{104.76, -2.99, 104.76, -2.99});
    CHECK(geometry_bbox({0.5, 0.5}, kUnitSquare) == BBox{0, 0, 1, 1});
    CHECK(geometry_bbox({2, 2}, kUnitSquare) == BBox{0, 0, 2, 2});
}

TEST_CASE("polygon_centroid") {
    CHECK(polygon_centroid(kUnitSquare) == GeoPoint{0.5, 0.5});
    const GeoPoint tri = polygon_centroid(GeoPolygon{{{0, 0}, {3, 0}, {0, 3}, {0, 0}}});
    CHECK(tri.lon == doctest::Approx(1.0));
    CHECK(tri.lat == doctest::Approx(1.0));

    // Collinear ring: shoelace area is zero, so the vertex mean is used.
    const GeoPoint flat = polygon_centroid(GeoPolygon{{{0, 0}, {1, 1}, {2, 2}, {0, 0}}});
    CHECK(flat.lon == doctest::Approx(1.0));
    CHECK(flat.lat == doctest::Approx(1.0));

    // Clockwise orientation gives the same centroid.
    const GeoPoint cw = polygon_centroid(GeoPolygon{{{0, 0}, {0, 3}, {3, 0}, {0, 0}}});
    CHECK(cw.lon == doctest::Approx(1.0));
    CHECK(cw.lat == doctest::Approx(1.0));
}

TEST_CASE("centroid of a city-scale ring is accurate") {
    const double x = 104.75, y = -2.99, d = 1e-3;
    const GeoPolygon sq{{{x, y}, {x + d, y}, {x + d, y + d}, {x, y + d}, {x, y}}};
    const GeoPoint c = polygon_centroid(sq);
    CHECK(std::abs(c.lon - (x + d / 2)) < 1e-12);
    CHECK(std::abs(c.lat - (y + d / 2)) < 1e-12);
}

TEST_CASE("centroid of random convex polygons lies inside") {
    test::Rng rng(9);
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint center = {test::uniform(rng, -170, 170), test::uniform(rng, -80, 80)};
        const GeoPolygon poly = test::random_convex_polygon(rng, center, test::uniform(rng, 1e-4, 5.0));
        REQUIRE(point_in_polygon(polygon_centroid(poly), poly));
    }
}

TEST_CASE("validate_geometry") {
    CHECK(validate_geometry({104.76, -2.99}, std::nullopt).empty());
    CHECK(validate_geometry({0.5, 0.5}, kUnitSquare).empty());

    const auto lon = validate_geometry({200, 0}, std::nullopt);
    REQUIRE(lon.size() == 1);
    CHECK(lon[0] == Violation{"marker", "lon out of range"});

    CHECK(has_violation(validate_geometry({0, 95}, std::nullopt), "lat out of range"));
    CHECK(has_violation(validate_geometry({std::numeric_limits<double>::quiet_NaN(), 0}, std::nullopt),
                        "lon is not a finite number"));
    CHECK(has_violation(validate_geometry({0, std::numeric_limits<double>::infinity()}, std::nullopt),
                        "lat is not a finite number"));

    const auto open = validate_geometry({0, 0}, GeoPolygon{{{0, 0}, {1, 0}, {1, 1}}});
    CHECK(has_violation(open, "too few vertices"));
    CHECK(has_violation(open, "ring not closed"));
    CHECK(open.size() == 2);

    const auto bad_vertex = validate_geometry({0, 0}, GeoPolygon{{{0, 0}, {181, 0}, {1, 1}, {0, 0}}});
    REQUIRE(bad_vertex.size() == 1);
    CHECK(bad_vertex[0].field == "boundary.exterior[1]");
}

TEST_CASE("bbox intersection is closed") {
    const BBox a{0, 0, 1, 1};
    CHECK(a.intersects({1, 1, 2, 2}));
    CHECK(a.intersects({1, 0, 2, 0}));
    CHECK_FALSE(a.intersects({1.0000001, 0, 2, 1}));
}

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "rthkp/geo.hpp"
#include "rthkp/model.hpp"

/// GeoJSON (RFC 7946 subset) encoding of GreenSpace records.
///
/// Geometry: a bare Point when the record has no boundary, otherwise a
/// GeometryCollection holding the Point first and the Polygon second. A bare
/// Polygon is accepted on input; its centroid becomes the marker.
///
/// Serialized key order is fixed:
///   collection: type, features
///   feature:    type, geometry, properties
///   geometry:   type, coordinates | geometries
///   properties: id, name, category, description, facilities, photos,
///               created_at, updated_at (timestamps omitted when unset)
/// Coordinates carry at most 9 fractional digits with trailing zeros trimmed.
/// Each feature occupies one line. Unknown members are ignored on input and
/// never written.
namespace rthkp::geojson {

using SpaceFeature = GreenSpace;

struct ParseFailure {
    /// Position of the offending feature; empty for document-level failures.
    std::optional<std::size_t> feature_index;
    std::string reason;
    std::vector<geo::Violation> violations;

    std::string describe() const;
};

using ParseOutcome = std::variant<std::vector<SpaceFeature>, ParseFailure>;

/// Total over arbitrary input: returns features or a failure report, never throws.
ParseOutcome parse_feature_collection(std::string_view text);

/// Sorts by id. Throws ValidationError on duplicate ids.
std::string serialize_feature_collection(std::vector<SpaceFeature> features);

/// One compact Feature object, no trailing newline.
std::string serialize_feature(const SpaceFeature& feature);

/// Formats one coordinate value: up to 9 fractional digits, trailing zeros
/// trimmed, negative zero written as 0.
std::string format_coordinate(double value);

/// The value format_coordinate writes, read back. Idempotent.
double quantize_coordinate(double value);

/// Rounds every coordinate of `feature` to what the serializer writes, so an
/// in-memory record equals its reloaded copy exactly.
void quantize_coordinates(SpaceFeature& feature);

struct DecodedGeometry {
    geo::GeoPoint marker;
    std::optional<geo::GeoPolygon> boundary;
};

/// Decodes a geometry object into marker and boundary. Structural problems
/// and invariant violations are appended to `violations` under `field`;
/// returns nullopt when the geometry could not be decoded at all.
std::optional<DecodedGeometry> decode_geometry(const nlohmann::json& geometry,
                                               std::vector<geo::Violation>& violations,
                                               const std::string& field = "geometry");

/// The properties object exactly as the serializer writes it.
nlohmann::ordered_json properties_json(const SpaceFeature& feature);

}  // namespace rthkp::geojson

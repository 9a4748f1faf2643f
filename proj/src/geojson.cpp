#include "rthkp/geojson.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "rthkp/errors.hpp"

namespace rthkp::geojson {

using nlohmann::json;

namespace {

std::string quote(std::string_view s) {
    return json(s).dump(-1, ' ', false, json::error_handler_t::replace);
}

void append_position(std::string& out, const geo::GeoPoint& p) {
    out += '[';
    out += format_coordinate(p.lon);
    out += ',';
    out += format_coordinate(p.lat);
    out += ']';
}

void append_point(std::string& out, const geo::GeoPoint& p) {
    out += R"({"type":"Point","coordinates":)";
    append_position(out, p);
    out += '}';
}

void append_polygon(std::string& out, const geo::GeoPolygon& poly) {
    out += R"({"type":"Polygon","coordinates":[[)";
    for (std::size_t i = 0; i < poly.exterior.size(); ++i) {
        if (i != 0) {
            out += ',';
        }
        append_position(out, poly.exterior[i]);
    }
    out += "]]}";
}

void append_string_array(std::string& out, const std::vector<std::string>& items) {
    out += '[';
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i != 0) {
            out += ',';
        }
        out += quote(items[i]);
    }
    out += ']';
}

std::optional<geo::GeoPoint> decode_position(const json& j, std::vector<geo::Violation>& violations,
                                             const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        violations.push_back({field, "position must be [lon, lat] numbers"});
        return std::nullopt;
    }
    return geo::GeoPoint{j[0].get<double>(), j[1].get<double>()};
}

const json* member(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

bool has_type(const json& obj, std::string_view type) {
    const json* t = member(obj, "type");
    return t != nullptr && t->is_string() && t->get_ref<const std::string&>() == type;
}

std::optional<geo::GeoPoint> decode_point(const json& g, std::vector<geo::Violation>& violations,
                                          const std::string& field) {
    const json* coords = member(g, "coordinates");
    if (coords == nullptr) {
        violations.push_back({field, "Point without coordinates"});
        return std::nullopt;
    }
    return decode_position(*coords, violations, field + ".coordinates");
}

std::optional<geo::GeoPolygon> decode_polygon(const json& g, std::vector<geo::Violation>& violations,
                                              const std::string& field) {
    const json* coords = member(g, "coordinates");
    if (coords == nullptr || !coords->is_array() || coords->empty()) {
        violations.push_back({field, "Polygon requires one linear ring"});
        return std::nullopt;
    }
    if (coords->size() > 1) {
        violations.push_back({field, "polygon holes are not supported"});
        return std::nullopt;
    }
    const json& ring = (*coords)[0];
    if (!ring.is_array()) {
        violations.push_back({field, "linear ring must be an array of positions"});
        return std::nullopt;
    }
    geo::GeoPolygon poly;
    poly.exterior.reserve(ring.size());
    bool ok = true;
    for (std::size_t i = 0; i < ring.size(); ++i) {
        auto p = decode_position(ring[i], violations, field + ".coordinates[0][" + std::to_string(i) + "]");
        if (p) {
            poly.exterior.push_back(*p);
        } else {
            ok = false;
        }
    }
    if (!ok) {
        return std::nullopt;
    }
    return poly;
}

std::optional<std::vector<std::string>> decode_string_array(const json& props, const char* key,
                                                            std::vector<geo::Violation>& violations) {
    const json* arr = member(props, key);
    if (arr == nullptr || arr->is_null()) {
        return std::vector<std::string>{};
    }
    if (!arr->is_array() ||
        !std::all_of(arr->begin(), arr->end(), [](const json& x) { return x.is_string(); })) {
        violations.push_back({key, std::string(key) + " must be an array of strings"});
        return std::nullopt;
    }
    return arr->get<std::vector<std::string>>();
}

std::optional<Timestamp> decode_timestamp(const json& props, const char* key,
                                          std::vector<geo::Violation>& violations) {
    const json* t = member(props, key);
    if (t == nullptr || t->is_null()) {
        return std::nullopt;
    }
    if (t->is_string()) {
        if (auto ts = parse_timestamp(t->get_ref<const std::string&>())) {
            return ts;
        }
    }
    violations.push_back({key, std::string(key) + " must be an ISO 8601 UTC timestamp (YYYY-MM-DDTHH:MM:SSZ)"});
    return std::nullopt;
}

/// Decodes one feature; on failure fills `failure` (reason and violations).
std::optional<SpaceFeature> decode_feature(const json& f, ParseFailure& failure) {
    if (!f.is_object() || !has_type(f, "Feature")) {
        failure.reason = "not a GeoJSON Feature object";
        return std::nullopt;
    }
    const json* props = member(f, "properties");
    if (props == nullptr || !props->is_object()) {
        failure.reason = "missing properties object";
        return std::nullopt;
    }

    SpaceFeature out;
    for (const char* key : {"id", "name", "category"}) {
        const json* v = member(*props, key);
        if (v == nullptr || v->is_null()) {
            failure.reason = std::string("missing required property \"") + key + "\"";
            failure.violations.push_back({key, "required"});
            return std::nullopt;
        }
        if (!v->is_string()) {
            failure.reason = std::string("property \"") + key + "\" must be a string";
            failure.violations.push_back({key, "must be a string"});
            return std::nullopt;
        }
    }
    out.id = (*props)["id"].get<std::string>();
    out.name = (*props)["name"].get<std::string>();
    const auto& literal = (*props)["category"].get_ref<const std::string&>();
    const auto category = category_from_literal(literal);
    if (!category) {
        failure.reason = "invalid category \"" + literal + "\"";
        failure.violations.push_back({"category", "must be taman_kota or taman_wisata_alam"});
        return std::nullopt;
    }
    out.category = *category;

    std::vector<geo::Violation> violations;
    if (const json* d = member(*props, "description"); d != nullptr && !d->is_null()) {
        if (d->is_string()) {
            out.description = d->get<std::string>();
        } else {
            violations.push_back({"description", "description must be a string"});
        }
    }
    if (auto v = decode_string_array(*props, "facilities", violations)) {
        out.facilities = std::move(*v);
    }
    if (auto v = decode_string_array(*props, "photos", violations)) {
        out.photos = std::move(*v);
    }
    out.created_at = decode_timestamp(*props, "created_at", violations);
    out.updated_at = decode_timestamp(*props, "updated_at", violations);

    const json* geometry = member(f, "geometry");
    std::optional<DecodedGeometry> decoded;
    if (geometry == nullptr) {
        violations.push_back({"geometry", "missing geometry"});
    } else {
        decoded = decode_geometry(*geometry, violations);
    }
    if (decoded) {
        out.marker = decoded->marker;
        out.boundary = std::move(decoded->boundary);
    }

    // Geometry is already validated by decode_geometry.
    for (auto& v : validate_space(out)) {
        if (v.field.rfind("marker", 0) != 0 && v.field.rfind("boundary", 0) != 0) {
            violations.push_back(std::move(v));
        }
    }
    if (!violations.empty()) {
        const bool geometry_only = std::all_of(violations.begin(), violations.end(), [](const auto& v) {
            return v.field.rfind("geometry", 0) == 0;
        });
        failure.reason = geometry_only ? "invalid geometry" : "invalid feature";
        for (const auto& v : violations) {
            failure.reason += (&v == &violations.front() ? ": " : "; ") + v.field + ": " + v.message;
        }
        failure.violations = std::move(violations);
        return std::nullopt;
    }
    return out;
}

}  // namespace

std::string ParseFailure::describe() const {
    if (feature_index) {
        return "feature " + std::to_string(*feature_index) + ": " + reason;
    }
    return reason;
}

std::string format_coordinate(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", value);
    std::string s = buf;
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') {
            s.pop_back();
        }
        if (s.back() == '.') {
            s.pop_back();
        }
    }
    if (s == "-0") {
        s = "0";
    }
    return s;
}

double quantize_coordinate(double value) {
    if (!std::isfinite(value)) {
        return value;
    }
    return std::strtod(format_coordinate(value).c_str(), nullptr);
}

void quantize_coordinates(SpaceFeature& feature) {
    const auto q = [](geo::GeoPoint& p) {
        p.lon = quantize_coordinate(p.lon);
        p.lat = quantize_coordinate(p.lat);
    };
    q(feature.marker);
    if (feature.boundary) {
        for (auto& v : feature.boundary->exterior) {
            q(v);
        }
    }
}

std::optional<DecodedGeometry> decode_geometry(const json& g, std::vector<geo::Violation>& violations,
                                               const std::string& field) {
    const std::size_t before = violations.size();
    if (!g.is_object()) {
        violations.push_back({field, "geometry must be an object"});
        return std::nullopt;
    }
    DecodedGeometry out;
    if (has_type(g, "Point")) {
        auto p = decode_point(g, violations, field);
        if (!p) {
            return std::nullopt;
        }
        out.marker = *p;
    } else if (has_type(g, "Polygon")) {
        auto poly = decode_polygon(g, violations, field);
        if (!poly) {
            return std::nullopt;
        }
        out.marker = geo::polygon_centroid(*poly);
        out.boundary = std::move(poly);
    } else if (has_type(g, "GeometryCollection")) {
        const json* parts = member(g, "geometries");
        if (parts == nullptr || !parts->is_array() || parts->size() != 2 || !(*parts)[0].is_object() ||
            !(*parts)[1].is_object() || !has_type((*parts)[0], "Point") || !has_type((*parts)[1], "Polygon")) {
            violations.push_back({field, "GeometryCollection must hold exactly a Point then a Polygon"});
            return std::nullopt;
        }
        auto p = decode_point((*parts)[0], violations, field + ".geometries[0]");
        auto poly = decode_polygon((*parts)[1], violations, field + ".geometries[1]");
        if (!p || !poly) {
            return std::nullopt;
        }
        out.marker = *p;
        out.boundary = std::move(poly);
    } else {
        violations.push_back({field, "geometry must be a Point, Polygon, or Point+Polygon GeometryCollection"});
        return std::nullopt;
    }

    for (auto& v : geo::validate_geometry(out.marker, out.boundary)) {
        v.field = field + "." + v.field;
        violations.push_back(std::move(v));
    }
    if (violations.size() != before) {
        return std::nullopt;
    }
    return out;
}

ParseOutcome parse_feature_collection(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        return ParseFailure{std::nullopt, "malformed JSON at byte " + std::to_string(e.byte), {}};
    } catch (const json::exception& e) {
        return ParseFailure{std::nullopt, std::string("malformed JSON: ") + e.what(), {}};
    }

    if (!doc.is_object() || !has_type(doc, "FeatureCollection")) {
        return ParseFailure{std::nullopt, "document is not a GeoJSON FeatureCollection", {}};
    }
    const json* features = member(doc, "features");
    if (features == nullptr || !features->is_array()) {
        return ParseFailure{std::nullopt, "FeatureCollection has no features array", {}};
    }

    std::vector<SpaceFeature> out;
    out.reserve(features->size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < features->size(); ++i) {
        ParseFailure failure;
        auto feature = decode_feature((*features)[i], failure);
        if (!feature) {
            failure.feature_index = i;
            return failure;
        }
        if (!seen.insert(feature->id).second) {
            return ParseFailure{i, "duplicate id \"" + feature->id + "\"", {{"id", "duplicate id"}}};
        }
        out.push_back(std::move(*feature));
    }
    return out;
}

std::string serialize_feature(const SpaceFeature& f) {
    std::string out = R"({"type":"Feature","geometry":)";
    if (f.boundary) {
        out += R"({"type":"GeometryCollection","geometries":[)";
        append_point(out, f.marker);
        out += ',';
        append_polygon(out, *f.boundary);
        out += "]}";
    } else {
        append_point(out, f.marker);
    }
    out += R"(,"properties":{"id":)" + quote(f.id);
    out += R"(,"name":)" + quote(f.name);
    out += R"(,"category":)" + quote(to_literal(f.category));
    out += R"(,"description":)" + quote(f.description);
    out += R"(,"facilities":)";
    append_string_array(out, f.facilities);
    out += R"(,"photos":)";
    append_string_array(out, f.photos);
    if (f.created_at) {
        out += R"(,"created_at":)" + quote(format_timestamp(*f.created_at));
    }
    if (f.updated_at) {
        out += R"(,"updated_at":)" + quote(format_timestamp(*f.updated_at));
    }
    out += "}}";
    return out;
}

std::string serialize_feature_collection(std::vector<SpaceFeature> features) {
    std::sort(features.begin(), features.end(),
              [](const SpaceFeature& a, const SpaceFeature& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < features.size(); ++i) {
        if (features[i].id == features[i - 1].id) {
            throw ValidationError({{"id", "duplicate id \"" + features[i].id + "\""}});
        }
    }
    if (features.empty()) {
        return "{\"type\":\"FeatureCollection\",\"features\":[]}\n";
    }
    std::string out = "{\"type\":\"FeatureCollection\",\"features\":[\n";
    for (std::size_t i = 0; i < features.size(); ++i) {
        out += serialize_feature(features[i]);
        out += i + 1 < features.size() ? ",\n" : "\n";
    }
    out += "]}\n";
    return out;
}

nlohmann::ordered_json properties_json(const SpaceFeature& f) {
    nlohmann::ordered_json j;
    j["id"] = f.id;
    j["name"] = f.name;
    j["category"] = to_literal(f.category);
    j["description"] = f.description;
    j["facilities"] = f.facilities;
    j["photos"] = f.photos;
    if (f.created_at) {
        j["created_at"] = format_timestamp(*f.created_at);
    }
    if (f.updated_at) {
        j["updated_at"] = format_timestamp(*f.updated_at);
    }
    return j;
}

}  // namespace rthkp::geojson

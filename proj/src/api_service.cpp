#include "rthkp/api_service.hpp"

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "rthkp/atomic_file.hpp"
#include "rthkp/geojson.hpp"

namespace rthkp::api {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kGeoJson = "application/geo+json";

void send_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                const std::vector<geo::Violation>& details = {}) {
    ordered_json body;
    body["status"] = status;
    body["code"] = code;
    body["message"] = message;
    if (!details.empty()) {
        ordered_json list = ordered_json::array();
        for (const auto& v : details) {
            list.push_back({{"field", v.field}, {"message", v.message}});
        }
        body["details"] = std::move(list);
    }
    res.status = status;
    res.set_content(body.dump(-1, ' ', false, json::error_handler_t::replace), kJson);
}

std::string_view default_code(int status) {
    switch (status) {
        case 400:
            return "bad_request";
        case 401:
            return "unauthorized";
        case 404:
            return "not_found";
        case 405:
            return "method_not_allowed";
        case 409:
            return "conflict";
        case 413:
            return "payload_too_large";
        case 422:
            return "validation";
        case 503:
            return "admin_disabled";
        default:
            return status >= 500 ? "internal" : "error";
    }
}

std::optional<double> parse_double(std::string_view text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::optional<std::string_view> header(const httplib::Request& req, const char* name) {
    if (!req.has_header(name)) {
        return std::nullopt;
    }
    const auto it = req.headers.find(name);
    return std::string_view(it->second);
}

std::string_view content_type_for(const std::filesystem::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
    if (ext == ".css") return "text/css; charset=utf-8";
    if (ext == ".json" || ext == ".map") return kJson;
    if (ext == ".geojson") return kGeoJson;
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".webp") return "image/webp";
    if (ext == ".gif") return "image/gif";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".woff2") return "font/woff2";
    return "application/octet-stream";
}

/// Serves `relative` under `root` when it names a regular file.
bool serve_file(const std::filesystem::path& root, std::string_view relative, httplib::Response& res) {
    if (relative.empty() || is_traversal(relative)) {
        return false;
    }
    const std::filesystem::path file = root / std::filesystem::path(std::string(relative));
    std::error_code ec;
    if (!std::filesystem::is_regular_file(file, ec)) {
        return false;
    }
    try {
        res.set_content(persist::read_file(file), std::string(content_type_for(file)));
    } catch (const PersistenceError&) {
        return false;
    }
    res.status = 200;
    return true;
}

std::optional<std::vector<std::string>> string_list(const json& props, const char* key,
                                                    std::vector<geo::Violation>& violations) {
    auto it = props.find(key);
    if (it == props.end()) {
        return std::nullopt;
    }
    if (it->is_null()) {
        return std::vector<std::string>{};
    }
    if (!it->is_array() || !std::all_of(it->begin(), it->end(), [](const json& x) { return x.is_string(); })) {
        violations.push_back({key, std::string(key) + " must be an array of strings"});
        return std::nullopt;
    }
    return it->get<std::vector<std::string>>();
}

std::optional<std::string> string_field(const json& props, const char* key,
                                        std::vector<geo::Violation>& violations) {
    auto it = props.find(key);
    if (it == props.end()) {
        return std::nullopt;
    }
    if (!it->is_string()) {
        violations.push_back({key, std::string(key) + " must be a string"});
        return std::nullopt;
    }
    return it->get<std::string>();
}

/// Reads the Feature-shaped request body shared by create and update.
/// Every field is optional here; create checks presence itself.
registry::SpacePatch decode_body(const json& body, std::vector<geo::Violation>& violations,
                                 std::optional<std::string>& id_member) {
    registry::SpacePatch patch;
    static const json kEmpty = json::object();
    const json* props = &kEmpty;
    if (auto it = body.find("properties"); it != body.end() && !it->is_null()) {
        if (!it->is_object()) {
            violations.push_back({"properties", "properties must be an object"});
        } else {
            props = &*it;
        }
    }
    id_member = string_field(*props, "id", violations);
    patch.name = string_field(*props, "name", violations);
    if (auto literal = string_field(*props, "category", violations)) {
        if (auto c = category_from_literal(*literal)) {
            patch.category = *c;
        } else {
            violations.push_back({"category", "must be taman_kota or taman_wisata_alam"});
        }
    }
    if (auto it = props->find("description"); it != props->end() && it->is_null()) {
        patch.description = std::string{};
    } else {
        patch.description = string_field(*props, "description", violations);
    }
    patch.facilities = string_list(*props, "facilities", violations);
    patch.photos = string_list(*props, "photos", violations);

    if (auto it = body.find("geometry"); it != body.end() && !it->is_null()) {
        if (auto g = geojson::decode_geometry(*it, violations)) {
            patch.marker = g->marker;
            patch.boundary = g->boundary;
        }
    }
    return patch;
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        send_error(res, 400, "bad_request", "request body must be a JSON object");
        return std::nullopt;
    }
    return body;
}

ordered_json neighbor_json(const registry::Snapshot& snap, const index::Neighbor& n) {
    const GreenSpace& s = snap.get(n.id);
    ordered_json j;
    j["id"] = n.id;
    j["name"] = s.name;
    j["category"] = to_literal(s.category);
    j["distance_m"] = n.distance_m;
    return j;
}

}  // namespace

bool constant_time_equals(std::string_view a, std::string_view b) noexcept {
    const std::size_t n = std::max(a.size(), b.size());
    unsigned char diff = a.size() == b.size() ? 0 : 1;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = i < a.size() ? static_cast<unsigned char>(a[i]) : 0;
        const auto y = i < b.size() ? static_cast<unsigned char>(b[i]) : 0;
        diff |= static_cast<unsigned char>(x ^ y);
    }
    return diff == 0;
}

AuthResult authenticate_admin(const std::optional<std::string_view>& authorization,
                              const std::optional<std::string>& admin_token) noexcept {
    if (!admin_token || admin_token->empty()) {
        return AuthResult::Disabled;
    }
    constexpr std::string_view kScheme = "Bearer ";
    if (!authorization || authorization->size() <= kScheme.size() ||
        authorization->substr(0, kScheme.size()) != kScheme) {
        return AuthResult::Unauthorized;
    }
    return constant_time_equals(authorization->substr(kScheme.size()), *admin_token)
               ? AuthResult::Authorized
               : AuthResult::Unauthorized;
}

std::optional<geo::BBox> parse_bbox_param(std::string_view text) {
    double v[4];
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
        const std::size_t comma = text.find(',', start);
        if ((i < 3) == (comma == std::string_view::npos)) {
            return std::nullopt;
        }
        const std::size_t end = i < 3 ? comma : text.size();
        auto d = parse_double(text.substr(start, end - start));
        if (!d) {
            return std::nullopt;
        }
        v[i] = *d;
        start = end + 1;
    }
    const geo::BBox box{v[0], v[1], v[2], v[3]};
    if (box.min_lon > box.max_lon || box.min_lat > box.max_lat || box.min_lon < -180.0 ||
        box.max_lon > 180.0 || box.min_lat < -90.0 || box.max_lat > 90.0) {
        return std::nullopt;
    }
    return box;
}

bool is_traversal(std::string_view request_path) {
    const std::string path = httplib::detail::decode_url(std::string(request_path), false);
    if (path.find('\\') != std::string::npos || path.find('\0') != std::string::npos) {
        return true;
    }
    std::size_t start = 0;
    while (true) {
        const std::size_t slash = path.find('/', start);
        const std::size_t end = slash == std::string::npos ? path.size() : slash;
        const std::string_view seg = std::string_view(path).substr(start, end - start);
        if (seg.empty() || seg == ".." || seg == ".") {
            return true;
        }
        if (slash == std::string::npos) {
            return false;
        }
        start = slash + 1;
    }
}

std::pair<std::string, int> parse_bind_address(std::string_view address) {
    const std::size_t colon = address.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        throw std::invalid_argument("bind address must be HOST:PORT");
    }
    int port = -1;
    const std::string_view digits = address.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || port < 0 || port > 65535) {
        throw std::invalid_argument("invalid port in bind address \"" + std::string(address) + "\"");
    }
    std::string host(address.substr(0, colon));
    if (host.size() > 2 && host.front() == '[' && host.back() == ']') {
        host = host.substr(1, host.size() - 2);
    }
    return {host, port};
}

ApiService::ApiService(registry::Store& store, ServiceConfig config)
    : store_(store), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

ApiService::~ApiService() {
    server_->stop();
}

int ApiService::bind(const std::string& host, int port) {
    if (port == 0) {
        return server_->bind_to_any_port(host);
    }
    return server_->bind_to_port(host, port) ? port : -1;
}

bool ApiService::listen_after_bind() { return server_->listen_after_bind(); }

void ApiService::stop() { server_->stop(); }

void ApiService::wait_until_ready() const { server_->wait_until_ready(); }

void ApiService::install_routes() {
    httplib::Server& svr = *server_;

    svr.set_payload_max_length(8 * 1024 * 1024);

    svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            send_error(res, res.status, default_code(res.status), httplib::status_message(res.status));
        }
        return httplib::Server::HandlerResponse::Handled;
    });

    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send_error(res, 500, "internal", what);
    });

    if (config_.permissive_cors) {
        svr.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
            res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
            res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
        });
        svr.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    }

    // Mutations and failures share one shape for every admin route.
    const auto admin = [this](auto&& body) {
        return [this, body](const httplib::Request& req, httplib::Response& res) {
            switch (authenticate_admin(header(req, "Authorization"), config_.admin_token)) {
                case AuthResult::Disabled:
                    send_error(res, 503, "admin_disabled", "admin token is not configured");
                    return;
                case AuthResult::Unauthorized:
                    res.set_header("WWW-Authenticate", "Bearer");
                    send_error(res, 401, "unauthorized", "missing or invalid bearer token");
                    return;
                case AuthResult::Authorized:
                    break;
            }
            try {
                body(req, res);
            } catch (const NotFoundError& e) {
                send_error(res, 404, "not_found", e.what());
            } catch (const ValidationError& e) {
                send_error(res, 422, "validation", "validation failed", e.violations());
            } catch (const ConflictError& e) {
                send_error(res, 409, "conflict", e.what());
            } catch (const PersistenceError& e) {
                send_error(res, 500, "persistence", e.what());
            }
        };
    };

    svr.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
        ordered_json j;
        j["status"] = "ok";
        j["revision"] = store_.revision();
        res.set_content(j.dump(), kJson);
    });

    svr.Get("/api/categories", [](const httplib::Request&, httplib::Response& res) {
        json j = json::array();
        for (Category c : kAllCategories) {
            j.push_back(to_literal(c));
        }
        res.set_content(j.dump(), kJson);
    });

    svr.Get("/api/spaces", [this](const httplib::Request& req, httplib::Response& res) {
        registry::ListFilter filter;
        if (const std::string c = req.get_param_value("category"); !c.empty()) {
            filter.category = category_from_literal(c);
            if (!filter.category) {
                send_error(res, 400, "bad_request", "unknown category \"" + c + "\"");
                return;
            }
        }
        if (req.has_param("bbox")) {
            filter.bbox = parse_bbox_param(req.get_param_value("bbox"));
            if (!filter.bbox) {
                send_error(res, 400, "bad_request", "bbox must be min_lon,min_lat,max_lon,max_lat");
                return;
            }
        }
        res.set_content(geojson::serialize_feature_collection(store_.list_spaces(filter)), kGeoJson);
    });

    svr.Get(R"(/api/spaces/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto snap = store_.snapshot();
        if (const GreenSpace* s = snap->find(req.matches[1])) {
            res.set_content(geojson::serialize_feature(*s), kGeoJson);
        } else {
            send_error(res, 404, "not_found", "no green space with id \"" + std::string(req.matches[1]) + "\"");
        }
    });

    svr.Get("/api/nearest", [this](const httplib::Request& req, httplib::Response& res) {
        const auto lon = parse_double(req.get_param_value("lon"));
        const auto lat = parse_double(req.get_param_value("lat"));
        if (!lon || !lat || std::abs(*lon) > 180.0 || std::abs(*lat) > 90.0) {
            send_error(res, 400, "bad_request", "lon and lat must be numbers within WGS84 range");
            return;
        }
        std::size_t k = 5;
        if (req.has_param("k")) {
            const std::string text = req.get_param_value("k");
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
            if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || k < 1) {
                send_error(res, 400, "bad_request", "k must be a positive integer");
                return;
            }
        }
        const auto snap = store_.snapshot();
        ordered_json out = ordered_json::array();
        for (const auto& n : snap->nearest({*lon, *lat}, k)) {
            out.push_back(neighbor_json(*snap, n));
        }
        res.set_content(out.dump(-1, ' ', false, json::error_handler_t::replace), kJson);
    });

    svr.Post("/api/spaces", admin([this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req, res);
        if (!body) {
            return;
        }
        std::vector<geo::Violation> violations;
        std::optional<std::string> id_member;
        auto fields = decode_body(*body, violations, id_member);
        if (!fields.name) {
            violations.push_back({"name", "required"});
        }
        if (!fields.category) {
            violations.push_back({"category", "required"});
        }
        if (!fields.marker && body->find("geometry") == body->end()) {
            violations.push_back({"geometry", "required"});
        }
        if (!violations.empty()) {
            throw ValidationError(std::move(violations));
        }
        registry::SpaceDraft draft;
        draft.name = *fields.name;
        draft.category = *fields.category;
        draft.marker = fields.marker.value_or(geo::GeoPoint{});
        draft.boundary = fields.boundary.value_or(std::nullopt);
        draft.description = fields.description.value_or("");
        draft.facilities = fields.facilities.value_or(std::vector<std::string>{});
        draft.photos = fields.photos.value_or(std::vector<std::string>{});
        const GreenSpace created = store_.create_space(draft);
        res.status = 201;
        res.set_header("Location", "/api/spaces/" + created.id);
        res.set_content(geojson::serialize_feature(created), kGeoJson);
    }));

    svr.Put(R"(/api/spaces/([^/]+))", admin([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        auto body = parse_body(req, res);
        if (!body) {
            return;
        }
        std::vector<geo::Violation> violations;
        std::optional<std::string> id_member;
        auto patch = decode_body(*body, violations, id_member);
        if (id_member && *id_member != id) {
            violations.push_back({"id", "id cannot be changed"});
        }
        if (!store_.snapshot()->find(id)) {
            throw NotFoundError(id);
        }
        if (!violations.empty()) {
            throw ValidationError(std::move(violations));
        }
        res.set_content(geojson::serialize_feature(store_.update_space(id, patch)), kGeoJson);
    }));

    svr.Delete(R"(/api/spaces/([^/]+))", admin([this](const httplib::Request& req, httplib::Response& res) {
        store_.delete_space(req.matches[1]);
        res.status = 204;
    }));

    svr.Post("/api/admin/seed", admin([this](const httplib::Request& req, httplib::Response& res) {
        bool force = false;
        if (req.has_param("force")) {
            const std::string f = req.get_param_value("force");
            if (f == "true" || f == "1") {
                force = true;
            } else if (!(f == "false" || f == "0" || f.empty())) {
                send_error(res, 400, "bad_request", "force must be true or false");
                return;
            }
        }
        ordered_json j;
        j["created"] = store_.seed_default(force);
        res.set_content(j.dump(), kJson);
    }));

    svr.Get(R"(/photos/(.*))", [this](const httplib::Request& req, httplib::Response& res) {
        if (!config_.photos_dir || !serve_file(*config_.photos_dir, req.matches[1].str(), res)) {
            send_error(res, 404, "not_found", "no such photo");
        }
    });

    svr.Get(R"(/api(/.*)?)", [](const httplib::Request& req, httplib::Response& res) {
        send_error(res, 404, "not_found", "no such endpoint: " + req.path);
    });

    svr.Get(R"(/(.*))", [this](const httplib::Request& req, httplib::Response& res) {
        std::string relative = req.matches[1];
        if (relative.empty()) {
            relative = "index.html";
        }
        if (!config_.static_dir || is_traversal(relative)) {
            send_error(res, 404, "not_found", "not found");
            return;
        }
        if (serve_file(*config_.static_dir, relative, res)) {
            return;
        }
        // Asset requests must exist; any other path is a client-side route.
        if (relative.rfind("assets/", 0) == 0 || !serve_file(*config_.static_dir, "index.html", res)) {
            send_error(res, 404, "not_found", "not found");
        }
    });
}

}  // namespace rthkp::api

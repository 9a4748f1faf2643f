#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rthkp/geo.hpp"
#include "rthkp/registry.hpp"

namespace httplib {
class Server;
}

namespace rthkp::api {

struct ServiceConfig {
    /// Bearer token for mutation endpoints; unset disables them (503).
    std::optional<std::string> admin_token;
    /// Webmap bundle root served at "/"; unset disables static serving.
    std::optional<std::filesystem::path> static_dir;
    /// Root for "/photos/..."; unset disables photo serving.
    std::optional<std::filesystem::path> photos_dir;
    /// Adds Access-Control-Allow-Origin: * and answers preflight requests.
    bool permissive_cors = false;
};

enum class AuthResult { Authorized, Unauthorized, Disabled };

/// Compares in time that depends only on the lengths of the inputs.
bool constant_time_equals(std::string_view a, std::string_view b) noexcept;

/// Checks an Authorization header value against the configured token. Only
/// "Bearer <token>" is accepted.
AuthResult authenticate_admin(const std::optional<std::string_view>& authorization,
                              const std::optional<std::string>& admin_token) noexcept;

/// Parses "min_lon,min_lat,max_lon,max_lat"; nullopt if malformed or out of range.
std::optional<geo::BBox> parse_bbox_param(std::string_view text);

/// True when `request_path` contains a "..", "." or empty segment after
/// percent-decoding, or a backslash or NUL byte.
bool is_traversal(std::string_view request_path);

/// HTTP/JSON front end over a Store.
class ApiService {
public:
    ApiService(registry::Store& store, ServiceConfig config);
    ~ApiService();
    ApiService(const ApiService&) = delete;
    ApiService& operator=(const ApiService&) = delete;

    /// Binds without serving. Port 0 picks an ephemeral port. Returns the
    /// bound port, or -1 on failure.
    int bind(const std::string& host, int port);

    /// Serves on the bound socket until stop() is called.
    bool listen_after_bind();

    void stop();
    void wait_until_ready() const;

private:
    void install_routes();

    registry::Store& store_;
    ServiceConfig config_;
    std::unique_ptr<httplib::Server> server_;
};

/// Splits "host:port"; throws std::invalid_argument when malformed.
std::pair<std::string, int> parse_bind_address(std::string_view address);

}  // namespace rthkp::api

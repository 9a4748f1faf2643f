#include <doctest.h>

#include <fstream>
#include <set>

#include "rthkp/api_service.hpp"
#include "rthkp/geojson.hpp"
#include "support/generators.hpp"
#include "support/live_service.hpp"
#include "support/oracles.hpp"

using namespace rthkp;
using rthkp::test::LiveService;
using nlohmann::json;

namespace {

json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

std::set<std::string> names_in(const json& collection) {
    std::set<std::string> out;
    for (const auto& f : collection.at("features")) {
        out.insert(f.at("properties").at("name").get<std::string>());
    }
    return out;
}

std::string point_feature(double lon, double lat, const std::string& name,
                          const std::string& category = "taman_kota") {
    json j;
    j["type"] = "Feature";
    j["geometry"] = {{"type", "Point"}, {"coordinates", {lon, lat}}};
    j["properties"] = {{"name", name}, {"category", category}};
    return j.dump();
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("constant_time_equals") {
    CHECK(api::constant_time_equals("", ""));
    CHECK(api::constant_time_equals("abc", "abc"));
    CHECK_FALSE(api::constant_time_equals("abc", "abd"));
    CHECK_FALSE(api::constant_time_equals("abc", "abcd"));
    CHECK_FALSE(api::constant_time_equals("abcd", "abc"));
}

TEST_CASE("authenticate_admin") {
    const std::optional<std::string> token = "tok";
    CHECK(api::authenticate_admin(std::string_view("Bearer tok"), token) == api::AuthResult::Authorized);
    CHECK(api::authenticate_admin(std::string_view("Bearer tok "), token) == api::AuthResult::Unauthorized);
    CHECK(api::authenticate_admin(std::string_view("bearer tok"), token) == api::AuthResult::Unauthorized);
    CHECK(api::authenticate_admin(std::string_view("tok"), token) == api::AuthResult::Unauthorized);
    CHECK(api::authenticate_admin(std::nullopt, token) == api::AuthResult::Unauthorized);
    CHECK(api::authenticate_admin(std::string_view("Bearer tok"), std::nullopt) == api::AuthResult::Disabled);
}

TEST_CASE("parse_bbox_param") {
    auto b = api::parse_bbox_param("104.6,-3.1,104.9,-2.85");
    REQUIRE(b);
    CHECK(b->min_lon == 104.6);
    CHECK(b->max_lat == -2.85);
    CHECK_FALSE(api::parse_bbox_param(""));
    CHECK_FALSE(api::parse_bbox_param("1,2,3"));
    CHECK_FALSE(api::parse_bbox_param("1,2,3,4,5"));
    CHECK_FALSE(api::parse_bbox_param("a,2,3,4"));
    CHECK_FALSE(api::parse_bbox_param("3,2,1,4"));
    CHECK_FALSE(api::parse_bbox_param("0,-91,1,1"));
    CHECK_FALSE(api::parse_bbox_param("0,0,181,1"));
}

TEST_CASE("is_traversal") {
    CHECK_FALSE(api::is_traversal("index.html"));
    CHECK_FALSE(api::is_traversal("assets/app.js"));
    CHECK(api::is_traversal("../spaces.geojson"));
    CHECK(api::is_traversal("a/../../b"));
    CHECK(api::is_traversal("%2e%2e/x"));
    CHECK(api::is_traversal("a//b"));
    CHECK(api::is_traversal("a\\..\\b"));
    CHECK(api::is_traversal(""));
    CHECK(api::is_traversal("dir/"));
    CHECK(api::is_traversal(std::string_view("a\0b", 3)));
}

TEST_CASE("parse_bind_address") {
    CHECK(api::parse_bind_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
    CHECK_THROWS_AS(api::parse_bind_address("127.0.0.1"), std::invalid_argument);
    CHECK(api::parse_bind_address("[::1]:0") == std::pair<std::string, int>{"::1", 0});
    CHECK_THROWS_AS(api::parse_bind_address(":80"), std::invalid_argument);
    CHECK_THROWS_AS(api::parse_bind_address("h:70000"), std::invalid_argument);
    CHECK_THROWS_AS(api::parse_bind_address("h:x"), std::invalid_argument);
}

TEST_CASE("read endpoints on a seeded store") {
    LiveService svc;
    auto cli = svc.client();

    SUBCASE("health and categories") {
        auto h = body_of(cli.Get("/api/health"));
        CHECK(h["status"] == "ok");
        CHECK(h["revision"] == 1);
        auto c = body_of(cli.Get("/api/categories"));
        CHECK(c == json::array({"taman_kota", "taman_wisata_alam"}));
    }

    SUBCASE("category filters") {
        auto all = body_of(cli.Get("/api/spaces"));
        CHECK(all["features"].size() == 12);
        auto city = cli.Get("/api/spaces?category=taman_kota");
        REQUIRE(city);
        CHECK(city->status == 200);
        CHECK(city->get_header_value("Content-Type") == "application/geo+json");
        CHECK(body_of(city)["features"].size() == 10);
        auto nature = body_of(cli.Get("/api/spaces?category=taman_wisata_alam"));
        CHECK(names_in(nature) ==
              std::set<std::string>{"Taman Wisata Alam Pundi Kayu", "Taman Wisata Alam Pulau Kemaro"});
    }

    SUBCASE("list body matches the store") {
        auto r = cli.Get("/api/spaces?category=taman_kota");
        REQUIRE(r);
        CHECK(r->body == geojson::serialize_feature_collection(
                             svc.store().list_spaces({Category::CityPark, std::nullopt})));
    }

    SUBCASE("bbox filter") {
        const std::string q = "/api/spaces?bbox=104.74,-2.99,104.76,-2.97";
        auto got = body_of(cli.Get(q));
        std::set<std::string> expect;
        for (const auto& s : svc.store().list_spaces({})) {
            if (s.marker.lon >= 104.74 && s.marker.lon <= 104.76 && s.marker.lat >= -2.99 &&
                s.marker.lat <= -2.97) {
                expect.insert(s.name);
            }
        }
        CHECK_FALSE(expect.empty());
        CHECK(names_in(got) == expect);
    }

    SUBCASE("bad query parameters") {
        for (const char* path : {"/api/spaces?category=taman", "/api/spaces?bbox=1,2,3",
                                 "/api/spaces?bbox=5,0,1,1", "/api/nearest?lon=104.7",
                                 "/api/nearest?lon=x&lat=1", "/api/nearest?lon=104&lat=95",
                                 "/api/nearest?lon=104&lat=-3&k=0", "/api/nearest?lon=104&lat=-3&k=two",
                                 "/api/nearest?lon=104&lat=-3&k=-1"}) {
            CAPTURE(path);
            auto r = cli.Get(path);
            REQUIRE(r);
            CHECK(r->status == 400);
            auto j = json::parse(r->body);
            CHECK(j["status"] == 400);
            CHECK(j["code"] == "bad_request");
        }
    }

    SUBCASE("single record") {
        auto r = cli.Get("/api/spaces/taman-kambang-iwak");
        REQUIRE(r);
        CHECK(r->status == 200);
        auto j = json::parse(r->body);
        CHECK(j["properties"]["name"] == "Taman Kambang Iwak");
        auto missing = cli.Get("/api/spaces/nope");
        REQUIRE(missing);
        CHECK(missing->status == 404);
        CHECK(json::parse(missing->body)["code"] == "not_found");
        auto unknown = cli.Get("/api/unknown");
        REQUIRE(unknown);
        CHECK(unknown->status == 404);
    }

    SUBCASE("nearest matches brute force") {
        test::Rng rng(42);
        const auto snap = svc.store().snapshot();
        for (int i = 0; i < 25; ++i) {
            const geo::GeoPoint o = test::random_point_in(rng, registry::kPalembangBox);
            const std::size_t ks[] = {1, 3, 5, 12, 20};
            const std::size_t k = ks[test::pick(rng, 5)];
            auto got = body_of(cli.Get("/api/nearest?lon=" + geojson::format_coordinate(o.lon) +
                                       "&lat=" + geojson::format_coordinate(o.lat) + "&k=" + std::to_string(k)));
            const geo::GeoPoint q{geojson::quantize_coordinate(o.lon), geojson::quantize_coordinate(o.lat)};
            const auto expect =
                test::brute_force_knn(snap->index().entries(), q, k, geo::haversine_distance);
            REQUIRE(got.size() == expect.size());
            for (std::size_t j = 0; j < expect.size(); ++j) {
                CHECK(got[j]["id"] == expect[j].id);
                CHECK(got[j]["distance_m"].get<double>() == doctest::Approx(expect[j].distance_m).epsilon(1e-12));
                CHECK(got[j]["name"] == snap->get(expect[j].id).name);
            }
        }
        auto dflt = body_of(cli.Get("/api/nearest?lon=104.76&lat=-2.99"));
        CHECK(dflt.size() == 5);
    }
}

TEST_CASE("admin authentication") {
    LiveService svc;
    auto cli = svc.client();
    const std::string body = point_feature(104.75, -2.98, "Taman Baru");

    auto none = cli.Post("/api/spaces", body, "application/json");
    REQUIRE(none);
    CHECK(none->status == 401);
    CHECK(json::parse(none->body)["code"] == "unauthorized");

    std::string flipped = test::kTestToken;
    flipped[3] ^= 1;
    auto wrong = cli.Post("/api/spaces", LiveService::auth(flipped), body, "application/json");
    REQUIRE(wrong);
    CHECK(wrong->status == 401);

    for (const char* path : {"/api/spaces/taman-monpera"}) {
        auto d = cli.Delete(path);
        REQUIRE(d);
        CHECK(d->status == 401);
    }
    auto seed = cli.Post("/api/admin/seed?force=true", "", "application/json");
    REQUIRE(seed);
    CHECK(seed->status == 401);
    CHECK(svc.store().revision() == 1);
}

TEST_CASE("fuzzed authorization headers never authenticate") {
    LiveService svc;
    auto cli = svc.client();
    test::Rng rng(7);
    const std::string token = test::kTestToken;
    const std::string body = point_feature(104.75, -2.98, "Intruder");
    int accepted = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string value;
        switch (i % 6) {
            case 0: {
                std::string t = token;
                t[rng() % t.size()] ^= static_cast<char>(1 + rng() % 0x3f);
                value = "Bearer " + t;
                break;
            }
            case 1:
                value = "Bearer " + token.substr(0, rng() % token.size());
                break;
            case 2:
                value = "Bearer " + token + static_cast<char>('a' + rng() % 26);
                break;
            case 3:
                {
                const char* schemes[] = {"bearer ", "Basic ", "Token ", "", "Bearer  "};
                value = schemes[test::pick(rng, 5)] + token;
            }
                break;
            case 4:
                value = "Bearer " + test::random_slug(rng, static_cast<std::size_t>(i));
                break;
            default:
                for (std::size_t n = rng() % 40; n > 0; --n) {
                    value.push_back(static_cast<char>(0x21 + rng() % 0x5e));
                }
                break;
        }
        if (value == "Bearer " + token) {
            continue;
        }
        auto r = cli.Post("/api/spaces", {{"Authorization", value}}, body, "application/json");
        REQUIRE(r);
        if (r->status != 401) {
            ++accepted;
            MESSAGE("accepted header: " << value);
        }
    }
    CHECK(accepted == 0);
    CHECK(svc.store().revision() == 1);
}

TEST_CASE("mutations are disabled without a configured token") {
    api::ServiceConfig config;
    LiveService svc(config);
    auto cli = svc.client();
    auto r = cli.Post("/api/spaces", LiveService::auth(), point_feature(104.75, -2.98, "X"), "application/json");
    REQUIRE(r);
    CHECK(r->status == 503);
    CHECK(json::parse(r->body)["code"] == "admin_disabled");
    auto g = cli.Get("/api/spaces");
    REQUIRE(g);
    CHECK(g->status == 200);
}

TEST_CASE("create, update and delete through the API") {
    LiveService svc;
    auto cli = svc.client();
    const auto auth = LiveService::auth();

    SUBCASE("read your writes") {
        auto c = cli.Post("/api/spaces", auth, point_feature(104.7512, -2.9801, "Taman Baru"), "application/json");
        REQUIRE(c);
        CHECK(c->status == 201);
        CHECK(c->get_header_value("Location") == "/api/spaces/taman-baru");
        auto created = json::parse(c->body);
        CHECK(created["properties"]["id"] == "taman-baru");

        auto g = cli.Get("/api/spaces/taman-baru");
        REQUIRE(g);
        CHECK(g->status == 200);
        CHECK(json::parse(g->body) == created);
        CHECK(body_of(cli.Get("/api/spaces?category=taman_kota"))["features"].size() == 11);

        auto near = body_of(cli.Get("/api/nearest?lon=104.7512&lat=-2.9801&k=1"));
        CHECK(near[0]["id"] == "taman-baru");
        CHECK(near[0]["distance_m"] == 0.0);

        auto dup = cli.Post("/api/spaces", auth, point_feature(104.7, -2.9, "Taman Baru"), "application/json");
        REQUIRE(dup);
        CHECK(json::parse(dup->body)["properties"]["id"] == "taman-baru-2");
    }

    SUBCASE("validation failures") {
        auto r = cli.Post("/api/spaces", auth, point_feature(104.75, 95.0, "Bad"), "application/json");
        REQUIRE(r);
        CHECK(r->status == 422);
        auto j = json::parse(r->body);
        CHECK(j["code"] == "validation");
        REQUIRE(j["details"].is_array());
        bool found = false;
        for (const auto& d : j["details"]) {
            found = found || d["message"] == "lat out of range";
        }
        CHECK(found);

        auto bad_cat = cli.Post("/api/spaces", auth, point_feature(104.75, -2.9, "X", "hutan"), "application/json");
        REQUIRE(bad_cat);
        CHECK(bad_cat->status == 422);

        auto no_name = cli.Post("/api/spaces", auth,
                                R"({"geometry":{"type":"Point","coordinates":[104.7,-2.9]},"properties":{"category":"taman_kota"}})",
                                "application/json");
        REQUIRE(no_name);
        CHECK(no_name->status == 422);

        auto malformed = cli.Post("/api/spaces", auth, "{not json", "application/json");
        REQUIRE(malformed);
        CHECK(malformed->status == 400);
        CHECK(svc.store().revision() == 1);
    }

    SUBCASE("update") {
        auto u = cli.Put("/api/spaces/taman-monpera", auth,
                         R"({"properties":{"description":"Monumen Perjuangan Rakyat","facilities":["toilet"]}})",
                         "application/json");
        REQUIRE(u);
        CHECK(u->status == 200);
        auto g = body_of(cli.Get("/api/spaces/taman-monpera"));
        CHECK(g["properties"]["description"] == "Monumen Perjuangan Rakyat");
        CHECK(g["properties"]["facilities"] == json::array({"toilet"}));
        CHECK(g["properties"]["name"] == "Taman Monpera");

        auto moved = cli.Put("/api/spaces/taman-monpera", auth,
                             R"({"geometry":{"type":"Point","coordinates":[104.7601,-2.9872]}})", "application/json");
        REQUIRE(moved);
        CHECK(moved->status == 200);
        CHECK(svc.store().get_space("taman-monpera").marker.lon == 104.7601);

        auto rename_id = cli.Put("/api/spaces/taman-monpera", auth, R"({"properties":{"id":"other"}})",
                                 "application/json");
        REQUIRE(rename_id);
        CHECK(rename_id->status == 422);
        auto missing = cli.Put("/api/spaces/nope", auth, R"({"properties":{"name":"x"}})", "application/json");
        REQUIRE(missing);
        CHECK(missing->status == 404);
    }

    SUBCASE("delete") {
        auto d = cli.Delete("/api/spaces/taman-monpera", auth);
        REQUIRE(d);
        CHECK(d->status == 204);
        auto g = cli.Get("/api/spaces/taman-monpera");
        REQUIRE(g);
        CHECK(g->status == 404);
        auto again = cli.Delete("/api/spaces/taman-monpera", auth);
        REQUIRE(again);
        CHECK(again->status == 404);
    }

    SUBCASE("seed") {
        auto conflict = cli.Post("/api/admin/seed", auth, "", "application/json");
        REQUIRE(conflict);
        CHECK(conflict->status == 409);
        auto forced = cli.Post("/api/admin/seed?force=true", auth, "", "application/json");
        REQUIRE(forced);
        CHECK(forced->status == 200);
        CHECK(json::parse(forced->body) == json{{"created", 12}});
    }
}

TEST_CASE("empty store seeds over the API") {
    LiveService svc(LiveService::default_config(), false);
    auto cli = svc.client();
    CHECK(body_of(cli.Get("/api/spaces"))["features"].empty());
    auto r = cli.Post("/api/admin/seed", LiveService::auth(), "", "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(body_of(cli.Get("/api/spaces"))["features"].size() == 12);
}

TEST_CASE("static and photo serving") {
    test::TempDir web;
    write_text(web / "index.html", "<!doctype html><title>map</title>");
    write_text(web.path() / "assets" / "app.js", "console.log(1)");
    auto config = LiveService::default_config();
    config.static_dir = web.path();
    LiveService svc(config);
    write_text(svc.dir().path() / "photos" / "monpera.jpg", "JPEGDATA");
    auto cli = svc.client();

    auto idx = cli.Get("/");
    REQUIRE(idx);
    CHECK(idx->status == 200);
    auto direct = cli.Get("/index.html");
    REQUIRE(direct);
    CHECK(direct->status == 200);
    CHECK(direct->body.find("<title>map</title>") != std::string::npos);

    auto route = cli.Get("/spaces/taman-monpera");
    REQUIRE(route);
    CHECK(route->status == 200);
    CHECK(route->body == direct->body);

    auto js = cli.Get("/assets/app.js");
    REQUIRE(js);
    CHECK(js->status == 200);
    CHECK(js->get_header_value("Content-Type").rfind("text/javascript", 0) == 0);
    auto missing_asset = cli.Get("/assets/missing.js");
    REQUIRE(missing_asset);
    CHECK(missing_asset->status == 404);

    auto photo = cli.Get("/photos/monpera.jpg");
    REQUIRE(photo);
    CHECK(photo->status == 200);
    CHECK(photo->body == "JPEGDATA");

    for (const char* path : {"/photos/../spaces.geojson", "/photos/%2e%2e/spaces.geojson",
                             "/photos/..%2fspaces.geojson", "/..%2f..%2fetc/passwd"}) {
        CAPTURE(path);
        auto r = cli.Get(path);
        REQUIRE(r);
        CHECK(r->status != 200);
        CHECK(r->body.find("FeatureCollection") == std::string::npos);
    }
}

TEST_CASE("permissive CORS") {
    auto config = LiveService::default_config();
    config.permissive_cors = true;
    LiveService svc(config);
    auto cli = svc.client();
    auto g = cli.Get("/api/health");
    REQUIRE(g);
    CHECK(g->get_header_value("Access-Control-Allow-Origin") == "*");
    auto pre = cli.Options("/api/spaces");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    LiveService strict;
    auto sc = strict.client();
    auto s = sc.Get("/api/health");
    REQUIRE(s);
    CHECK_FALSE(s->has_header("Access-Control-Allow-Origin"));
}

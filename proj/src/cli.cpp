#include "rthkp/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rthkp/api_service.hpp"
#include "rthkp/atomic_file.hpp"
#include "rthkp/geojson.hpp"
#include "rthkp/registry.hpp"

namespace rthkp::cli {

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : std::move(fallback);
}

std::vector<GreenSpace> parse_file(const std::string& file) {
    const std::string text = persist::read_file(file);
    auto outcome = geojson::parse_feature_collection(text);
    if (auto* failure = std::get_if<geojson::ParseFailure>(&outcome)) {
        throw registry::StoreFormatError(file, std::move(*failure));
    }
    return std::get<std::vector<GreenSpace>>(std::move(outcome));
}

void print_table(std::ostream& out, const std::vector<GreenSpace>& spaces) {
    std::size_t id_width = 2;
    for (const auto& s : spaces) {
        id_width = std::max(id_width, s.id.size());
    }
    out << std::left << std::setw(static_cast<int>(id_width)) << "ID" << "  " << std::setw(17) << "CATEGORY"
        << "  " << std::setw(12) << "LON" << "  " << std::setw(12) << "LAT" << "  NAME\n";
    for (const auto& s : spaces) {
        out << std::setw(static_cast<int>(id_width)) << s.id << "  " << std::setw(17) << to_literal(s.category)
            << "  " << std::setw(12) << geojson::format_coordinate(s.marker.lon) << "  " << std::setw(12)
            << geojson::format_coordinate(s.marker.lat) << "  " << s.name << "\n";
    }
}

int serve(const std::string& data_dir, const std::string& bind, const std::string& static_dir, bool cors,
          std::ostream& err) {
    const auto [host, port] = api::parse_bind_address(bind);

    // Signals are taken by a dedicated thread; server threads inherit the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    registry::DataDirLock lock(data_dir);
    registry::Store store(registry::Store::file_in(data_dir));

    api::ServiceConfig config;
    if (const char* token = std::getenv("RTHKP_ADMIN_TOKEN"); token != nullptr && *token != '\0') {
        config.admin_token = token;
    } else {
        err << "RTHKP_ADMIN_TOKEN is not set; mutation endpoints are disabled\n";
    }
    if (!static_dir.empty()) {
        config.static_dir = static_dir;
    }
    config.photos_dir = std::filesystem::path(data_dir) / registry::kPhotosDirName;
    config.permissive_cors = cors;

    api::ApiService service(store, config);
    const int bound = service.bind(host, port);
    if (bound < 0) {
        err << "cannot bind " << bind << "\n";
        return kExitFailure;
    }
    err << "serving " << store.snapshot()->size() << " green spaces on " << host << ":" << bound << "\n"
        << std::flush;

    std::thread waiter([&service, signals] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    const bool ok = service.listen_after_bind();
    // Wake the waiter if the server stopped on its own.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Registry and map service for urban green open spaces", "rthkp"};
    app.require_subcommand(1);

    const std::string default_dir = env_or("RTHKP_DATA_DIR", "./data");
    std::string data_dir = default_dir;
    const auto add_data_dir = [&](CLI::App* sub) {
        sub->add_option("--data-dir", data_dir, "Data directory (env RTHKP_DATA_DIR)")->capture_default_str();
    };

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/JSON service until interrupted");
    std::string bind = env_or("RTHKP_BIND", "127.0.0.1:8080");
    std::string static_dir = env_or("RTHKP_STATIC_DIR", "");
    bool cors = false;
    serve_cmd->add_option("--bind", bind, "HOST:PORT to listen on (env RTHKP_BIND)")->capture_default_str();
    serve_cmd->add_option("--static-dir", static_dir, "Webmap bundle directory (env RTHKP_STATIC_DIR)");
    serve_cmd->add_flag("--cors", cors, "Allow cross-origin requests");
    add_data_dir(serve_cmd);

    auto* seed_cmd = app.add_subcommand("seed", "Load the built-in park inventory");
    bool force = false;
    seed_cmd->add_flag("--force", force, "Replace existing records");
    add_data_dir(seed_cmd);

    auto* import_cmd = app.add_subcommand("import", "Import a GeoJSON FeatureCollection");
    std::string import_file;
    bool replace = false;
    bool merge = false;
    import_cmd->add_option("FILE", import_file, "GeoJSON file")->required();
    auto* replace_opt = import_cmd->add_flag("--replace", replace, "Swap the whole store for FILE");
    auto* merge_opt = import_cmd->add_flag("--merge", merge, "Upsert records by id (default)");
    replace_opt->excludes(merge_opt);
    add_data_dir(import_cmd);

    auto* export_cmd = app.add_subcommand("export", "Write the canonical GeoJSON document");
    std::string export_file;
    export_cmd->add_option("-o,--output", export_file, "Output file (default stdout)");
    add_data_dir(export_cmd);

    auto* validate_cmd = app.add_subcommand("validate", "Check a GeoJSON file; exit 0 iff clean");
    std::string validate_file;
    validate_cmd->add_option("FILE", validate_file, "GeoJSON file")->required();

    auto* list_cmd = app.add_subcommand("list", "Print records in ascending id order");
    std::string category;
    std::string format = "table";
    list_cmd->add_option("--category", category, "taman_kota or taman_wisata_alam")
        ->check(CLI::IsMember({"taman_kota", "taman_wisata_alam"}));
    list_cmd->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}));
    add_data_dir(list_cmd);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "rthkp: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    const std::filesystem::path store_file = registry::Store::file_in(data_dir);
    try {
        if (serve_cmd->parsed()) {
            return serve(data_dir, bind, static_dir, cors, err);
        }
        if (seed_cmd->parsed()) {
            registry::DataDirLock lock(data_dir);
            registry::Store store(store_file);
            const std::size_t created = store.seed_default(force);
            out << nlohmann::json{{"created", created}}.dump() << "\n";
            return kExitOk;
        }
        if (import_cmd->parsed()) {
            auto spaces = parse_file(import_file);
            registry::DataDirLock lock(data_dir);
            registry::Store store(store_file);
            const auto summary =
                store.import_spaces(std::move(spaces), replace ? registry::ImportMode::Replace
                                                               : registry::ImportMode::Merge);
            nlohmann::ordered_json j;
            j["created"] = summary.created;
            j["updated"] = summary.updated;
            j["removed"] = summary.removed;
            out << j.dump() << "\n";
            return kExitOk;
        }
        if (export_cmd->parsed()) {
            registry::Store store(store_file);
            const std::string doc = store.export_document();
            if (export_file.empty() || export_file == "-") {
                out << doc;
            } else {
                persist::write_file_atomically(export_file, doc);
            }
            return kExitOk;
        }
        if (validate_cmd->parsed()) {
            const auto spaces = parse_file(validate_file);
            nlohmann::ordered_json j;
            j["valid"] = true;
            j["features"] = spaces.size();
            out << j.dump() << "\n";
            return kExitOk;
        }
        if (list_cmd->parsed()) {
            registry::Store store(store_file);
            registry::ListFilter filter;
            if (!category.empty()) {
                filter.category = category_from_literal(category);
            }
            const auto spaces = store.list_spaces(filter);
            if (format == "json") {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (const auto& s : spaces) {
                    arr.push_back(geojson::properties_json(s));
                }
                out << arr.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << "\n";
            } else {
                print_table(out, spaces);
            }
            return kExitOk;
        }
    } catch (const std::invalid_argument& e) {
        err << "rthkp: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "rthkp: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace rthkp::cli

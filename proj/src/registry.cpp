#include "rthkp/registry.hpp"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <fstream>

namespace rthkp::registry {

namespace {

std::vector<index::IndexEntry> index_entries(const std::map<std::string, GreenSpace>& records) {
    std::vector<index::IndexEntry> out;
    out.reserve(records.size());
    for (const auto& [id, space] : records) {
        out.push_back({id, space.marker, space.bbox()});
    }
    return out;
}

/// Coordinates are stored at file precision; validation sees the stored values.
void check(GreenSpace& space) {
    geojson::quantize_coordinates(space);
    auto violations = validate_space(space);
    if (!violations.empty()) {
        throw ValidationError(std::move(violations));
    }
}

void stamp_missing(GreenSpace& space, Timestamp now) {
    if (!space.created_at) {
        space.created_at = space.updated_at ? std::min(*space.updated_at, now) : now;
    }
    if (!space.updated_at) {
        space.updated_at = std::max(*space.created_at, now);
    }
}

}  // namespace

Timestamp system_now() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

Snapshot::Snapshot(std::map<std::string, GreenSpace> records, std::uint64_t revision)
    : records_(std::move(records)),
      index_(index::SpatialIndex::build(index_entries(records_))),
      revision_(revision) {}

const GreenSpace* Snapshot::find(const std::string& id) const {
    auto it = records_.find(id);
    return it == records_.end() ? nullptr : &it->second;
}

const GreenSpace& Snapshot::get(const std::string& id) const {
    if (const GreenSpace* space = find(id)) {
        return *space;
    }
    throw NotFoundError(id);
}

std::vector<GreenSpace> Snapshot::list(const ListFilter& filter) const {
    std::vector<GreenSpace> out;
    const auto keep = [&](const GreenSpace& s) { return !filter.category || s.category == *filter.category; };
    if (filter.bbox) {
        for (const auto& id : index_.query_bbox(*filter.bbox)) {
            const GreenSpace& s = records_.at(id);
            if (keep(s)) {
                out.push_back(s);
            }
        }
    } else {
        for (const auto& [id, s] : records_) {
            if (keep(s)) {
                out.push_back(s);
            }
        }
    }
    return out;
}

std::vector<index::Neighbor> Snapshot::nearest(const geo::GeoPoint& origin, std::size_t k) const {
    return index_.k_nearest(origin, k);
}

Store::Store(std::filesystem::path file, StoreOptions options)
    : path_(std::move(file)), options_(std::move(options)) {
    if (!options_.clock) {
        options_.clock = system_now;
    }
    Records records;
    std::error_code ec;
    if (std::filesystem::exists(path_, ec)) {
        const std::string text = persist::read_file(path_);
        auto outcome = geojson::parse_feature_collection(text);
        if (auto* failure = std::get_if<geojson::ParseFailure>(&outcome)) {
            throw StoreFormatError(path_, std::move(*failure));
        }
        const Timestamp now = options_.clock();
        for (auto& space : std::get<std::vector<GreenSpace>>(outcome)) {
            stamp_missing(space, now);
            geojson::quantize_coordinates(space);
            std::string id = space.id;
            records.emplace(std::move(id), std::move(space));
        }
    } else if (ec) {
        throw PersistenceError("cannot access " + path_.string() + ": " + ec.message());
    }
    current_ = std::make_shared<const Snapshot>(std::move(records), 0);
}

std::shared_ptr<const Snapshot> Store::snapshot() const {
    std::lock_guard lock(publish_mu_);
    return current_;
}

void Store::commit(Records next) {
    const auto base = snapshot();
    std::vector<GreenSpace> values;
    values.reserve(next.size());
    for (const auto& [id, space] : next) {
        values.push_back(space);
    }
    auto successor = std::make_shared<const Snapshot>(std::move(next), base->revision() + 1);
    persist::write_file_atomically(path_, geojson::serialize_feature_collection(std::move(values)),
                                   options_.fault_hook);
    std::lock_guard lock(publish_mu_);
    current_ = std::move(successor);
}

std::string Store::unique_id(const Records& records, const std::string& name) const {
    std::string base = slugify(name);
    if (base.empty()) {
        base = "space";
    }
    if (!records.contains(base)) {
        return base;
    }
    for (std::size_t n = 2;; ++n) {
        std::string candidate = base + "-" + std::to_string(n);
        if (!records.contains(candidate)) {
            return candidate;
        }
    }
}

GreenSpace Store::create_space(const SpaceDraft& draft) {
    std::lock_guard writer(writer_mu_);
    Records next = snapshot()->records();

    GreenSpace space;
    space.name = draft.name;
    space.category = draft.category;
    space.marker = draft.marker;
    space.boundary = draft.boundary;
    space.description = draft.description;
    space.facilities = draft.facilities;
    space.photos = draft.photos;
    space.id = unique_id(next, draft.name);
    space.created_at = space.updated_at = options_.clock();
    check(space);

    next.emplace(space.id, space);
    commit(std::move(next));
    return space;
}

GreenSpace Store::update_space(const std::string& id, const SpacePatch& patch) {
    std::lock_guard writer(writer_mu_);
    Records next = snapshot()->records();
    auto it = next.find(id);
    if (it == next.end()) {
        throw NotFoundError(id);
    }
    GreenSpace space = it->second;
    if (patch.name) {
        space.name = *patch.name;
    }
    if (patch.category) {
        space.category = *patch.category;
    }
    if (patch.marker) {
        space.marker = *patch.marker;
    }
    if (patch.boundary) {
        space.boundary = *patch.boundary;
    }
    if (patch.description) {
        space.description = *patch.description;
    }
    if (patch.facilities) {
        space.facilities = *patch.facilities;
    }
    if (patch.photos) {
        space.photos = *patch.photos;
    }
    space.updated_at = std::max(options_.clock(), space.created_at.value_or(Timestamp{}));
    check(space);

    it->second = space;
    commit(std::move(next));
    return space;
}

void Store::delete_space(const std::string& id) {
    std::lock_guard writer(writer_mu_);
    Records next = snapshot()->records();
    if (next.erase(id) == 0) {
        throw NotFoundError(id);
    }
    commit(std::move(next));
}

std::size_t Store::seed_default(bool force) {
    std::lock_guard writer(writer_mu_);
    if (snapshot()->size() != 0 && !force) {
        throw ConflictError("store already holds " + std::to_string(snapshot()->size()) +
                            " records; seeding requires force");
    }
    Records next;
    const Timestamp now = options_.clock();
    for (const SeedSpace& seed : default_inventory()) {
        GreenSpace space;
        space.name = seed.name;
        space.category = seed.category;
        space.marker = seed.marker;
        space.id = unique_id(next, space.name);
        space.created_at = space.updated_at = now;
        check(space);
        next.emplace(space.id, std::move(space));
    }
    const std::size_t created = next.size();
    commit(std::move(next));
    return created;
}

ImportSummary Store::import_spaces(std::vector<GreenSpace> spaces, ImportMode mode) {
    std::lock_guard writer(writer_mu_);
    const auto base = snapshot();
    Records next = mode == ImportMode::Merge ? base->records() : Records{};
    ImportSummary summary;
    const Timestamp now = options_.clock();
    for (auto& space : spaces) {
        const GreenSpace* existing = base->find(space.id);
        if (existing != nullptr) {
            if (!space.created_at) {
                space.created_at = existing->created_at;
            }
            ++summary.updated;
        } else {
            ++summary.created;
        }
        stamp_missing(space, now);
        check(space);
        if (next.contains(space.id) && mode == ImportMode::Replace) {
            throw ValidationError({{"id", "duplicate id \"" + space.id + "\""}});
        }
        std::string id = space.id;
        next.insert_or_assign(std::move(id), std::move(space));
    }
    if (mode == ImportMode::Replace) {
        summary.removed = static_cast<std::size_t>(std::count_if(
            base->records().begin(), base->records().end(),
            [&](const auto& kv) { return !next.contains(kv.first); }));
    }
    commit(std::move(next));
    return summary;
}

std::string Store::export_document() const {
    const auto snap = snapshot();
    std::vector<GreenSpace> values;
    values.reserve(snap->size());
    for (const auto& [id, space] : snap->records()) {
        values.push_back(space);
    }
    return geojson::serialize_feature_collection(std::move(values));
}

const std::vector<SeedSpace>& default_inventory() {
    static const std::vector<SeedSpace> inventory{
        {"Taman Gelora Sriwijaya", Category::CityPark, {104.7889, -3.0144}},
        {"Taman Dekranasda", Category::CityPark, {104.7468, -2.9862}},
        {"Taman Kampung Kapiten", Category::CityPark, {104.7614, -2.9961}},
        {"Taman Benteng Kuto Besak", Category::CityPark, {104.7598, -2.9916}},
        {"Taman Monpera", Category::CityPark, {104.7593, -2.9869}},
        {"Taman Bawah Jembatan Ampera", Category::CityPark, {104.7636, -2.9920}},
        {"Taman Masjid Agung", Category::CityPark, {104.7605, -2.9877}},
        {"Taman Kambang Iwak", Category::CityPark, {104.7458, -2.9845}},
        {"Taman Masjid Taqwa", Category::CityPark, {104.7420, -2.9770}},
        {"Taman POM IX", Category::CityPark, {104.7500, -2.9780}},
        // Spelled as in the office's own listing; the park is also written "Punti Kayu".
        {"Taman Wisata Alam Pundi Kayu", Category::NatureTourismPark, {104.7176, -2.9418}},
        {"Taman Wisata Alam Pulau Kemaro", Category::NatureTourismPark, {104.8235, -2.9785}},
    };
    return inventory;
}

namespace {

bool process_alive(pid_t pid) {
    return pid > 0 && (::kill(pid, 0) == 0 || errno == EPERM);
}

std::optional<pid_t> lock_owner(const std::filesystem::path& lock_path) {
    std::ifstream in(lock_path);
    long pid = 0;
    if (in >> pid) {
        return static_cast<pid_t>(pid);
    }
    return std::nullopt;
}

}  // namespace

DataDirLock::DataDirLock(const std::filesystem::path& data_dir) : path_(data_dir / kLockFileName) {
    std::error_code ec;
    std::filesystem::create_directories(data_dir, ec);
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
        if (fd >= 0) {
            const std::string pid = std::to_string(::getpid()) + "\n";
            const bool ok = ::write(fd, pid.data(), pid.size()) == static_cast<ssize_t>(pid.size());
            ::close(fd);
            if (!ok) {
                std::filesystem::remove(path_, ec);
                throw PersistenceError("cannot write lock file " + path_.string());
            }
            return;
        }
        if (errno != EEXIST) {
            throw PersistenceError("cannot create lock file " + path_.string());
        }
        const auto owner = lock_owner(path_);
        if (owner && process_alive(*owner)) {
            throw ConflictError("data directory is locked by process " + std::to_string(*owner) + " (" +
                                path_.string() + ")");
        }
        // Stale lock from a process that is gone.
        std::filesystem::remove(path_, ec);
    }
    throw ConflictError("data directory lock " + path_.string() + " is contended");
}

DataDirLock::~DataDirLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
}

bool DataDirLock::is_held(const std::filesystem::path& data_dir) {
    const auto owner = lock_owner(data_dir / kLockFileName);
    return owner && process_alive(*owner);
}

}  // namespace rthkp::registry

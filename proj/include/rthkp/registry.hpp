#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rthkp/atomic_file.hpp"
#include "rthkp/errors.hpp"
#include "rthkp/geojson.hpp"
#include "rthkp/model.hpp"
#include "rthkp/spatial_index.hpp"

namespace rthkp::registry {

inline constexpr const char* kStoreFileName = "spaces.geojson";
inline constexpr const char* kPhotosDirName = "photos";
inline constexpr const char* kLockFileName = ".lock";

/// Source of "now" for record timestamps; tests inject a fixed clock.
using Clock = std::function<Timestamp()>;

Timestamp system_now();

/// The file could not be parsed into a valid record set.
class StoreFormatError : public PersistenceError {
public:
    StoreFormatError(const std::filesystem::path& path, geojson::ParseFailure failure)
        : PersistenceError(path.string() + ": " + failure.describe()), failure_(std::move(failure)) {}

    const geojson::ParseFailure& failure() const noexcept { return failure_; }

private:
    geojson::ParseFailure failure_;
};

/// A new record before an id and timestamps are assigned.
struct SpaceDraft {
    std::string name;
    Category category = Category::CityPark;
    geo::GeoPoint marker;
    std::optional<geo::GeoPolygon> boundary;
    std::string description;
    std::vector<std::string> facilities;
    std::vector<std::string> photos;
};

/// Fields to change; unset members are left alone. `boundary` set to an
/// empty optional removes the boundary.
struct SpacePatch {
    std::optional<std::string> name;
    std::optional<Category> category;
    std::optional<geo::GeoPoint> marker;
    std::optional<std::optional<geo::GeoPolygon>> boundary;
    std::optional<std::string> description;
    std::optional<std::vector<std::string>> facilities;
    std::optional<std::vector<std::string>> photos;
};

struct ListFilter {
    std::optional<Category> category;
    std::optional<geo::BBox> bbox;
};

enum class ImportMode { Merge, Replace };

struct ImportSummary {
    std::size_t created = 0;
    std::size_t updated = 0;
    std::size_t removed = 0;
};

/// Records and index from one committed revision.
class Snapshot {
public:
    Snapshot() = default;
    Snapshot(std::map<std::string, GreenSpace> records, std::uint64_t revision);

    std::uint64_t revision() const noexcept { return revision_; }
    std::size_t size() const noexcept { return records_.size(); }
    const std::map<std::string, GreenSpace>& records() const noexcept { return records_; }
    const index::SpatialIndex& index() const noexcept { return index_; }

    /// Throws NotFoundError.
    const GreenSpace& get(const std::string& id) const;
    const GreenSpace* find(const std::string& id) const;

    /// Ascending by id; the bbox filter goes through the spatial index.
    std::vector<GreenSpace> list(const ListFilter& filter = {}) const;

    std::vector<index::Neighbor> nearest(const geo::GeoPoint& origin, std::size_t k) const;

private:
    std::map<std::string, GreenSpace> records_;
    index::SpatialIndex index_;
    std::uint64_t revision_ = 0;
};

struct StoreOptions {
    Clock clock = system_now;
    persist::FaultHook fault_hook;
};

/// The authoritative, file-backed collection of green spaces.
///
/// Readers take a snapshot and never wait on a file write. Mutations are
/// serialized; each one builds a successor snapshot, persists it with an
/// atomic rename, and only then publishes it. A failed write leaves both the
/// file and the published snapshot untouched.
class Store {
public:
    /// Opens `file`. A missing file yields an empty store; the file is
    /// created on the first commit. Throws StoreFormatError or
    /// PersistenceError; the file is never modified by opening.
    explicit Store(std::filesystem::path file, StoreOptions options = {});

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    static std::filesystem::path file_in(const std::filesystem::path& data_dir) {
        return data_dir / kStoreFileName;
    }

    const std::filesystem::path& path() const noexcept { return path_; }

    std::shared_ptr<const Snapshot> snapshot() const;
    std::uint64_t revision() const { return snapshot()->revision(); }

    GreenSpace get_space(const std::string& id) const { return snapshot()->get(id); }
    std::vector<GreenSpace> list_spaces(const ListFilter& filter = {}) const {
        return snapshot()->list(filter);
    }
    std::vector<index::Neighbor> k_nearest(const geo::GeoPoint& origin, std::size_t k) const {
        return snapshot()->nearest(origin, k);
    }

    /// Throws ValidationError or PersistenceError.
    GreenSpace create_space(const SpaceDraft& draft);
    /// Throws NotFoundError, ValidationError or PersistenceError.
    GreenSpace update_space(const std::string& id, const SpacePatch& patch);
    /// Throws NotFoundError or PersistenceError.
    void delete_space(const std::string& id);

    /// Loads the built-in inventory of 12 parks. Throws ConflictError when
    /// the store is not empty and `force` is false; with `force` the store
    /// content is replaced. Returns the number of records created.
    std::size_t seed_default(bool force = false);

    /// Merge upserts by id; Replace swaps the whole record set.
    ImportSummary import_spaces(std::vector<GreenSpace> spaces, ImportMode mode);

    /// Canonical file content of the current snapshot.
    std::string export_document() const;

private:
    using Records = std::map<std::string, GreenSpace>;

    void commit(Records next);
    std::string unique_id(const Records& records, const std::string& name) const;

    std::filesystem::path path_;
    StoreOptions options_;
    mutable std::mutex publish_mu_;  // guards current_ only for the pointer swap
    std::shared_ptr<const Snapshot> current_;
    std::mutex writer_mu_;           // at most one mutation in flight
};

/// One entry of the built-in inventory.
struct SeedSpace {
    const char* name;
    Category category;
    geo::GeoPoint marker;
};

/// The 10 city parks and 2 nature tourism parks. Coordinates are fixture
/// placeholders inside kPalembangBox, not surveyed positions.
const std::vector<SeedSpace>& default_inventory();

inline constexpr geo::BBox kPalembangBox{104.60, -3.10, 104.90, -2.85};

/// Exclusive advisory lock on a data directory, held as `<dir>/.lock`
/// containing the owner's pid. A lock left by a dead process is taken over.
class DataDirLock {
public:
    /// Throws ConflictError when another live process holds the lock.
    explicit DataDirLock(const std::filesystem::path& data_dir);
    DataDirLock(const DataDirLock&) = delete;
    DataDirLock& operator=(const DataDirLock&) = delete;
    ~DataDirLock();

    static bool is_held(const std::filesystem::path& data_dir);

private:
    std::filesystem::path path_;
};

}  // namespace rthkp::registry

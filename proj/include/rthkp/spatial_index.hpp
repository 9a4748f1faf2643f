#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rthkp/errors.hpp"
#include "rthkp/geo.hpp"

namespace rthkp::index {

struct IndexEntry {
    std::string id;
    geo::GeoPoint marker;
    geo::BBox bbox;

    friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

struct Neighbor {
    std::string id;
    double distance_m = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

namespace mutation {
struct Insert {
    IndexEntry entry;
};
struct Remove {
    std::string id;
};
struct Replace {
    IndexEntry entry;
};
}  // namespace mutation

using Mutation = std::variant<mutation::Insert, mutation::Remove, mutation::Replace>;

/// Immutable STR-packed R-tree over entry bounding boxes.
///
/// Nodes live in one flat array; the root is the last node. A leaf node's
/// children are positions in the entry array, an inner node's children are
/// positions in the node array. Mutations return a rebuilt successor.
class SpatialIndex {
public:
    static constexpr std::size_t kFanout = 8;

    SpatialIndex() = default;

    /// Throws IndexError when two entries share an id.
    static SpatialIndex build(std::vector<IndexEntry> entries);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    /// Entries in ascending id order.
    const std::vector<IndexEntry>& entries() const noexcept { return entries_; }

    /// Ids whose bbox intersects `query` (closed intervals), ascending.
    std::vector<std::string> query_bbox(const geo::BBox& query) const;

    /// min(k, size()) nearest markers by haversine distance, ties by id.
    /// Throws IndexError when k is zero.
    std::vector<Neighbor> k_nearest(const geo::GeoPoint& origin, std::size_t k) const;

    /// Throws IndexError on insert of a present id, or remove/replace of an
    /// absent one.
    SpatialIndex apply(const Mutation& m) const;

    /// Walks the tree checking that every child box lies within its parent
    /// box and that every entry is reachable exactly once.
    bool audit() const;

    std::size_t height() const noexcept { return height_; }

private:
    struct Node {
        geo::BBox box;
        bool leaf = true;
        std::uint32_t first = 0;  // into child_refs_
        std::uint32_t count = 0;
    };

    const IndexEntry* find(const std::string& id) const;

    std::vector<IndexEntry> entries_;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> child_refs_;
    std::size_t height_ = 0;
};

/// Lower bound, in meters, on the haversine distance from `p` to any point of `box`.
double min_distance_to_box(const geo::GeoPoint& p, const geo::BBox& box) noexcept;

}  // namespace rthkp::index

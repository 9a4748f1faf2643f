#include "rthkp/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <tuple>

namespace rthkp::index {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double center_lon(const geo::BBox& b) { return (b.min_lon + b.max_lon) / 2.0; }
double center_lat(const geo::BBox& b) { return (b.min_lat + b.max_lat) / 2.0; }

double wrapped_lon_gap(double a, double b) {
    const double d = std::abs(a - b);
    return d > 180.0 ? 360.0 - d : d;
}

bool closer(const Neighbor& a, const Neighbor& b) {
    return std::tie(a.distance_m, a.id) < std::tie(b.distance_m, b.id);
}

struct Item {
    std::uint32_t ref;  // entry position on the leaf level, node position above
    geo::BBox box;
};

/// Sort-Tile-Recursive grouping of one tree level into runs of at most
/// `fanout` items: vertical slices by center lon, then runs by center lat.
std::vector<std::vector<Item>> str_pack(std::vector<Item> items, std::size_t fanout) {
    const std::size_t n = items.size();
    const std::size_t groups = (n + fanout - 1) / fanout;
    const auto slices = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(groups))));
    const std::size_t per_slice = slices * fanout;

    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        return std::tuple(center_lon(a.box), center_lat(a.box), a.ref) <
               std::tuple(center_lon(b.box), center_lat(b.box), b.ref);
    });

    std::vector<std::vector<Item>> out;
    out.reserve(groups);
    for (std::size_t s = 0; s < n; s += per_slice) {
        const std::size_t slice_end = std::min(n, s + per_slice);
        std::sort(items.begin() + static_cast<std::ptrdiff_t>(s),
                  items.begin() + static_cast<std::ptrdiff_t>(slice_end),
                  [](const Item& a, const Item& b) {
                      return std::tuple(center_lat(a.box), center_lon(a.box), a.ref) <
                             std::tuple(center_lat(b.box), center_lon(b.box), b.ref);
                  });
        for (std::size_t g = s; g < slice_end; g += fanout) {
            const std::size_t g_end = std::min(slice_end, g + fanout);
            out.emplace_back(items.begin() + static_cast<std::ptrdiff_t>(g),
                             items.begin() + static_cast<std::ptrdiff_t>(g_end));
        }
    }
    return out;
}

}  // namespace

double min_distance_to_box(const geo::GeoPoint& p, const geo::BBox& box) noexcept {
    double dlat = 0.0;
    if (p.lat < box.min_lat) {
        dlat = box.min_lat - p.lat;
    } else if (p.lat > box.max_lat) {
        dlat = p.lat - box.max_lat;
    }
    double dlon = 0.0;
    if (p.lon < box.min_lon || p.lon > box.max_lon) {
        dlon = std::min(wrapped_lon_gap(p.lon, box.min_lon), wrapped_lon_gap(p.lon, box.max_lon));
    }
    // Each haversine term is bounded from below on its own: the latitude term
    // by the smallest latitude gap, the longitude term by the smallest
    // longitude gap and the smallest cosine over the box's latitude span.
    const double cos_min = std::min(std::cos(box.min_lat * kDegToRad), std::cos(box.max_lat * kDegToRad));
    const double s_lat = std::sin(dlat * kDegToRad / 2.0);
    const double s_lon = std::sin(dlon * kDegToRad / 2.0);
    const double h = s_lat * s_lat + std::cos(p.lat * kDegToRad) * std::max(cos_min, 0.0) * s_lon * s_lon;
    const double d = 2.0 * geo::kEarthRadiusM * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
    // Absorb rounding so the bound never exceeds an exactly computed distance.
    return std::max(0.0, d * (1.0 - 1e-9) - 1e-6);
}

SpatialIndex SpatialIndex::build(std::vector<IndexEntry> entries) {
    std::sort(entries.begin(), entries.end(),
              [](const IndexEntry& a, const IndexEntry& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].id == entries[i - 1].id) {
            throw IndexError("duplicate id \"" + entries[i].id + "\"");
        }
    }

    SpatialIndex out;
    out.entries_ = std::move(entries);
    if (out.entries_.empty()) {
        return out;
    }

    std::vector<Item> level;
    level.reserve(out.entries_.size());
    for (std::size_t i = 0; i < out.entries_.size(); ++i) {
        level.push_back({static_cast<std::uint32_t>(i), out.entries_[i].bbox});
    }

    bool leaf = true;
    do {
        std::vector<Item> parents;
        for (const auto& group : str_pack(std::move(level), kFanout)) {
            Node node;
            node.leaf = leaf;
            node.first = static_cast<std::uint32_t>(out.child_refs_.size());
            node.count = static_cast<std::uint32_t>(group.size());
            node.box = group.front().box;
            for (const Item& child : group) {
                node.box.expand(child.box);
                out.child_refs_.push_back(child.ref);
            }
            parents.push_back({static_cast<std::uint32_t>(out.nodes_.size()), node.box});
            out.nodes_.push_back(node);
        }
        ++out.height_;
        level = std::move(parents);
        leaf = false;
    } while (level.size() > 1);
    return out;
}

std::vector<std::string> SpatialIndex::query_bbox(const geo::BBox& query) const {
    std::vector<std::string> out;
    if (nodes_.empty()) {
        return out;
    }
    std::vector<std::uint32_t> stack{static_cast<std::uint32_t>(nodes_.size() - 1)};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (!node.box.intersects(query)) {
            continue;
        }
        for (std::uint32_t c = node.first; c < node.first + node.count; ++c) {
            const std::uint32_t ref = child_refs_[c];
            if (!node.leaf) {
                stack.push_back(ref);
            } else if (entries_[ref].bbox.intersects(query)) {
                out.push_back(entries_[ref].id);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Neighbor> SpatialIndex::k_nearest(const geo::GeoPoint& origin, std::size_t k) const {
    if (k == 0) {
        throw IndexError("k must be at least 1");
    }
    std::vector<Neighbor> best;  // max-heap under `closer`
    if (nodes_.empty()) {
        return best;
    }
    using Pending = std::pair<double, std::uint32_t>;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> frontier;
    const auto root = static_cast<std::uint32_t>(nodes_.size() - 1);
    frontier.emplace(min_distance_to_box(origin, nodes_[root].box), root);

    while (!frontier.empty()) {
        const auto [bound, n] = frontier.top();
        frontier.pop();
        // A node whose bound equals the current worst may still hold a tie
        // with a smaller id, so only strictly farther nodes are skipped.
        if (best.size() == k && bound > best.front().distance_m) {
            break;
        }
        const Node& node = nodes_[n];
        for (std::uint32_t c = node.first; c < node.first + node.count; ++c) {
            const std::uint32_t ref = child_refs_[c];
            if (!node.leaf) {
                frontier.emplace(min_distance_to_box(origin, nodes_[ref].box), ref);
                continue;
            }
            Neighbor cand{entries_[ref].id, geo::haversine_distance(origin, entries_[ref].marker)};
            if (best.size() < k) {
                best.push_back(std::move(cand));
                std::push_heap(best.begin(), best.end(), closer);
            } else if (closer(cand, best.front())) {
                std::pop_heap(best.begin(), best.end(), closer);
                best.back() = std::move(cand);
                std::push_heap(best.begin(), best.end(), closer);
            }
        }
    }
    std::sort_heap(best.begin(), best.end(), closer);
    return best;
}

const IndexEntry* SpatialIndex::find(const std::string& id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const IndexEntry& e, const std::string& key) { return e.id < key; });
    return it != entries_.end() && it->id == id ? &*it : nullptr;
}

SpatialIndex SpatialIndex::apply(const Mutation& m) const {
    std::vector<IndexEntry> next = entries_;
    const auto position = [&](const std::string& id) {
        return std::find_if(next.begin(), next.end(), [&](const IndexEntry& e) { return e.id == id; });
    };
    if (const auto* ins = std::get_if<mutation::Insert>(&m)) {
        if (find(ins->entry.id) != nullptr) {
            throw IndexError("id \"" + ins->entry.id + "\" already indexed");
        }
        next.push_back(ins->entry);
    } else if (const auto* rem = std::get_if<mutation::Remove>(&m)) {
        if (find(rem->id) == nullptr) {
            throw IndexError("id \"" + rem->id + "\" not indexed");
        }
        next.erase(position(rem->id));
    } else {
        const auto& rep = std::get<mutation::Replace>(m);
        if (find(rep.entry.id) == nullptr) {
            throw IndexError("id \"" + rep.entry.id + "\" not indexed");
        }
        *position(rep.entry.id) = rep.entry;
    }
    return build(std::move(next));
}

bool SpatialIndex::audit() const {
    if (nodes_.empty()) {
        return entries_.empty() && child_refs_.empty();
    }
    std::vector<int> seen(entries_.size(), 0);
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{
        {static_cast<std::uint32_t>(nodes_.size() - 1), 1}};
    while (!stack.empty()) {
        const auto [n, depth] = stack.back();
        stack.pop_back();
        const Node& node = nodes_[n];
        if (node.count == 0 || node.count > kFanout) {
            return false;
        }
        if (node.leaf != (depth == height_)) {
            return false;
        }
        for (std::uint32_t c = node.first; c < node.first + node.count; ++c) {
            const std::uint32_t ref = child_refs_[c];
            if (node.leaf) {
                if (ref >= entries_.size() || !node.box.contains(entries_[ref].bbox) ||
                    !entries_[ref].bbox.contains(entries_[ref].marker)) {
                    return false;
                }
                ++seen[ref];
            } else {
                if (ref >= nodes_.size() || !node.box.contains(nodes_[ref].box)) {
                    return false;
                }
                stack.emplace_back(ref, depth + 1);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

}  // namespace rthkp::index

#pragma once

#include <array>
#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rthkp/geo.hpp"

namespace rthkp {

using Timestamp = std::chrono::sys_seconds;

enum class Category {
    CityPark,           // "taman_kota"
    NatureTourismPark,  // "taman_wisata_alam"
};

inline constexpr std::array<Category, 2> kAllCategories{Category::CityPark, Category::NatureTourismPark};

std::string_view to_literal(Category c) noexcept;
std::optional<Category> category_from_literal(std::string_view literal) noexcept;

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);
/// Accepts exactly the format_timestamp shape; nullopt otherwise.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// One urban green open space record.
struct GreenSpace {
    std::string id;
    std::string name;
    Category category = Category::CityPark;
    geo::GeoPoint marker;
    std::optional<geo::GeoPolygon> boundary;
    std::string description;
    std::vector<std::string> facilities;
    std::vector<std::string> photos;
    std::optional<Timestamp> created_at;
    std::optional<Timestamp> updated_at;

    friend bool operator==(const GreenSpace&, const GreenSpace&) = default;

    geo::BBox bbox() const noexcept { return geo::geometry_bbox(marker, boundary); }
};

/// Lowercase ASCII; every run of other bytes becomes one hyphen; leading and
/// trailing hyphens trimmed. May return an empty string.
std::string slugify(std::string_view name);

bool is_valid_slug(std::string_view id) noexcept;

/// Relative path with no empty, "." or ".." segments.
bool is_safe_relative_path(std::string_view path) noexcept;

/// Field-level checks shared by the parser and the registry (name, id,
/// photos, timestamps, geometry). Empty means valid.
std::vector<geo::Violation> validate_space(const GreenSpace& space);

}  // namespace rthkp

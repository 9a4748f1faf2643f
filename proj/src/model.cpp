#include "rthkp/model.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace rthkp {

std::string_view to_literal(Category c) noexcept {
    switch (c) {
        case Category::CityPark:
            return "taman_kota";
        case Category::NatureTourismPark:
            return "taman_wisata_alam";
    }
    return "taman_kota";
}

std::optional<Category> category_from_literal(std::string_view literal) noexcept {
    for (Category c : kAllCategories) {
        if (to_literal(c) == literal) {
            return c;
        }
    }
    return std::nullopt;
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    // 0123456789012345678
    // YYYY-MM-DDTHH:MM:SSZ
    if (text.size() != 20 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':' || text[19] != 'Z') {
        return std::nullopt;
    }
    const auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
                return std::nullopt;
            }
        }
        std::from_chars(text.data() + pos, text.data() + pos + len, v);
        return v;
    };
    const auto y = field(0, 4);
    const auto mo = field(5, 2);
    const auto d = field(8, 2);
    const auto h = field(11, 2);
    const auto mi = field(14, 2);
    const auto s = field(17, 2);
    if (!y || !mo || !d || !h || !mi || !s || *h > 23 || *mi > 59 || *s > 59) {
        return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)}, day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return sys_days{ymd} + hours{*h} + minutes{*mi} + seconds{*s};
}

std::string slugify(std::string_view name) {
    std::string out;
    bool pending_hyphen = false;
    for (char ch : name) {
        const auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
            if (pending_hyphen && !out.empty()) {
                out.push_back('-');
            }
            pending_hyphen = false;
            out.push_back(static_cast<char>(std::tolower(c)));
        } else {
            pending_hyphen = true;
        }
    }
    return out;
}

bool is_valid_slug(std::string_view id) noexcept {
    // ^[a-z0-9]+(-[a-z0-9]+)*$
    if (id.empty() || id.front() == '-' || id.back() == '-') {
        return false;
    }
    char prev = '\0';
    for (char c : id) {
        const bool alnum = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
        if (!alnum && !(c == '-' && prev != '-')) {
            return false;
        }
        prev = c;
    }
    return true;
}

bool is_safe_relative_path(std::string_view path) noexcept {
    if (path.empty() || path.front() == '/' || path.find('\\') != std::string_view::npos ||
        path.find('\0') != std::string_view::npos) {
        return false;
    }
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t slash = path.find('/', start);
        const std::size_t end = slash == std::string_view::npos ? path.size() : slash;
        const std::string_view seg = path.substr(start, end - start);
        if (seg.empty() || seg == "." || seg == "..") {
            return false;
        }
        if (slash == std::string_view::npos) {
            break;
        }
        start = slash + 1;
    }
    return true;
}

std::vector<geo::Violation> validate_space(const GreenSpace& space) {
    std::vector<geo::Violation> out;
    if (!is_valid_slug(space.id)) {
        out.push_back({"id", "id must be a lowercase hyphenated slug"});
    }
    if (space.name.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
        out.push_back({"name", "empty name"});
    }
    for (std::size_t i = 0; i < space.photos.size(); ++i) {
        if (!is_safe_relative_path(space.photos[i])) {
            out.push_back({"photos[" + std::to_string(i) + "]", "photo must be a relative path"});
        }
    }
    if (space.created_at && space.updated_at && *space.updated_at < *space.created_at) {
        out.push_back({"updated_at", "updated_at precedes created_at"});
    }
    auto geometry = geo::validate_geometry(space.marker, space.boundary);
    out.insert(out.end(), geometry.begin(), geometry.end());
    return out;
}

}  // namespace rthkp

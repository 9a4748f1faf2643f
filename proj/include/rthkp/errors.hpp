#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "rthkp/geo.hpp"

namespace rthkp {

/// Root of the service's error hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& id)
        : Error("no green space with id \"" + id + "\""), id_(id) {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<geo::Violation> violations)
        : Error(describe(violations)), violations_(std::move(violations)) {}

    const std::vector<geo::Violation>& violations() const noexcept { return violations_; }

    static std::string describe(const std::vector<geo::Violation>& violations) {
        std::string out = "validation failed";
        for (const auto& v : violations) {
            out += "; " + v.field + ": " + v.message;
        }
        return out;
    }

private:
    std::vector<geo::Violation> violations_;
};

/// The requested change conflicts with current state (e.g. seeding a
/// non-empty store without force).
class ConflictError : public Error {
public:
    using Error::Error;
};

class PersistenceError : public Error {
public:
    using Error::Error;
};

}  // namespace rthkp

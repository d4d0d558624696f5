#pragma once

#include <stdexcept>
#include <string>

namespace sbc {

// Invalid user-supplied data: bad scenario fields, non-finite states,
// non-positive poles. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Thrust vector vanished (free fall); the flat-output attitude is undefined.
class SingularityError : public std::runtime_error {
public:
    explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

// Two vehicles share a position; the pair has no valid certificate row.
class DegenerateGeometryError : public std::runtime_error {
public:
    explicit DegenerateGeometryError(const std::string& what) : std::runtime_error(what) {}
};

// The barrier-only QP was reported infeasible. The certificate set of a
// non-colliding team is provably non-empty, so this indicates a colliding
// state upstream or a solver defect, never a recoverable runtime condition.
class InfeasibleError : public std::logic_error {
public:
    explicit InfeasibleError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace sbc

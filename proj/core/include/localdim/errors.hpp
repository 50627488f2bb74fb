#pragma once

#include <stdexcept>
#include <string>

namespace localdim {

// Shape or architecture inconsistencies.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Invalid argument values (non-positive scale factors, bad permutations, ...).
struct DomainError : std::invalid_argument {
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// A stated precondition does not hold (e.g. finite differences too close to
// an activation boundary).
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or failed numerical routines; the message carries the
// location when known.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// An internal invariant was violated; indicates a bug, not bad input.
struct InvariantError : std::logic_error {
  explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace localdim

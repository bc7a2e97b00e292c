#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bbp {

// Input violates a mathematical precondition (non-stochastic profile, a <= 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A numerical routine failed to converge or produced a non-finite value.
// Carries the seed of the trial that failed so the run can be replayed.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::uint64_t seed)
      : std::runtime_error(what + " (seed " + std::to_string(seed) + ")"), seed_(seed) {}
  explicit NumericError(const std::string& what) : std::runtime_error(what), seed_(0) {}

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

// Config document does not match the expected schema.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Exhaustive routines refuse inputs beyond their enumeration budget.
class BudgetError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace bbp

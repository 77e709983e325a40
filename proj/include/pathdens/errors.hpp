#pragma once

#include <stdexcept>
#include <string>

#include "geometry.hpp"

namespace pathdens {

/// Precondition violated by the caller (bad bandwidth, empty input, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A computation produced a non-finite value. Carries the last valid point.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, Vec2 last_valid)
      : std::runtime_error(what), last_valid_(last_valid) {}
  Vec2 last_valid() const { return last_valid_; }

 private:
  Vec2 last_valid_;
};

/// Malformed input data (CSV rows, JSON documents).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pathdens

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace enkf {

// Bad caller input: wrong shapes, out-of-range parameters, non-finite data.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Recursive reference solver asked for more members than it will expand.
class OracleSizeExceeded : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Base for failures that arise while computing on otherwise valid input.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericalFailure {
 public:
  explicit NotPositiveDefinite(std::size_t pivot)
      : NumericalFailure("matrix is not positive definite: pivot " +
                         std::to_string(pivot) + " is not positive"),
        pivot_(pivot) {}

  // Zero-based index of the first non-positive pivot.
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class SingularUpdate : public NumericalFailure {
 public:
  SingularUpdate(std::size_t level, double denominator)
      : NumericalFailure("Sherman-Morrison update at level " +
                         std::to_string(level) +
                         " is singular: |1 + v'u| = " +
                         std::to_string(denominator)),
        level_(level) {}

  // One-based level k at which 1 + v_k' u_k vanished.
  std::size_t level() const noexcept { return level_; }

 private:
  std::size_t level_;
};

class ModelDivergence : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace enkf

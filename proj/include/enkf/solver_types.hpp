#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "enkf/linalg.hpp"

namespace enkf {

// Analysis-system solvers for (R + V V') Z = D.
enum class SolverChoice { sherman, cholesky, svd };

inline constexpr std::array<SolverChoice, 3> kAllSolvers = {
    SolverChoice::sherman, SolverChoice::cholesky, SolverChoice::svd};

std::string_view to_string(SolverChoice choice) noexcept;
// Throws InvalidArgument for unknown names.
SolverChoice parse_solver(std::string_view name);

// Long operations (multiplications and divisions).
struct OpCount {
  std::uint64_t multiplications_and_divisions = 0;

  friend bool operator==(const OpCount&, const OpCount&) = default;
};

struct SolverResult {
  DenseMatrix z;
  SolverChoice solver = SolverChoice::sherman;
  std::optional<OpCount> ops;  // set when counting was requested
  double seconds = 0.0;
};

}  // namespace enkf

#pragma once

// Independent reference computations and the acceptance checks built on
// them. The oracles deliberately avoid the production kernels: plain
// loops, Gaussian elimination with partial pivoting, explicit gains.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "enkf/filter.hpp"
#include "enkf/linalg.hpp"

namespace enkf::verify {

// ---------------------------------------------------------------------------
// Oracles

// Triple-loop product.
DenseMatrix naive_multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix naive_transpose(const DenseMatrix& a);

// Solves A X = B by Gaussian elimination with partial pivoting.
DenseMatrix gauss_solve(DenseMatrix a, DenseMatrix b);

// Dense R + V V' assembled entry by entry.
DenseMatrix dense_system(std::span<const double> r, const DenseMatrix& v);

// X^B + P H' (H P H' + R)^{-1} D with P = S S' formed explicitly.
DenseMatrix explicit_gain_analysis(const DenseMatrix& xb, const DenseMatrix& y,
                                   const std::vector<std::size_t>& obs_index,
                                   std::span<const double> r);

// Same with P H' tapered elementwise by delta (Nstate x Nobs).
DenseMatrix explicit_gain_analysis_localized(
    const DenseMatrix& xb, const DenseMatrix& y,
    const std::vector<std::size_t>& obs_index, std::span<const double> r,
    const DenseMatrix& delta);

// Straightforward Lorenz-96 RK4 written independently of the model module.
std::vector<double> lorenz96_reference(std::vector<double> x, double forcing,
                                       double dt, std::size_t steps);

// Max-norm error of the discrete Helmholtz solve against the manufactured
// psi = sin(pi x / Lx) sin(pi y / Ly) on an n x n grid.
double helmholtz_manufactured_error(std::size_t n);

// Observed convergence orders between consecutive grids.
std::vector<double> helmholtz_orders(const std::vector<std::size_t>& grids);

// Global RK4 orders for Lorenz-96 over one time unit at dt, dt/2, dt/4.
std::vector<double> lorenz96_orders(double dt);

struct ConservationSums {
  double sum_j;        // |sum J| / sum |J|
  double sum_psi_j;    // |sum psi J| / sum |psi J|
  double sum_q_j;      // |sum q J| / sum |q J|
};

// Arakawa sums over a full n x n grid with random interior psi, q and a
// zero boundary ring.
ConservationSums arakawa_conservation(std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Acceptance checks

struct Options {
  // Smaller sizes and fewer repeats; for quick interactive runs.
  bool quick = false;
  std::uint64_t seed = 20240611;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

CriterionResult check_solver_agreement(const Options& options);
CriterionResult check_recursive_oracle(const Options& options);
CriterionResult check_kalman_oracle(const Options& options);
CriterionResult check_op_counts(const Options& options);
CriterionResult check_parallel_determinism(const Options& options);
CriterionResult check_scaling_trend(const Options& options);
CriterionResult check_lorenz_quality(const Options& options);
CriterionResult check_qg_end_to_end(const Options& options);
CriterionResult check_model_verification(const Options& options);
CriterionResult check_reproducibility(const Options& options);

// Runs every check in order, printing one "PASS"/"FAIL" line per check to
// `log` as it completes.
std::vector<CriterionResult> run_acceptance(const Options& options,
                                            std::ostream& log);

std::string format_result(const CriterionResult& result);

}  // namespace enkf::verify

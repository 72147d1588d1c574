#pragma once

// Baseline solutions of the analysis system and a single dispatch point
// used by the filter.
//
// Scaling conventions differ between entry points:
//   * analysis_solve_cholesky and ismf_solve take V = H S with S already
//     carrying 1/sqrt(Nens - 1), and solve (R + V V') Z = D.
//   * analysis_solve_svd takes the unscaled H (X - mean) and applies the
//     1/(Nens - 1) factor itself, solving (R + V V' / (Nens - 1)) Z = D.

#include <cstddef>

#include "enkf/linalg.hpp"
#include "enkf/solver_types.hpp"

namespace enkf {

// Materializes W = R + V V' densely (O(Nobs^2) memory), factors it and
// back-substitutes all right-hand sides. Propagates NotPositiveDefinite.
SolverResult analysis_solve_cholesky(const DiagObsCovariance& r,
                                     const DenseMatrix& v,
                                     const DenseMatrix& d);

// Thin SVD of R^{-1/2} V = U diag(sigma) Q'. The identity part of the
// square-U formula is applied analytically:
//   Z = R^{-1/2} (U (diag(1 / (sigma^2 / (Nens-1) + 1)) - I) U' + I) R^{-1/2} D
// which equals the full-U expression without forming an Nobs x Nobs basis.
// Requires Nens = V.cols() >= 2.
SolverResult analysis_solve_svd(const DiagObsCovariance& r,
                                const DenseMatrix& v_unscaled,
                                const DenseMatrix& d);

// Reference form using the square Nobs x Nobs left factor. O(Nobs^2)
// memory; kept for cross-checking the thin path.
SolverResult analysis_solve_svd_full(const DiagObsCovariance& r,
                                     const DenseMatrix& v_unscaled,
                                     const DenseMatrix& d);

// Solves (R + V V') Z = D with V pre-scaled, converting to whatever the
// chosen solver expects. workers > 1 selects the blocked Sherman-Morrison
// path; the other solvers ignore it.
SolverResult solve_analysis_system(SolverChoice choice,
                                   const DiagObsCovariance& r,
                                   const DenseMatrix& v_scaled,
                                   const DenseMatrix& d,
                                   std::size_t workers = 1);

}  // namespace enkf

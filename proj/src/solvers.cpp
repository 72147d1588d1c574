#include "enkf/solvers.hpp"

#include <cmath>
#include <string>

#include "enkf/errors.hpp"
#include "enkf/ismf.hpp"
#include "enkf/stopwatch.hpp"

namespace enkf {

std::string_view to_string(SolverChoice choice) noexcept {
  switch (choice) {
    case SolverChoice::sherman:
      return "sherman";
    case SolverChoice::cholesky:
      return "cholesky";
    case SolverChoice::svd:
      return "svd";
  }
  return "unknown";
}

SolverChoice parse_solver(std::string_view name) {
  for (SolverChoice choice : kAllSolvers) {
    if (to_string(choice) == name) return choice;
  }
  throw InvalidArgument("unknown solver '" + std::string(name) +
                        "' (expected sherman, cholesky or svd)");
}

namespace {

void check_dims(const DiagObsCovariance& r, const DenseMatrix& v,
                const DenseMatrix& d) {
  if (v.rows() != r.size() || d.rows() != r.size() || v.cols() != d.cols()) {
    throw DimensionMismatch("analysis system dimensions are inconsistent");
  }
  if (!v.all_finite() || !d.all_finite()) {
    throw InvalidArgument("analysis system: non-finite entry in V or D");
  }
}

}  // namespace

SolverResult analysis_solve_cholesky(const DiagObsCovariance& r,
                                     const DenseMatrix& v,
                                     const DenseMatrix& d) {
  Stopwatch timer;
  check_dims(r, v, d);
  DenseMatrix w = sym_rank_k_update(v, r, 1.0, 1.0);
  cholesky_factor_inplace(w);
  SolverResult result;
  result.z = d;
  cholesky_solve_inplace(w, result.z);
  result.solver = SolverChoice::cholesky;
  result.seconds = timer.seconds();
  return result;
}

namespace {

struct WhitenedSystem {
  Vector inv_sqrt_r;
  DenseMatrix b;  // R^{-1/2} V
  DenseMatrix e;  // R^{-1/2} D
  double inv_ens_minus_one;
};

WhitenedSystem whiten(const DiagObsCovariance& r, const DenseMatrix& v,
                      const DenseMatrix& d) {
  check_dims(r, v, d);
  if (v.cols() < 2) {
    throw InvalidArgument("analysis_solve_svd: ensemble size must be >= 2");
  }
  const std::size_t n = r.size();
  WhitenedSystem ws{Vector(n), v, d, 1.0 / static_cast<double>(v.cols() - 1)};
  for (std::size_t i = 0; i < n; ++i) ws.inv_sqrt_r[i] = 1.0 / std::sqrt(r[i]);
  for (std::size_t j = 0; j < v.cols(); ++j)
    for (std::size_t i = 0; i < n; ++i) {
      ws.b(i, j) *= ws.inv_sqrt_r[i];
      ws.e(i, j) *= ws.inv_sqrt_r[i];
    }
  return ws;
}

}  // namespace

SolverResult analysis_solve_svd(const DiagObsCovariance& r,
                                const DenseMatrix& v_unscaled,
                                const DenseMatrix& d) {
  Stopwatch timer;
  WhitenedSystem ws = whiten(r, v_unscaled, d);
  const SvdResult f = svd(ws.b, SvdMode::thin);

  // T = diag(1/(sigma^2/(Nens-1) + 1) - 1) U' E
  DenseMatrix t = multiply_tn(f.u, ws.e);
  for (std::size_t i = 0; i < f.sigma.size(); ++i) {
    const double s2 = f.sigma[i] * f.sigma[i] * ws.inv_ens_minus_one;
    const double factor = 1.0 / (s2 + 1.0) - 1.0;
    for (std::size_t j = 0; j < t.cols(); ++j) t(i, j) *= factor;
  }
  DenseMatrix z = multiply(f.u, t);
  for (std::size_t j = 0; j < z.cols(); ++j)
    for (std::size_t i = 0; i < z.rows(); ++i)
      z(i, j) = (z(i, j) + ws.e(i, j)) * ws.inv_sqrt_r[i];

  SolverResult result;
  result.z = std::move(z);
  result.solver = SolverChoice::svd;
  result.seconds = timer.seconds();
  return result;
}

SolverResult analysis_solve_svd_full(const DiagObsCovariance& r,
                                     const DenseMatrix& v_unscaled,
                                     const DenseMatrix& d) {
  Stopwatch timer;
  WhitenedSystem ws = whiten(r, v_unscaled, d);
  const SvdResult f = svd(ws.b, SvdMode::full_left);

  // Singular values beyond min(Nobs, Nens) are zero, giving factor 1.
  DenseMatrix t = multiply_tn(f.u, ws.e);
  for (std::size_t i = 0; i < f.sigma.size(); ++i) {
    const double s2 = f.sigma[i] * f.sigma[i] * ws.inv_ens_minus_one;
    for (std::size_t j = 0; j < t.cols(); ++j) t(i, j) /= (s2 + 1.0);
  }
  DenseMatrix z = multiply(f.u, t);
  for (std::size_t j = 0; j < z.cols(); ++j)
    for (std::size_t i = 0; i < z.rows(); ++i) z(i, j) *= ws.inv_sqrt_r[i];

  SolverResult result;
  result.z = std::move(z);
  result.solver = SolverChoice::svd;
  result.seconds = timer.seconds();
  return result;
}

SolverResult solve_analysis_system(SolverChoice choice,
                                   const DiagObsCovariance& r,
                                   const DenseMatrix& v_scaled,
                                   const DenseMatrix& d, std::size_t workers) {
  switch (choice) {
    case SolverChoice::sherman:
      return workers > 1 ? ismf_solve_blocked(r, v_scaled, d, workers)
                         : ismf_solve(r, v_scaled, d);
    case SolverChoice::cholesky:
      return analysis_solve_cholesky(r, v_scaled, d);
    case SolverChoice::svd: {
      if (v_scaled.cols() < 2) {
        throw InvalidArgument("svd solver needs an ensemble of at least 2");
      }
      DenseMatrix v = v_scaled;
      const double scale = std::sqrt(static_cast<double>(v.cols() - 1));
      for (double& x : v.values()) x *= scale;
      return analysis_solve_svd(r, v, d);
    }
  }
  throw InvalidArgument("unknown solver");
}

}  // namespace enkf

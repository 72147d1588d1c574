#include <cmath>

#include "doctest.h"
#include "enkf/errors.hpp"
#include "enkf/ismf.hpp"
#include "enkf/solvers.hpp"
#include "enkf/verify.hpp"

using namespace enkf;

namespace {

struct Instance {
  DiagObsCovariance r;
  DenseMatrix v;
  DenseMatrix d;
};

Instance make(std::uint64_t seed, std::size_t n_obs, std::size_t n_ens) {
  RngStream rng(seed);
  Vector r(n_obs);
  for (double& x : r) x = 0.1 + rng.uniform();
  return {DiagObsCovariance(r),
          gaussian_matrix(rng, n_obs, n_ens, 0.0, 1.0 / std::sqrt(n_ens - 1.0)),
          gaussian_matrix(rng, n_obs, n_ens, 0.0, 1.0)};
}

DenseMatrix scaled(const DenseMatrix& v, double f) {
  DenseMatrix out = v;
  for (double& x : out.values()) x *= f;
  return out;
}

}  // namespace

TEST_CASE("Cholesky and SVD paths match the dense oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t n_ens = 2 + seed;
    const Instance s = make(seed, 20 + 9 * seed, n_ens);
    const DenseMatrix expected = verify::gauss_solve(verify::dense_system(s.r.values(), s.v), s.d);
    const double tol = 1e-10 * std::max(1.0, max_abs(expected));
    CHECK(max_abs_diff(analysis_solve_cholesky(s.r, s.v, s.d).z, expected) < tol);
    const DenseMatrix unscaled = scaled(s.v, std::sqrt(n_ens - 1.0));
    CHECK(max_abs_diff(analysis_solve_svd(s.r, unscaled, s.d).z, expected) < tol);
    CHECK(max_abs_diff(analysis_solve_svd_full(s.r, unscaled, s.d).z, expected) < tol);
  }
}

TEST_CASE("dispatch converts scaling for every solver") {
  const Instance s = make(5, 120, 12);
  const DenseMatrix ref = ismf_solve(s.r, s.v, s.d).z;
  for (SolverChoice c : kAllSolvers) {
    const SolverResult res = solve_analysis_system(c, s.r, s.v, s.d);
    CHECK(res.solver == c);
    CHECK(res.seconds >= 0.0);
    CHECK(max_abs_diff(res.z, ref) < 1e-10);
  }
  CHECK(solve_analysis_system(SolverChoice::sherman, s.r, s.v, s.d, 4).z == ref);
}

TEST_CASE("solver names round-trip") {
  for (SolverChoice c : kAllSolvers) CHECK(parse_solver(to_string(c)) == c);
  CHECK_THROWS_AS(parse_solver("qr"), InvalidArgument);
}

TEST_CASE("SVD path requires two members") {
  const Instance s = make(1, 10, 2);
  DenseMatrix v1(10, 1, 1.0);
  CHECK_THROWS_AS(analysis_solve_svd(s.r, v1, DenseMatrix(10, 1)), InvalidArgument);
}

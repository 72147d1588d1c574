#include <cmath>

#include "doctest.h"
#include "enkf/errors.hpp"
#include "enkf/ismf.hpp"
#include "enkf/verify.hpp"

using namespace enkf;

namespace {

struct Instance {
  DiagObsCovariance r;
  DenseMatrix v;
  DenseMatrix d;
};

Instance make(std::uint64_t seed, std::size_t n_obs, std::size_t n_ens, std::size_t rhs) {
  RngStream rng(seed);
  Vector r(n_obs);
  for (double& x : r) x = 0.1 + rng.uniform();
  return {DiagObsCovariance(r), gaussian_matrix(rng, n_obs, n_ens, 0.0, 0.5),
          gaussian_matrix(rng, n_obs, rhs, 0.0, 1.0)};
}

}  // namespace

TEST_CASE("ismf solves the dense system") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Instance s = make(seed, 5 + seed * 7, 1 + seed % 9, 1 + seed % 9);
    const DenseMatrix z = ismf_solve(s.r, s.v, s.d).z;
    const DenseMatrix expected = verify::gauss_solve(verify::dense_system(s.r.values(), s.v), s.d);
    CHECK(max_abs_diff(z, expected) < 1e-10 * std::max(1.0, max_abs(expected)));
  }
}

TEST_CASE("residual of ismf is small") {
  const Instance s = make(77, 300, 24, 24);
  const DenseMatrix z = ismf_solve(s.r, s.v, s.d).z;
  const DenseMatrix w = verify::dense_system(s.r.values(), s.v);
  CHECK(max_abs_diff(verify::naive_multiply(w, z), s.d) < 1e-10);
}

TEST_CASE("a single rank-one term matches Sherman-Morrison by hand") {
  const DiagObsCovariance r({2.0, 4.0});
  const DenseMatrix v{{1.0}, {2.0}};
  const DenseMatrix d{{1.0}, {1.0}};
  // W = [[3, 2], [2, 8]], W^{-1} d = [6, 1] / 20.
  const DenseMatrix z = ismf_solve(r, v, d).z;
  CHECK(z(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(z(1, 0) == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("operation count matches the closed form") {
  IsmfOptions opt;
  opt.count_operations = true;
  for (auto [n_ens, n_obs] : {std::pair{1, 1}, std::pair{2, 3}, std::pair{7, 40}, std::pair{20, 11}}) {
    const Instance s = make(n_ens * 31 + n_obs, n_obs, n_ens, n_ens);
    const SolverResult res = ismf_solve(s.r, s.v, s.d, opt);
    REQUIRE(res.ops.has_value());
    CHECK(*res.ops == op_count_formula(n_ens, n_obs));
    const std::uint64_t n = n_ens, m = n_obs;
    CHECK(res.ops->multiplications_and_divisions == 3 * (n * n * m + n * m));
  }
  const Instance s = make(1, 10, 3, 3);
  CHECK_FALSE(ismf_solve(s.r, s.v, s.d).ops.has_value());
}

TEST_CASE("frozen columns are never rewritten") {
  IsmfOptions opt;
  opt.check_frozen_columns = true;
  const Instance s = make(8, 60, 10, 10);
  CHECK_NOTHROW(ismf_solve(s.r, s.v, s.d, opt));
}

TEST_CASE("columns of opposite sign") {
  // W = [[3, 0], [0, 1]].
  const DiagObsCovariance r({1.0, 1.0});
  const DenseMatrix v{{1.0, -1.0}, {0.0, 0.0}};
  const DenseMatrix d{{1.0, 3.0}, {1.0, 0.0}};
  const DenseMatrix z = ismf_solve(r, v, d).z;
  CHECK(z(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(z(1, 0) == doctest::Approx(1.0));
  CHECK(z(0, 1) == doctest::Approx(1.0));
  CHECK(z(1, 1) == 0.0);
}

TEST_CASE("shape errors") {
  const Instance s = make(2, 10, 3, 3);
  CHECK_THROWS_AS(ismf_solve(DiagObsCovariance::constant(9, 1.0), s.v, s.d), DimensionMismatch);
  CHECK_THROWS_AS(ismf_solve(s.r, s.v, DenseMatrix(9, 3)), DimensionMismatch);
}

TEST_CASE("blocked variant is bitwise identical for any worker count") {
  const Instance s = make(4, 503, 17, 17);
  const DenseMatrix serial = ismf_solve(s.r, s.v, s.d).z;
  for (std::size_t w : {1, 2, 3, 4, 8, 16, 40}) {
    CHECK(ismf_solve_blocked(s.r, s.v, s.d, w).z == serial);
  }
  IsmfOptions opt;
  opt.count_operations = true;
  CHECK(*ismf_solve_blocked(s.r, s.v, s.d, 4, opt).ops == op_count_formula(17, 503));
}

TEST_CASE("column blocks partition the range") {
  for (std::size_t remaining : {0, 1, 5, 33}) {
    for (std::size_t workers : {1, 2, 3, 8}) {
      std::size_t next = 7;
      for (std::size_t w = 0; w < workers; ++w) {
        const ColumnBlock b = column_block(7, remaining, workers, w);
        CHECK(b.first == next);
        CHECK(b.last >= b.first);
        next = b.last;
      }
      CHECK(next == 7 + remaining);
    }
  }
}

TEST_CASE("recursive form agrees with ismf and counts base solves") {
  for (std::size_t n_ens = 1; n_ens <= 6; ++n_ens) {
    const Instance s = make(100 + n_ens, 15, n_ens, n_ens);
    const DenseMatrix z = ismf_solve(s.r, s.v, s.d).z;
    for (std::size_t j = 0; j < n_ens; ++j) {
      const Vector f = recursive_sm_solve(s.r, s.v, s.d.col(j), n_ens);
      for (std::size_t i = 0; i < 15; ++i) CHECK(std::abs(f[i] - z(i, j)) < 1e-12);
    }
  }
  const Instance s = make(9, 8, 3, 3);
  RecursionStats stats;
  recursive_sm_solve(s.r, s.v, s.d.col(0), 3, &stats);
  CHECK(stats.base_solves_v1 == 4);
  const Instance big = make(9, 8, kRecursiveMaxEnsemble + 1, kRecursiveMaxEnsemble + 1);
  CHECK_THROWS_AS(recursive_sm_solve(big.r, big.v, big.d.col(0), kRecursiveMaxEnsemble + 1),
                  OracleSizeExceeded);
}

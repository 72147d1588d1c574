#include <cmath>

#include "doctest.h"
#include "enkf/errors.hpp"
#include "enkf/linalg.hpp"
#include "enkf/verify.hpp"

using namespace enkf;

TEST_CASE("column-major storage and transpose") {
  const DenseMatrix a{{1, 2, 3}, {4, 5, 6}};
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  CHECK(a(1, 0) == 4);
  CHECK(a.data()[1] == 4);
  CHECK(a.col(2)[1] == 6);
  CHECK(a.transpose() == verify::naive_transpose(a));
}

TEST_CASE("products match triple loops") {
  RngStream rng(5);
  const DenseMatrix a = gaussian_matrix(rng, 7, 4, 0.0, 1.0);
  const DenseMatrix b = gaussian_matrix(rng, 4, 9, 0.0, 1.0);
  const DenseMatrix c = gaussian_matrix(rng, 7, 9, 0.0, 1.0);
  CHECK(max_abs_diff(multiply(a, b), verify::naive_multiply(a, b)) < 1e-13);
  CHECK(max_abs_diff(multiply_tn(a, c),
                     verify::naive_multiply(verify::naive_transpose(a), c)) < 1e-13);
  CHECK(max_abs_diff(multiply_nt(a, verify::naive_transpose(b)),
                     verify::naive_multiply(a, b)) < 1e-13);
  CHECK_THROWS_AS(multiply(a, c), DimensionMismatch);
}

TEST_CASE("diagonal covariance rejects non-positive entries") {
  CHECK_THROWS_AS(DiagObsCovariance({1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(DiagObsCovariance({1.0, -2.0}), InvalidArgument);
  CHECK_THROWS_AS(DiagObsCovariance({NAN}), InvalidArgument);
  const auto r = DiagObsCovariance::constant(3, 0.5);
  CHECK(r.size() == 3);
  CHECK(r[2] == 0.5);
}

TEST_CASE("random streams are reproducible and independent") {
  RngStream a = RngStream::derived(42, 1, 3);
  RngStream b = RngStream::derived(42, 1, 3);
  RngStream c = RngStream::derived(42, 2, 3);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    differs |= x != c.normal();
  }
  CHECK(differs);

  RngStream big(9);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = big.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("Cholesky factor reproduces the matrix and solves") {
  RngStream rng(11);
  const DenseMatrix v = gaussian_matrix(rng, 12, 5, 0.0, 1.0);
  const DiagObsCovariance r = DiagObsCovariance::constant(12, 0.3);
  const DenseMatrix w = sym_rank_k_update(v, r, 1.0, 1.0);
  CHECK(max_abs_diff(w, verify::dense_system(r.values(), v)) < 1e-13);

  const DenseMatrix l = cholesky_factor(w);
  for (std::size_t i = 0; i < l.rows(); ++i)
    for (std::size_t j = i + 1; j < l.cols(); ++j) CHECK(l(i, j) == 0.0);
  CHECK(max_abs_diff(verify::naive_multiply(l, verify::naive_transpose(l)), w) < 1e-12);

  DenseMatrix b = gaussian_matrix(rng, 12, 3, 0.0, 1.0);
  const DenseMatrix expected = verify::gauss_solve(w, b);
  cholesky_solve_inplace(l, b);
  CHECK(max_abs_diff(b, expected) < 1e-11);
}

TEST_CASE("Cholesky reports the failing pivot") {
  const DenseMatrix a{{4, 2, 0}, {2, 1, 0}, {0, 0, 1}};
  try {
    cholesky_factor(a);
    FAIL("expected NotPositiveDefinite");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.pivot() == 1);
  }
}

TEST_CASE("Jacobi SVD") {
  RngStream rng(3);
  for (auto [m, n] : {std::pair{9, 4}, std::pair{4, 4}, std::pair{30, 7}}) {
    const DenseMatrix a = gaussian_matrix(rng, m, n, 0.0, 1.0);
    const SvdResult s = svd(a);
    REQUIRE(s.sigma.size() == static_cast<std::size_t>(n));
    for (std::size_t k = 1; k < s.sigma.size(); ++k) CHECK(s.sigma[k - 1] >= s.sigma[k]);
    DenseMatrix us = s.u;
    for (std::size_t j = 0; j < us.cols(); ++j)
      for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= s.sigma[j];
    CHECK(max_abs_diff(verify::naive_multiply(us, verify::naive_transpose(s.v)), a) < 1e-12);
    const DenseMatrix utu = verify::naive_multiply(verify::naive_transpose(s.u), s.u);
    CHECK(max_abs_diff(utu, DenseMatrix::identity(n)) < 1e-12);
  }
  const DenseMatrix a = gaussian_matrix(rng, 8, 3, 0.0, 1.0);
  const SvdResult full = svd(a, SvdMode::full_left);
  CHECK(full.u.cols() == 8);
  const DenseMatrix utu = verify::naive_multiply(verify::naive_transpose(full.u), full.u);
  CHECK(max_abs_diff(utu, DenseMatrix::identity(8)) < 1e-12);
}

TEST_CASE("norms") {
  const DenseMatrix a{{1, -2}, {-3, 0.5}};
  CHECK(max_abs(a) == 3.0);
  CHECK(norm_inf(a) == 3.5);
  CHECK_FALSE(DenseMatrix{{1, NAN}}.all_finite());
}

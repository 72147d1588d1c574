#pragma once

// Dense column-major matrices, diagonal observation covariances, a
// reproducible random stream, and the handful of factorizations the
// analysis solvers are built on.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace enkf {

using Vector = std::vector<double>;

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Row-major nested initializer, e.g. {{4, 2}, {2, 5}}.
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_column(std::span<const double> column);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[j * rows_ + i];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[j * rows_ + i];
  }

  std::span<double> col(std::size_t j) noexcept {
    return {data_.data() + j * rows_, rows_};
  }
  std::span<const double> col(std::size_t j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  DenseMatrix transpose() const;
  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Diagonal observation-error covariance R = diag(r).
class DiagObsCovariance {
 public:
  // Throws InvalidArgument unless every entry is finite and > 0.
  explicit DiagObsCovariance(Vector variances);
  static DiagObsCovariance constant(std::size_t n, double variance);

  std::size_t size() const noexcept { return r_.size(); }
  double operator[](std::size_t i) const noexcept { return r_[i]; }
  std::span<const double> values() const noexcept { return r_; }

 private:
  Vector r_;
};

// xoshiro256** seeded through splitmix64; normals by the Marsaglia polar
// method. Only integer arithmetic, sqrt and log are involved, so a seed
// reproduces the same stream on any IEEE-754 platform with a correctly
// behaving libm.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Independent stream for (seed, stream, index) triples.
  static RngStream derived(std::uint64_t seed, std::uint64_t stream,
                           std::uint64_t index = 0);

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double normal() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// rows x cols matrix with entries mean + std_i * N(0,1), filled column by
// column. std_per_row has one entry per row or a single shared entry.
DenseMatrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols,
                            double mean, std::span<const double> std_per_row);
DenseMatrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols,
                            double mean, double std);

// Lower-triangular L with L L' = A. Only the lower triangle of A is read.
// Throws NotPositiveDefinite naming the zero-based failing pivot.
DenseMatrix cholesky_factor(const DenseMatrix& a);
// Same, overwriting `a` with L (upper triangle zeroed). Avoids a second
// n x n buffer for large systems.
void cholesky_factor_inplace(DenseMatrix& a);
// Solves L L' X = B in place for all columns of B.
void cholesky_solve_inplace(const DenseMatrix& l, DenseMatrix& b);

enum class SvdMode { thin, full_left };

struct SvdResult {
  DenseMatrix u;       // rows x k (thin) or rows x rows (full_left)
  Vector sigma;        // k = min(rows, cols) values, descending
  DenseMatrix v;       // cols x k
};

// One-sided Jacobi SVD. Sweeps are capped at 100 * min(rows, cols) (at
// least 30); exceeding the cap throws NumericalFailure.
SvdResult svd(const DenseMatrix& a, SvdMode mode = SvdMode::thin);

// W = alpha V V' + beta diag(r), returned as a full symmetric matrix.
DenseMatrix sym_rank_k_update(const DenseMatrix& v, const DiagObsCovariance& r,
                              double alpha, double beta);

// Small dense helpers.
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
// a' b
DenseMatrix multiply_tn(const DenseMatrix& a, const DenseMatrix& b);
// a b'
DenseMatrix multiply_nt(const DenseMatrix& a, const DenseMatrix& b);
Vector multiply(const DenseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b) noexcept;

// Largest absolute entry.
double max_abs(const DenseMatrix& a) noexcept;
double max_abs(std::span<const double> a) noexcept;
// Induced infinity norm (largest absolute row sum).
double norm_inf(const DenseMatrix& a) noexcept;
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace enkf

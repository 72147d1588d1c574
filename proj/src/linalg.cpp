#include "enkf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "enkf/errors.hpp"

extern "C" {
void dpotrf_(const char* uplo, const int* n, double* a, const int* lda,
             int* info);
void dpotrs_(const char* uplo, const int* n, const int* nrhs, const double* a,
             const int* lda, double* b, const int* ldb, int* info);
void dsyrk_(const char* uplo, const char* trans, const int* n, const int* k,
            const double* alpha, const double* a, const int* lda,
            const double* beta, double* c, const int* ldc);
}

namespace enkf {

namespace {

int lapack_int(std::size_t n) {
  if (n > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
    throw InvalidArgument("dimension " + std::to_string(n) +
                          " exceeds the LAPACK integer range");
  }
  return static_cast<int>(n);
}

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

// ---------------------------------------------------------------------------
// DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(
    std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.assign(rows_ * cols_, 0.0);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != cols_) {
      throw DimensionMismatch("ragged matrix initializer");
    }
    std::size_t j = 0;
    for (double value : row) (*this)(i, j++) = value;
    ++i;
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_column(std::span<const double> column) {
  DenseMatrix m(column.size(), 1);
  std::copy(column.begin(), column.end(), m.data());
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// DiagObsCovariance

DiagObsCovariance::DiagObsCovariance(Vector variances)
    : r_(std::move(variances)) {
  for (std::size_t i = 0; i < r_.size(); ++i) {
    if (!(std::isfinite(r_[i]) && r_[i] > 0.0)) {
      throw InvalidArgument("observation variance r[" + std::to_string(i) +
                            "] must be finite and positive");
    }
  }
}

DiagObsCovariance DiagObsCovariance::constant(std::size_t n, double variance) {
  return DiagObsCovariance(Vector(n, variance));
}

// ---------------------------------------------------------------------------
// RngStream

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& word : s_) word = splitmix64(x);
}

RngStream RngStream::derived(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t index) {
  std::uint64_t x = seed;
  std::uint64_t mixed = splitmix64(x);
  x = mixed ^ (stream * 0xD1B54A32D192ED03ULL);
  mixed = splitmix64(x);
  x = mixed ^ (index * 0x8CB92BA72F3D8DD7ULL);
  return RngStream(splitmix64(x));
}

std::uint64_t RngStream::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

// ---------------------------------------------------------------------------
// Sampling

DenseMatrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols,
                            double mean, std::span<const double> std_per_row) {
  if (std_per_row.size() != 1 && std_per_row.size() != rows) {
    throw DimensionMismatch("gaussian_matrix: expected 1 or " +
                            std::to_string(rows) + " standard deviations, got " +
                            std::to_string(std_per_row.size()));
  }
  for (double s : std_per_row) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("gaussian_matrix: standard deviation must be >= 0");
    }
  }
  const bool shared = std_per_row.size() == 1;
  DenseMatrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      const double s = shared ? std_per_row[0] : std_per_row[i];
      m(i, j) = mean + s * rng.normal();
    }
  }
  return m;
}

DenseMatrix gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols,
                            double mean, double std) {
  const double one[] = {std};
  return gaussian_matrix(rng, rows, cols, mean, one);
}

// ---------------------------------------------------------------------------
// Cholesky (LAPACK)

void cholesky_factor_inplace(DenseMatrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("cholesky_factor: matrix is not square");
  }
  const std::size_t n = a.rows();
  if (n == 0) return;
  const int ni = lapack_int(n);
  int info = 0;
  dpotrf_("L", &ni, a.data(), &ni, &info);
  if (info > 0) throw NotPositiveDefinite(static_cast<std::size_t>(info - 1));
  if (info < 0) throw NumericalFailure("dpotrf: illegal argument");
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) a(i, j) = 0.0;
}

DenseMatrix cholesky_factor(const DenseMatrix& a) {
  DenseMatrix l = a;
  cholesky_factor_inplace(l);
  return l;
}

void cholesky_solve_inplace(const DenseMatrix& l, DenseMatrix& b) {
  if (l.rows() != l.cols() || b.rows() != l.rows()) {
    throw DimensionMismatch("cholesky_solve: factor is " +
                            std::to_string(l.rows()) + "x" +
                            std::to_string(l.cols()) + ", right-hand side has " +
                            std::to_string(b.rows()) + " rows");
  }
  if (b.empty()) return;
  const int n = lapack_int(l.rows());
  const int nrhs = lapack_int(b.cols());
  int info = 0;
  dpotrs_("L", &n, &nrhs, l.data(), &n, b.data(), &n, &info);
  if (info != 0) throw NumericalFailure("dpotrs failed");
}

// ---------------------------------------------------------------------------
// SVD: one-sided Jacobi (Hestenes)

namespace {

void rotate(std::span<double> x, std::span<double> y, double c,
            double s) noexcept {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

double norm2(std::span<const double> x) noexcept { return std::sqrt(dot(x, x)); }

// Replaces the columns of q flagged in `missing` by unit vectors orthogonal
// to every other column.
void complete_orthonormal(DenseMatrix& q, const std::vector<bool>& missing) {
  const std::size_t m = q.rows();
  std::size_t candidate = 0;
  for (std::size_t j = 0; j < q.cols(); ++j) {
    if (!missing[j]) continue;
    for (;;) {
      if (candidate >= m) {
        throw NumericalFailure("svd: failed to complete orthonormal basis");
      }
      auto col = q.col(j);
      std::fill(col.begin(), col.end(), 0.0);
      col[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < q.cols(); ++k) {
          if (k == j || (missing[k] && k > j)) continue;
          const auto other = q.col(k);
          const double proj = dot(other, col);
          for (std::size_t i = 0; i < m; ++i) col[i] -= proj * other[i];
        }
      }
      const double nrm = norm2(col);
      if (nrm > 0.5) {
        for (double& x : col) x /= nrm;
        break;
      }
    }
  }
}

// Requires a.rows() >= a.cols().
SvdResult jacobi_svd_tall(const DenseMatrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  DenseMatrix u = a;
  DenseMatrix v = DenseMatrix::identity(n);

  const std::size_t max_sweeps = 100 * std::max<std::size_t>(n, 1);
  constexpr double tol = 1e-15;
  bool converged = n < 2;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = dot(u.col(p), u.col(p));
        const double beta = dot(u.col(q), u.col(q));
        const double gamma = dot(u.col(p), u.col(q));
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) {
          continue;
        }
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate(u.col(p), u.col(q), c, s);
        rotate(v.col(p), v.col(q), c, s);
      }
    }
  }
  if (!converged) {
    throw NumericalFailure("svd: one-sided Jacobi did not converge within " +
                           std::to_string(max_sweeps) + " sweeps");
  }

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(u.col(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return sigma[x] > sigma[y];
  });

  SvdResult out{DenseMatrix(m, n), Vector(n), DenseMatrix(n, n)};
  const double smax = n > 0 ? sigma[order[0]] : 0.0;
  const double zero_tol = std::max(smax, 1.0) * 1e-300;
  std::vector<bool> missing(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = sigma[j];
    const auto src = u.col(j);
    auto dst = out.u.col(k);
    if (sigma[j] > zero_tol) {
      for (std::size_t i = 0; i < m; ++i) dst[i] = src[i] / sigma[j];
    } else {
      out.sigma[k] = 0.0;
      missing[k] = true;
    }
    std::copy(v.col(j).begin(), v.col(j).end(), out.v.col(k).begin());
  }
  if (std::find(missing.begin(), missing.end(), true) != missing.end()) {
    complete_orthonormal(out.u, missing);
  }
  return out;
}

DenseMatrix extend_to_square(const DenseMatrix& u) {
  const std::size_t m = u.rows();
  DenseMatrix full(m, m);
  std::copy(u.data(), u.data() + u.size(), full.data());
  std::vector<bool> missing(m, false);
  for (std::size_t j = u.cols(); j < m; ++j) missing[j] = true;
  complete_orthonormal(full, missing);
  return full;
}

}  // namespace

SvdResult svd(const DenseMatrix& a, SvdMode mode) {
  if (!a.all_finite()) throw InvalidArgument("svd: non-finite input");
  SvdResult result;
  if (a.rows() >= a.cols()) {
    result = jacobi_svd_tall(a);
  } else {
    SvdResult t = jacobi_svd_tall(a.transpose());
    result = SvdResult{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  if (mode == SvdMode::full_left && result.u.cols() < a.rows()) {
    result.u = extend_to_square(result.u);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Products

DenseMatrix sym_rank_k_update(const DenseMatrix& v, const DiagObsCovariance& r,
                              double alpha, double beta) {
  if (v.rows() != r.size()) {
    throw DimensionMismatch("sym_rank_k_update: V has " +
                            std::to_string(v.rows()) + " rows but R has " +
                            std::to_string(r.size()) + " entries");
  }
  const std::size_t n = v.rows();
  DenseMatrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) w(i, i) = r[i];
  if (n == 0) return w;
  if (v.cols() > 0) {
    const int ni = lapack_int(n);
    const int k = lapack_int(v.cols());
    dsyrk_("L", "N", &ni, &k, &alpha, v.data(), &ni, &beta, w.data(), &ni);
  } else {
    for (std::size_t i = 0; i < n; ++i) w(i, i) *= beta;
  }
  for (std::size_t j = 1; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) w(i, j) = w(j, i);
  return w;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("multiply: inner dimensions differ");
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto cj = c.col(j);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      const auto ak = a.col(k);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
    }
  }
  return c;
}

DenseMatrix multiply_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionMismatch("multiply_tn: row counts differ");
  }
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) c(i, j) = dot(a.col(i), b.col(j));
  return c;
}

DenseMatrix multiply_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionMismatch("multiply_nt: column counts differ");
  }
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const auto ak = a.col(k);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double bjk = b(j, k);
      if (bjk == 0.0) continue;
      auto cj = c.col(j);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bjk;
    }
  }
  return c;
}

Vector multiply(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw DimensionMismatch("multiply: vector length differs from columns");
  }
  Vector y(a.rows(), 0.0);
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const auto ak = a.col(k);
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] += ak[i] * x[k];
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> a) noexcept {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double max_abs(const DenseMatrix& a) noexcept { return max_abs(a.values()); }

double norm_inf(const DenseMatrix& a) noexcept {
  Vector row_sums(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) row_sums[i] += std::abs(a(i, j));
  return row_sums.empty() ? 0.0
                          : *std::max_element(row_sums.begin(), row_sums.end());
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("max_abs_diff: shapes differ");
  }
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

}  // namespace enkf

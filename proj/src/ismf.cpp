#include "enkf/ismf.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <cstring>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "enkf/errors.hpp"
#include "enkf/stopwatch.hpp"

namespace enkf {

namespace {

void check_system(const DiagObsCovariance& r, const DenseMatrix& v,
                  const DenseMatrix& d) {
  if (v.rows() != r.size() || d.rows() != r.size()) {
    throw DimensionMismatch(
        "analysis system: R has " + std::to_string(r.size()) +
        " entries, V has " + std::to_string(v.rows()) + " rows, D has " +
        std::to_string(d.rows()) + " rows");
  }
  if (v.cols() != d.cols()) {
    throw DimensionMismatch("analysis system: V has " +
                            std::to_string(v.cols()) + " columns, D has " +
                            std::to_string(d.cols()));
  }
  if (v.cols() == 0) {
    throw InvalidArgument("analysis system: ensemble size must be >= 1");
  }
  if (!v.all_finite() || !d.all_finite()) {
    throw InvalidArgument("analysis system: non-finite entry in V or D");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// IsmfWorkspace

IsmfWorkspace::IsmfWorkspace(const DiagObsCovariance& r, const DenseMatrix& v,
                             const DenseMatrix& d, const IsmfOptions& options)
    : r_(r),
      v_(v),
      g_(v.rows(), 2 * v.cols()),
      h_(v.rows(), 0.0),
      check_frozen_(options.check_frozen_columns) {
  check_system(r, v, d);
  const std::size_t n = v.rows();
  std::memcpy(g_.data(), v.data(), sizeof(double) * n * v.cols());
  std::memcpy(g_.data() + n * v.cols(), d.data(), sizeof(double) * n * d.cols());
  if (check_frozen_) frozen_ = DenseMatrix(n, v.cols());
}

std::uint64_t IsmfWorkspace::scale_columns(std::size_t first,
                                           std::size_t last) {
  const std::size_t n = n_obs();
  const auto r = r_.values();
  for (std::size_t c = first; c < last; ++c) {
    auto col = g_.col(c);
    for (std::size_t i = 0; i < n; ++i) col[i] /= r[i];
  }
  return static_cast<std::uint64_t>(last - first) * n;
}

std::uint64_t IsmfWorkspace::prepare_level(std::size_t k) {
  const std::size_t n = n_obs();
  const auto u = std::span<const double>(g_.col(k - 1));
  const double denom = 1.0 + dot(v_.col(k - 1), u);
  if (!std::isfinite(denom) || std::abs(denom) < kSingularUpdateThreshold) {
    throw SingularUpdate(k, std::abs(denom));
  }
  for (std::size_t i = 0; i < n; ++i) h_[i] = u[i] / denom;
  if (check_frozen_) {
    std::copy(u.begin(), u.end(), frozen_.col(k - 1).begin());
  }
  level_ = k;
  return 2 * static_cast<std::uint64_t>(n);
}

std::uint64_t IsmfWorkspace::update_columns(std::size_t k, std::size_t first,
                                            std::size_t last) {
  if (first < k) {
    throw NumericalFailure("ismf: level " + std::to_string(k) +
                           " attempted to update frozen column " +
                           std::to_string(first));
  }
  const std::size_t n = n_obs();
  const auto vk = v_.col(k - 1);
  for (std::size_t c = first; c < last; ++c) {
    auto col = g_.col(c);
    const double s = dot(vk, col);
    for (std::size_t i = 0; i < n; ++i) col[i] -= h_[i] * s;
  }
  return 2 * static_cast<std::uint64_t>(last - first) * n;
}

DenseMatrix IsmfWorkspace::take_solution() {
  const std::size_t n = n_obs();
  const std::size_t m = n_ens();
  if (check_frozen_) {
    for (std::size_t k = 0; k < level_; ++k) {
      if (!std::equal(frozen_.col(k).begin(), frozen_.col(k).end(),
                      g_.col(k).begin())) {
        throw NumericalFailure("ismf: frozen column u_" +
                               std::to_string(k + 1) +
                               " was modified after its level");
      }
    }
  }
  DenseMatrix z(n, m);
  std::memcpy(z.data(), g_.data() + n * m, sizeof(double) * n * m);
  return z;
}

// ---------------------------------------------------------------------------
// Solvers

SolverResult ismf_solve(const DiagObsCovariance& r, const DenseMatrix& v,
                        const DenseMatrix& d, const IsmfOptions& options) {
  Stopwatch timer;
  IsmfWorkspace ws(r, v, d, options);
  const std::size_t n_ens = ws.n_ens();
  const std::size_t n_cols = ws.n_columns();

  std::uint64_t ops = ws.scale_columns(0, n_cols);
  for (std::size_t k = 1; k <= n_ens; ++k) {
    ops += ws.prepare_level(k);
    ops += ws.update_columns(k, k, n_cols);
  }

  SolverResult result;
  result.z = ws.take_solution();
  result.solver = SolverChoice::sherman;
  if (options.count_operations) result.ops = OpCount{ops};
  result.seconds = timer.seconds();
  return result;
}

ColumnBlock column_block(std::size_t offset, std::size_t remaining,
                         std::size_t workers, std::size_t worker) noexcept {
  const std::size_t per = (remaining + workers - 1) / workers;
  const std::size_t first = std::min(offset + worker * per, offset + remaining);
  const std::size_t last = std::min(first + per, offset + remaining);
  return {first, last};
}

SolverResult ismf_solve_blocked(const DiagObsCovariance& r,
                                const DenseMatrix& v, const DenseMatrix& d,
                                std::size_t workers,
                                const IsmfOptions& options) {
  if (workers == 0) throw InvalidArgument("ismf_solve_blocked: workers >= 1");
  if (workers == 1) return ismf_solve(r, v, d, options);

  Stopwatch timer;
  IsmfWorkspace ws(r, v, d, options);
  const std::size_t n_ens = ws.n_ens();
  const std::size_t n_cols = ws.n_columns();

  std::vector<std::uint64_t> ops(workers, 0);
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::barrier sync(static_cast<std::ptrdiff_t>(workers));

  auto work = [&](std::size_t w) {
    const auto initial = column_block(0, n_cols, workers, w);
    ops[w] += ws.scale_columns(initial.first, initial.last);
    for (std::size_t k = 1; k <= n_ens; ++k) {
      sync.arrive_and_wait();
      if (w == 0) {
        try {
          ops[0] += ws.prepare_level(k);
        } catch (...) {
          failure = std::current_exception();
          abort.store(true);
        }
      }
      sync.arrive_and_wait();
      if (abort.load()) return;
      const auto block = column_block(k, n_cols - k, workers, w);
      ops[w] += ws.update_columns(k, block.first, block.last);
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w);
    work(0);
  }
  if (failure) std::rethrow_exception(failure);

  SolverResult result;
  result.z = ws.take_solution();
  result.solver = SolverChoice::sherman;
  if (options.count_operations) {
    std::uint64_t total = 0;
    for (auto n : ops) total += n;
    result.ops = OpCount{total};
  }
  result.seconds = timer.seconds();
  return result;
}

OpCount op_count_formula(std::size_t n_ens, std::size_t n_obs) {
  const auto e = static_cast<std::uint64_t>(n_ens);
  const auto o = static_cast<std::uint64_t>(n_obs);
  return OpCount{3 * (e * e * o + e * o)};
}

// ---------------------------------------------------------------------------
// Recursive reference form

namespace {

// rhs_tag is 0 for the caller's vector and i for v_i, so base-level solves
// can be attributed.
Vector recurse(const DiagObsCovariance& r, const DenseMatrix& v,
               std::span<const double> x, std::size_t rhs_tag, std::size_t k,
               RecursionStats* stats) {
  if (stats) ++stats->calls;
  const std::size_t n = x.size();
  if (k == 0) {
    if (stats && rhs_tag == 1) ++stats->base_solves_v1;
    Vector z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] / r[i];
    return z;
  }
  const auto vk = v.col(k - 1);
  Vector f = recurse(r, v, x, rhs_tag, k - 1, stats);
  Vector g = recurse(r, v, vk, k, k - 1, stats);
  const double scale = dot(vk, f) / (1.0 + dot(vk, g));
  for (std::size_t i = 0; i < n; ++i) f[i] -= g[i] * scale;
  return f;
}

}  // namespace

Vector recursive_sm_solve(const DiagObsCovariance& r, const DenseMatrix& v,
                          std::span<const double> x, std::size_t level,
                          RecursionStats* stats) {
  if (v.cols() > kRecursiveMaxEnsemble) {
    throw OracleSizeExceeded("recursive_sm_solve: ensemble size " +
                          std::to_string(v.cols()) + " exceeds oracle limit " +
                          std::to_string(kRecursiveMaxEnsemble));
  }
  if (level > v.cols()) {
    throw InvalidArgument("recursive_sm_solve: level " + std::to_string(level) +
                          " out of range [0, " + std::to_string(v.cols()) + "]");
  }
  if (v.rows() != r.size() || x.size() != r.size()) {
    throw DimensionMismatch("recursive_sm_solve: inconsistent dimensions");
  }
  return recurse(r, v, x, 0, level, stats);
}

}  // namespace enkf

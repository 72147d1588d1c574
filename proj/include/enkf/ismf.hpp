#pragma once

// Iterative Sherman-Morrison solver for (diag(r) + V V') Z = D.
//
// W = R + sum_k v_k v_k' is built one rank-one term at a time. Level 0
// applies R^{-1} to every column of V and D; level k removes the k-th
// rank-one term from the columns still in play:
//
//   h_k     = u_k / (1 + v_k' u_k)
//   col    <- col - h_k (v_k' col)      for col in {u_{k+1}, ..., u_Nens, Z}
//
// u_k is frozen once it has produced h_k. Cost is O(Nens^2 Nobs) and no
// Nobs x Nobs matrix is ever formed.

#include <cstddef>
#include <span>

#include "enkf/linalg.hpp"
#include "enkf/solver_types.hpp"

namespace enkf {

struct IsmfOptions {
  // Tally long operations into SolverResult::ops.
  bool count_operations = false;
  // Snapshot every u_k when it is frozen and verify at the end that it was
  // never written again. Throws NumericalFailure on violation.
  bool check_frozen_columns = false;
};

// |1 + v_k' u_k| below this aborts with SingularUpdate.
inline constexpr double kSingularUpdateThreshold = 1e-14;

// Working storage G = [U | Z] (Nobs x 2 Nens) plus the scratch vector h.
// Column c < Nens holds u_{c+1}; column Nens + j holds z_{j+1}.
class IsmfWorkspace {
 public:
  IsmfWorkspace(const DiagObsCovariance& r, const DenseMatrix& v,
                const DenseMatrix& d, const IsmfOptions& options);

  std::size_t n_obs() const noexcept { return g_.rows(); }
  std::size_t n_ens() const noexcept { return v_.cols(); }
  std::size_t n_columns() const noexcept { return g_.cols(); }
  // Last completed level (0 after step one).
  std::size_t level() const noexcept { return level_; }

  // Step one on columns [first, last): divide rows by r.
  std::uint64_t scale_columns(std::size_t first, std::size_t last);
  // Forms h_k from the current u_k and advances level() to k.
  std::uint64_t prepare_level(std::size_t k);
  // Applies level k to columns [first, last); requires first >= k.
  std::uint64_t update_columns(std::size_t k, std::size_t first,
                               std::size_t last);

  // Verifies frozen columns (when enabled) and moves Z out.
  DenseMatrix take_solution();

 private:
  const DiagObsCovariance& r_;
  const DenseMatrix& v_;
  DenseMatrix g_;
  Vector h_;
  std::size_t level_ = 0;
  bool check_frozen_;
  DenseMatrix frozen_;  // snapshots of u_k, one column per level
};

SolverResult ismf_solve(const DiagObsCovariance& r, const DenseMatrix& v,
                        const DenseMatrix& d, const IsmfOptions& options = {});

// Same arithmetic as ismf_solve, with the columns of [U | Z] still in play
// at each level split into contiguous blocks, one per worker. A barrier
// separates levels and h_k is formed once per level by worker 0. Every
// column sees the same operation sequence as in the serial path, so the
// result does not depend on the worker count.
SolverResult ismf_solve_blocked(const DiagObsCovariance& r,
                                const DenseMatrix& v, const DenseMatrix& d,
                                std::size_t workers,
                                const IsmfOptions& options = {});

// Column block [first, last) owned by `worker` when `remaining` columns
// starting at `offset` are split across `workers`. Empty blocks have
// first == last.
struct ColumnBlock {
  std::size_t first;
  std::size_t last;
};
ColumnBlock column_block(std::size_t offset, std::size_t remaining,
                         std::size_t workers, std::size_t worker) noexcept;

// Closed-form long-operation count 3 (Nens^2 Nobs + Nens Nobs).
OpCount op_count_formula(std::size_t n_ens, std::size_t n_obs);

// Recursive reference form: returns W(level)^{-1} x by literal recursion,
//   F(x, 0) = R^{-1} x
//   F(x, k) = f - g (v_k' f) / (1 + v_k' g),  f = F(x, k-1), g = F(v_k, k-1)
// without reusing any intermediate solve. Exponential cost; limited to
// Nens <= kRecursiveMaxEnsemble.
inline constexpr std::size_t kRecursiveMaxEnsemble = 8;

struct RecursionStats {
  std::size_t calls = 0;
  // Base-level solves R g = v_1.
  std::size_t base_solves_v1 = 0;
};

Vector recursive_sm_solve(const DiagObsCovariance& r, const DenseMatrix& v,
                          std::span<const double> x, std::size_t level,
                          RecursionStats* stats = nullptr);

}  // namespace enkf

#pragma once

// Stochastic (perturbed-observation) ensemble Kalman filter.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "enkf/linalg.hpp"
#include "enkf/solver_types.hpp"

namespace enkf {

enum class EnsembleStage { background, analysis };

// Nstate x Nens ensemble, one member per column.
struct EnsembleMatrix {
  DenseMatrix states;
  EnsembleStage stage = EnsembleStage::background;
  double time = 0.0;

  std::size_t n_state() const noexcept { return states.rows(); }
  std::size_t n_ens() const noexcept { return states.cols(); }
};

// Linear selection operator H: picks Nobs distinct state components.
class ObservationOperator {
 public:
  static ObservationOperator identity(std::size_t n_state);
  // Indices must be strictly increasing and < n_state.
  static ObservationOperator selection(std::size_t n_state,
                                       std::vector<std::size_t> indices);

  std::size_t n_state() const noexcept { return n_state_; }
  std::size_t n_obs() const noexcept { return indices_.size(); }
  bool is_identity() const noexcept { return identity_; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }

  Vector apply(std::span<const double> x) const;
  DenseMatrix apply(const DenseMatrix& x) const;
  // H' y: observed components receive y, all others zero.
  Vector adjoint(std::span<const double> y) const;

 private:
  ObservationOperator(std::size_t n_state, std::vector<std::size_t> indices,
                      bool identity)
      : n_state_(n_state), indices_(std::move(indices)), identity_(identity) {}

  std::size_t n_state_ = 0;
  std::vector<std::size_t> indices_;
  bool identity_ = false;
};

// y plus per-member perturbed copies Y = y 1' + Upsilon.
struct ObservationBatch {
  Vector y;
  DenseMatrix perturbed;      // Y
  DenseMatrix perturbations;  // Upsilon
};

// Impact factors delta(i, j) in [0, 1] of observation j on state entry i.
class InfluenceMatrix {
 public:
  explicit InfluenceMatrix(DenseMatrix delta);
  const DenseMatrix& delta() const noexcept { return delta_; }

 private:
  DenseMatrix delta_;
};

// Propagates a single state vector in place from t0 to t1.
class ModelOperator {
 public:
  virtual ~ModelOperator() = default;
  virtual std::size_t state_size() const = 0;
  virtual void advance(std::span<double> state, double t0, double t1) const = 0;
};

Vector ensemble_mean(const EnsembleMatrix& x);

// S = (X - mean 1') / sqrt(Nens - 1), so S S' is the sample covariance.
DenseMatrix member_deviations(const EnsembleMatrix& x);

ObservationBatch perturb_observations(std::span<const double> y,
                                      const DiagObsCovariance& r,
                                      std::size_t n_ens, RngStream& rng);

// D = Y - H X.
DenseMatrix innovations(const ObservationBatch& obs,
                        const ObservationOperator& h, const EnsembleMatrix& x);

struct AnalysisOptions {
  SolverChoice solver = SolverChoice::sherman;
  // > 1 runs the blocked Sherman-Morrison variant.
  std::size_t workers = 1;
  // Partial localization: correction = (delta o (S V')) Z.
  const InfluenceMatrix* localization = nullptr;
};

// X^A = X^B + S V' Z with (R + V V') Z = D, V = H S.
EnsembleMatrix analysis_step(const EnsembleMatrix& x, const ObservationBatch& obs,
                             const ObservationOperator& h,
                             const DiagObsCovariance& r,
                             const AnalysisOptions& options = {});

// Advances every member from t0 to t1 (t1 >= t0). Members are split across
// `workers` threads; failures are rethrown tagged with the member index.
EnsembleMatrix forecast_step(const ModelOperator& model, const EnsembleMatrix& x,
                             double t0, double t1, std::size_t workers = 1);

// Scales deviations about the ensemble mean by alpha >= 1; the mean is
// left untouched.
EnsembleMatrix inflate(const EnsembleMatrix& x, double alpha);

// Adds N(0, std^2) model-error noise to every entry.
void add_model_error(EnsembleMatrix& x, double std, RngStream& rng);

// Cyclic index distance min(|i - p|, n - |i - p|).
std::size_t cyclic_distance(std::size_t i, std::size_t p, std::size_t n) noexcept;

// delta(i, j) = exp(-d(i, idx_j) / length_scale) with d the cyclic index
// distance; length_scale defaults to Nstate. A positive cutoff zeroes
// entries with d > cutoff.
InfluenceMatrix influence_matrix_cyclic(const ObservationOperator& h,
                                        std::optional<double> length_scale = {},
                                        std::optional<double> cutoff = {});

}  // namespace enkf

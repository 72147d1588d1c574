#include "enkf/filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "enkf/errors.hpp"
#include "enkf/solvers.hpp"
#include "parallel.hpp"

namespace enkf {

// ---------------------------------------------------------------------------
// ObservationOperator

ObservationOperator ObservationOperator::identity(std::size_t n_state) {
  std::vector<std::size_t> idx(n_state);
  for (std::size_t i = 0; i < n_state; ++i) idx[i] = i;
  return ObservationOperator(n_state, std::move(idx), true);
}

ObservationOperator ObservationOperator::selection(
    std::size_t n_state, std::vector<std::size_t> indices) {
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= n_state) {
      throw InvalidArgument("observation index " + std::to_string(indices[k]) +
                            " outside state of size " + std::to_string(n_state));
    }
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw InvalidArgument("observation indices must be strictly increasing");
    }
  }
  const bool identity = indices.size() == n_state;
  return ObservationOperator(n_state, std::move(indices), identity);
}

Vector ObservationOperator::apply(std::span<const double> x) const {
  if (x.size() != n_state_) {
    throw DimensionMismatch("observation operator expects a state of size " +
                            std::to_string(n_state_) + ", got " +
                            std::to_string(x.size()));
  }
  if (identity_) return Vector(x.begin(), x.end());
  Vector y(indices_.size());
  for (std::size_t k = 0; k < indices_.size(); ++k) y[k] = x[indices_[k]];
  return y;
}

DenseMatrix ObservationOperator::apply(const DenseMatrix& x) const {
  if (x.rows() != n_state_) {
    throw DimensionMismatch("observation operator expects " +
                            std::to_string(n_state_) + " rows, got " +
                            std::to_string(x.rows()));
  }
  if (identity_) return x;
  DenseMatrix y(indices_.size(), x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    const auto src = x.col(j);
    auto dst = y.col(j);
    for (std::size_t k = 0; k < indices_.size(); ++k) dst[k] = src[indices_[k]];
  }
  return y;
}

Vector ObservationOperator::adjoint(std::span<const double> y) const {
  if (y.size() != indices_.size()) {
    throw DimensionMismatch("observation adjoint: expected " +
                            std::to_string(indices_.size()) + " values");
  }
  Vector x(n_state_, 0.0);
  for (std::size_t k = 0; k < indices_.size(); ++k) x[indices_[k]] = y[k];
  return x;
}

// ---------------------------------------------------------------------------
// InfluenceMatrix

InfluenceMatrix::InfluenceMatrix(DenseMatrix delta) : delta_(std::move(delta)) {
  for (double x : delta_.values()) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw InvalidArgument("influence factors must lie in [0, 1]");
    }
  }
}

// ---------------------------------------------------------------------------
// Statistics

Vector ensemble_mean(const EnsembleMatrix& x) {
  const std::size_t n = x.n_state();
  const std::size_t m = x.n_ens();
  if (m == 0) throw InvalidArgument("ensemble_mean: empty ensemble");
  Vector mean(n, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const auto col = x.states.col(j);
    for (std::size_t i = 0; i < n; ++i) mean[i] += col[i];
  }
  for (double& v : mean) v /= static_cast<double>(m);
  return mean;
}

namespace {

// X - mean 1' (unscaled).
DenseMatrix anomalies(const EnsembleMatrix& x) {
  if (x.n_ens() < 2) {
    throw InvalidArgument("ensemble statistics need at least 2 members, got " +
                          std::to_string(x.n_ens()));
  }
  const Vector mean = ensemble_mean(x);
  DenseMatrix a = x.states;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    auto col = a.col(j);
    for (std::size_t i = 0; i < a.rows(); ++i) col[i] -= mean[i];
  }
  return a;
}

}  // namespace

DenseMatrix member_deviations(const EnsembleMatrix& x) {
  DenseMatrix s = anomalies(x);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.n_ens() - 1));
  for (double& v : s.values()) v *= scale;
  return s;
}

// ---------------------------------------------------------------------------
// Observations

ObservationBatch perturb_observations(std::span<const double> y,
                                      const DiagObsCovariance& r,
                                      std::size_t n_ens, RngStream& rng) {
  if (y.size() != r.size()) {
    throw DimensionMismatch("perturb_observations: y and R sizes differ");
  }
  Vector stds(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) stds[i] = std::sqrt(r[i]);
  ObservationBatch batch;
  batch.y.assign(y.begin(), y.end());
  batch.perturbations = gaussian_matrix(rng, y.size(), n_ens, 0.0, stds);
  batch.perturbed = batch.perturbations;
  for (std::size_t j = 0; j < n_ens; ++j) {
    auto col = batch.perturbed.col(j);
    for (std::size_t i = 0; i < y.size(); ++i) col[i] = y[i] + col[i];
  }
  return batch;
}

DenseMatrix innovations(const ObservationBatch& obs,
                        const ObservationOperator& h, const EnsembleMatrix& x) {
  DenseMatrix d = h.apply(x.states);
  if (d.rows() != obs.perturbed.rows() || d.cols() != obs.perturbed.cols()) {
    throw DimensionMismatch("innovations: observation batch is " +
                            std::to_string(obs.perturbed.rows()) + "x" +
                            std::to_string(obs.perturbed.cols()) +
                            ", H X is " + std::to_string(d.rows()) + "x" +
                            std::to_string(d.cols()));
  }
  for (std::size_t k = 0; k < d.size(); ++k)
    d.data()[k] = obs.perturbed.data()[k] - d.data()[k];
  return d;
}

// ---------------------------------------------------------------------------
// Analysis

EnsembleMatrix analysis_step(const EnsembleMatrix& x, const ObservationBatch& obs,
                             const ObservationOperator& h,
                             const DiagObsCovariance& r,
                             const AnalysisOptions& options) {
  if (h.n_state() != x.n_state() || h.n_obs() != r.size()) {
    throw DimensionMismatch("analysis_step: H, R and ensemble disagree");
  }
  const std::size_t n_ens = x.n_ens();
  const DenseMatrix d = innovations(obs, h, x);
  const DenseMatrix a = anomalies(x);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_ens - 1));

  DenseMatrix s = a;
  for (double& v : s.values()) v *= scale;
  DenseMatrix v = h.apply(s);

  SolverResult solved;
  if (options.solver == SolverChoice::svd) {
    solved = analysis_solve_svd(r, h.apply(a), d);
  } else {
    solved = solve_analysis_system(options.solver, r, v, d, options.workers);
  }
  const DenseMatrix& z = solved.z;

  EnsembleMatrix out{x.states, EnsembleStage::analysis, x.time};
  if (options.localization == nullptr) {
    // S (V' Z): Nens x Nens inner product keeps the cost O(Nens^2 Nstate).
    const DenseMatrix weights = multiply_tn(v, z);
    const DenseMatrix correction = multiply(s, weights);
    for (std::size_t k = 0; k < out.states.size(); ++k)
      out.states.data()[k] += correction.data()[k];
    return out;
  }

  const DenseMatrix& delta = options.localization->delta();
  if (delta.rows() != x.n_state() || delta.cols() != h.n_obs()) {
    throw DimensionMismatch("localization: influence matrix must be Nstate x Nobs");
  }
  // (delta o (S V')) Z
  DenseMatrix b = multiply_nt(s, v);
  for (std::size_t k = 0; k < b.size(); ++k) b.data()[k] *= delta.data()[k];
  const DenseMatrix correction = multiply(b, z);
  for (std::size_t k = 0; k < out.states.size(); ++k)
    out.states.data()[k] += correction.data()[k];
  return out;
}

// ---------------------------------------------------------------------------
// Forecast, inflation, model error

EnsembleMatrix forecast_step(const ModelOperator& model, const EnsembleMatrix& x,
                             double t0, double t1, std::size_t workers) {
  if (t1 < t0) throw InvalidArgument("forecast_step: t1 must be >= t0");
  if (model.state_size() != x.n_state()) {
    throw DimensionMismatch("forecast_step: model state size " +
                            std::to_string(model.state_size()) +
                            " differs from ensemble state size " +
                            std::to_string(x.n_state()));
  }
  EnsembleMatrix out{x.states, EnsembleStage::background, t1};
  if (t1 == t0) return out;
  detail::parallel_for(x.n_ens(), workers, [&](std::size_t j) {
    try {
      model.advance(out.states.col(j), t0, t1);
    } catch (const ModelDivergence& e) {
      throw ModelDivergence("member " + std::to_string(j) + ": " + e.what());
    } catch (const NumericalFailure& e) {
      throw NumericalFailure("member " + std::to_string(j) + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("member " + std::to_string(j) + ": " + e.what());
    }
  });
  return out;
}

EnsembleMatrix inflate(const EnsembleMatrix& x, double alpha) {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("inflation factor must be >= 1");
  }
  EnsembleMatrix out = x;
  if (alpha == 1.0) return out;
  const Vector mean = ensemble_mean(x);
  for (std::size_t j = 0; j < x.n_ens(); ++j) {
    auto col = out.states.col(j);
    for (std::size_t i = 0; i < x.n_state(); ++i)
      col[i] = mean[i] + alpha * (col[i] - mean[i]);
  }
  return out;
}

void add_model_error(EnsembleMatrix& x, double std, RngStream& rng) {
  if (std == 0.0) return;
  const DenseMatrix noise =
      gaussian_matrix(rng, x.n_state(), x.n_ens(), 0.0, std);
  for (std::size_t k = 0; k < noise.size(); ++k)
    x.states.data()[k] += noise.data()[k];
}

// ---------------------------------------------------------------------------
// Localization

std::size_t cyclic_distance(std::size_t i, std::size_t p,
                            std::size_t n) noexcept {
  const std::size_t diff = i > p ? i - p : p - i;
  return std::min(diff, n - diff);
}

InfluenceMatrix influence_matrix_cyclic(const ObservationOperator& h,
                                        std::optional<double> length_scale,
                                        std::optional<double> cutoff) {
  const std::size_t n = h.n_state();
  const double scale = length_scale.value_or(static_cast<double>(n));
  if (!(scale > 0.0)) throw InvalidArgument("length scale must be positive");
  DenseMatrix delta(n, h.n_obs());
  const auto idx = h.indices();
  for (std::size_t j = 0; j < idx.size(); ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto dist = static_cast<double>(cyclic_distance(i, idx[j], n));
      if (cutoff && *cutoff > 0.0 && dist > *cutoff) continue;
      delta(i, j) = std::exp(-dist / scale);
    }
  }
  return InfluenceMatrix(std::move(delta));
}

}  // namespace enkf

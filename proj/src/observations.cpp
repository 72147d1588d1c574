#include "enkf/observations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "enkf/errors.hpp"

namespace enkf {

TruthTrajectory generate_truth(const ModelOperator& model, Vector x0,
                               std::span<const double> times,
                               std::string model_tag, std::uint64_t seed) {
  if (times.empty()) throw InvalidArgument("truth trajectory needs a start time");
  if (x0.size() != model.state_size()) {
    throw DimensionMismatch("truth initial state has wrong size");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw InvalidArgument("truth times must be strictly increasing");
    }
  }
  TruthTrajectory truth;
  truth.model = std::move(model_tag);
  truth.seed = seed;
  truth.times.assign(times.begin(), times.end());
  truth.states.reserve(times.size());
  truth.states.push_back(x0);
  for (std::size_t k = 1; k < times.size(); ++k) {
    model.advance(x0, times[k - 1], times[k]);
    truth.states.push_back(x0);
  }
  return truth;
}

std::size_t observation_count(std::size_t n_state, double p_obs) {
  if (!(p_obs > 0.0 && p_obs <= 1.0)) {
    throw InvalidArgument("observed fraction must lie in (0, 1], got " +
                          std::to_string(p_obs));
  }
  const auto n_obs = static_cast<std::size_t>(
      std::floor(p_obs * static_cast<double>(n_state) + 1e-9));
  if (n_obs == 0) {
    throw InvalidArgument("observed fraction " + std::to_string(p_obs) +
                          " leaves no observed component");
  }
  return std::min(n_obs, n_state);
}

void validate(const ObsSchedule& schedule, std::size_t n_state) {
  observation_count(n_state, schedule.p_obs);
  if (!(schedule.r_value > 0.0) || !std::isfinite(schedule.r_value)) {
    throw InvalidArgument("observation variance must be positive");
  }
  for (std::size_t k = 1; k < schedule.analysis_times.size(); ++k) {
    if (!(schedule.analysis_times[k] > schedule.analysis_times[k - 1])) {
      throw InvalidArgument("analysis times must be strictly increasing");
    }
  }
}

ObservationOperator build_selection_operator(std::size_t n_state, double p_obs,
                                             SelectionStrategy strategy,
                                             std::uint64_t seed) {
  return build_selection_operator_count(
      n_state, observation_count(n_state, p_obs), strategy, seed);
}

ObservationOperator build_selection_operator_count(std::size_t n_state,
                                                   std::size_t n_obs,
                                                   SelectionStrategy strategy,
                                                   std::uint64_t seed) {
  if (n_obs == 0 || n_obs > n_state) {
    throw InvalidArgument("observation count " + std::to_string(n_obs) +
                          " outside [1, " + std::to_string(n_state) + "]");
  }
  if (n_obs == n_state) return ObservationOperator::identity(n_state);

  std::vector<std::size_t> idx(n_obs);
  if (strategy == SelectionStrategy::uniform_stride) {
    for (std::size_t k = 0; k < n_obs; ++k) idx[k] = k * n_state / n_obs;
  } else {
    std::vector<std::size_t> all(n_state);
    std::iota(all.begin(), all.end(), std::size_t{0});
    RngStream rng(seed);
    for (std::size_t k = 0; k < n_obs; ++k) {
      const std::size_t pick =
          k + static_cast<std::size_t>(rng.next_u64() % (n_state - k));
      std::swap(all[k], all[pick]);
    }
    std::copy_n(all.begin(), n_obs, idx.begin());
    std::sort(idx.begin(), idx.end());
  }
  return ObservationOperator::selection(n_state, std::move(idx));
}

Vector synthesize_observation(std::span<const double> x_true,
                              const ObservationOperator& h,
                              const DiagObsCovariance& r, RngStream& rng) {
  if (h.n_obs() != r.size()) {
    throw DimensionMismatch("observation operator and R sizes differ");
  }
  Vector y = h.apply(x_true);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += std::sqrt(r[i]) * rng.normal();
  return y;
}

EnsembleMatrix build_initial_ensemble_lorenz(std::span<const double> x0,
                                             double pct, std::size_t n_ens,
                                             RngStream& rng) {
  if (!(pct > 0.0)) throw InvalidArgument("ensemble spread fraction must be > 0");
  if (n_ens == 0) throw InvalidArgument("ensemble needs at least one member");
  Vector stds(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) stds[i] = pct * std::abs(x0[i]);
  EnsembleMatrix ens{gaussian_matrix(rng, x0.size(), n_ens, 0.0, stds)};
  for (std::size_t j = 0; j < n_ens; ++j) {
    auto col = ens.states.col(j);
    for (std::size_t i = 0; i < x0.size(); ++i) col[i] += x0[i];
  }
  return ens;
}

EnsembleMatrix build_initial_ensemble_qg(std::span<const double> x0,
                                         double std_ens, std::size_t n_ens,
                                         RngStream& rng) {
  if (!(std_ens > 0.0)) throw InvalidArgument("ensemble spread must be > 0");
  if (n_ens == 0) throw InvalidArgument("ensemble needs at least one member");
  if (x0.empty()) throw InvalidArgument("empty reference state");
  double c = 0.0;
  for (double v : x0) c += std::abs(v);
  c /= static_cast<double>(x0.size());
  EnsembleMatrix ens{gaussian_matrix(rng, x0.size(), n_ens, 0.0, std_ens)};
  for (std::size_t j = 0; j < n_ens; ++j) {
    auto col = ens.states.col(j);
    for (std::size_t i = 0; i < x0.size(); ++i) col[i] = x0[i] + col[i] * c;
  }
  return ens;
}

}  // namespace enkf

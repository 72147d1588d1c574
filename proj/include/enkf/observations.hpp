#pragma once

// Truth trajectories, observation operators and synthetic data for twin
// experiments.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "enkf/filter.hpp"
#include "enkf/linalg.hpp"

namespace enkf {

struct TruthTrajectory {
  std::vector<double> times;   // strictly increasing
  std::vector<Vector> states;  // one per time
  std::string model;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return times.size(); }
};

// Integrates x0 through `times` (times[0] is the time of x0). Throws
// InvalidArgument unless times are strictly increasing.
TruthTrajectory generate_truth(const ModelOperator& model, Vector x0,
                               std::span<const double> times,
                               std::string model_tag, std::uint64_t seed);

struct ObsSchedule {
  std::vector<double> analysis_times;
  double p_obs = 1.0;
  double r_value = 1e-4;
};

// Throws InvalidArgument for p_obs outside (0, 1], r_value <= 0, unsorted
// times, or a fraction that leaves no observed component.
void validate(const ObsSchedule& schedule, std::size_t n_state);

enum class SelectionStrategy { uniform_stride, random };

// floor(p_obs * n_state), so 961 * 0.7 observes 672 components.
std::size_t observation_count(std::size_t n_state, double p_obs);

// Uniform stride picks floor(k * n_state / n_obs); random draws a sorted
// subset from `seed`. p_obs == 1 gives the identity operator.
ObservationOperator build_selection_operator(
    std::size_t n_state, double p_obs,
    SelectionStrategy strategy = SelectionStrategy::uniform_stride,
    std::uint64_t seed = 0);

// Same with an explicit count 1 <= n_obs <= n_state.
ObservationOperator build_selection_operator_count(
    std::size_t n_state, std::size_t n_obs,
    SelectionStrategy strategy = SelectionStrategy::uniform_stride,
    std::uint64_t seed = 0);

// y = H x_true + eps, eps ~ N(0, diag(r)).
Vector synthesize_observation(std::span<const double> x_true,
                              const ObservationOperator& h,
                              const DiagObsCovariance& r, RngStream& rng);

// Member j = x0 + eta_j, eta_j ~ N(0, (pct |x0_i|)^2) per component.
EnsembleMatrix build_initial_ensemble_lorenz(std::span<const double> x0,
                                             double pct, std::size_t n_ens,
                                             RngStream& rng);

// Member j = x0 + eps_j C, eps_j ~ N(0, std_ens^2), C = mean |x0_i|.
EnsembleMatrix build_initial_ensemble_qg(std::span<const double> x0,
                                         double std_ens, std::size_t n_ens,
                                         RngStream& rng);

}  // namespace enkf

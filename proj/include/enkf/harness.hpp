#pragma once

// Twin-experiment runner: configuration, the assimilation loop over the
// requested solvers, CSV/JSON emission and the solver scaling study.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enkf/metrics.hpp"
#include "enkf/models.hpp"
#include "enkf/observations.hpp"
#include "enkf/solver_types.hpp"

namespace enkf {

inline constexpr std::string_view kVersion = "0.1.0";

enum class ModelKind { lorenz96, qg33, qg65, qg129, custom };

std::string_view to_string(ModelKind kind) noexcept;

struct ExperimentConfig {
  std::string name = "experiment";
  ModelKind model = ModelKind::lorenz96;
  Lorenz96Config lorenz;
  QGConfig qg;  // used by every QG kind; custom starts from qg33

  std::size_t n_ens = 20;
  double pct = 0.05;     // Lorenz initial spread, fraction of |x|
  double std_ens = 5.0;  // QG initial spread, multiple of mean |q|
  double inflation = 1.0;
  double model_error_std = 0.0;

  double p_obs = 1.0;
  std::optional<std::size_t> n_obs;  // overrides p_obs when set
  SelectionStrategy strategy = SelectionStrategy::uniform_stride;
  double r_value = 1e-4;

  bool localization = false;
  std::optional<double> localization_length;
  std::optional<double> localization_cutoff;

  std::size_t steps = 100;
  std::size_t analysis_interval = 1;
  std::size_t spin_up_steps = 0;
  std::vector<SolverChoice> solvers{kAllSolvers.begin(), kAllSolvers.end()};
  bool free_run = true;
  RmseAccumulation accumulation = RmseAccumulation::per_cycle;
  std::size_t workers = 1;

  std::uint64_t seed_truth = 1;
  std::uint64_t seed_ensemble = 2;
  std::uint64_t seed_obs = 3;

  std::string output_dir = "out";

  bool is_qg() const noexcept { return model != ModelKind::lorenz96; }
  std::size_t n_state() const noexcept;
  double dt() const noexcept;

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

// Line-oriented "[section]" / "key = value" text; '#' starts a comment.
// Throws ConfigError naming the offending line for malformed input, unknown
// keys or values that fail validation.
ExperimentConfig parse_config(std::string_view text,
                              std::string_view origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(config_text(c)) reproduces c exactly.
std::string config_text(const ExperimentConfig& cfg);

// ENKF_SEED_TRUTH, ENKF_SEED_ENSEMBLE and ENKF_SEED_OBS replace the
// corresponding seeds when set.
void apply_env_overrides(ExperimentConfig& cfg);

// Throws ConfigError.
void validate(const ExperimentConfig& cfg);

// "lorenz-small", "lorenz-paper-500" or "qg33-short".
std::vector<std::string> preset_names();
std::string preset_text(std::string_view name);
ExperimentConfig preset_config(std::string_view name);

// One assimilation (or free) run. Label is the solver name or "free".
struct SolverRun {
  std::string label;
  MetricSeries series;
  double rmse = 0.0;
  ElapsedReport elapsed;
  std::uint64_t ensemble_hash = 0;     // initial ensemble
  std::uint64_t observation_hash = 0;  // y and perturbed copies, all cycles
};

struct RunManifest {
  ExperimentConfig config;
  std::string version{kVersion};
  std::size_t n_state = 0;
  std::size_t n_obs = 0;
  std::uint64_t truth_hash = 0;
  std::vector<SolverRun> runs;
};

// Same truth, initial ensemble and observation noise for every solver;
// the content hashes of those inputs are compared across solvers and a
// mismatch throws NumericalFailure. Failures inside the loop are rethrown
// with the cycle and run label prepended.
RunManifest run_experiment(const ExperimentConfig& cfg);

// 64-bit FNV-1a over the raw bytes.
std::uint64_t content_hash(std::span<const double> values,
                           std::uint64_t seed = 14695981039346656037ULL);

// Shortest round-trip decimal form.
std::string format_double(double x);

std::string metrics_csv(const RunManifest& manifest);
std::string summary_csv(const RunManifest& manifest);
std::string manifest_json(const RunManifest& manifest);

// Writes metrics.csv, summary.csv, manifest.json, config.echo.ini and
// plots/<label>_{forecast,analysis}.dat into dir. Throws std::runtime_error
// on I/O failure.
void emit_csv(const RunManifest& manifest, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Scaling study on random analysis systems.

enum class SweepAxis { nobs, nens };

struct ScalingConfig {
  SweepAxis axis = SweepAxis::nobs;
  std::vector<std::size_t> values;  // at least 3
  std::size_t n_ens = 16;           // fixed when sweeping nobs
  std::size_t n_obs = 1000;         // fixed when sweeping nens
  std::vector<SolverChoice> solvers{kAllSolvers.begin(), kAllSolvers.end()};
  double r_value = 1e-4;
  std::uint64_t seed = 7;
  // Each point repeats until this much time accumulates (or max_repeats);
  // the fastest repeat is reported.
  double min_seconds = 0.2;
  std::size_t max_repeats = 200;
};

// "nobs=1000,2000,4000" or "nens=8,16,32".
void parse_sweep(std::string_view spec, ScalingConfig& cfg);

struct ScalingRow {
  SolverChoice solver;
  std::size_t n_obs;
  std::size_t n_ens;
  double seconds;
};

struct ScalingSlope {
  SolverChoice solver;
  double slope;
};

struct ScalingTable {
  SweepAxis axis;
  std::vector<ScalingRow> rows;
  std::vector<ScalingSlope> slopes;
};

ScalingTable emit_scaling_study(const ScalingConfig& cfg);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

std::string scaling_csv(const ScalingTable& table);

}  // namespace enkf

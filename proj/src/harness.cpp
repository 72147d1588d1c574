#include "enkf/harness.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "enkf/errors.hpp"
#include "enkf/filter.hpp"
#include "enkf/stopwatch.hpp"

namespace enkf {

std::uint64_t content_hash(std::span<const double> values, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

namespace {

// RNG stream ids under the ensemble and observation seeds.
enum Stream : std::uint64_t {
  kInitialEnsemble = 0,
  kModelError = 1,
  kObservationError = 2,
  kObservationPerturbation = 3,
  kTruthPerturbation = 4,
};

std::unique_ptr<ModelOperator> make_model(const ExperimentConfig& cfg) {
  if (cfg.is_qg()) return std::make_unique<QGModel>(cfg.qg);
  return std::make_unique<Lorenz96Model>(cfg.lorenz);
}

// Rethrows the active exception with `context` prepended, keeping the
// error category.
[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const ModelDivergence& e) {
    throw ModelDivergence(context + e.what());
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(context + e.what());
  } catch (const DimensionMismatch& e) {
    throw DimensionMismatch(context + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(context + e.what());
  }
}

struct Setup {
  const ExperimentConfig& cfg;
  const ModelOperator& model;
  const QGModel* qg = nullptr;  // RSE is measured on psi when set
  ObservationOperator h;
  DiagObsCovariance r;
  std::optional<InfluenceMatrix> influence;
  Vector x0;
  std::size_t record_stride = 1;      // model steps between records
  std::vector<Vector> truth;          // diagnostics space, one per record
  std::vector<Vector> truth_at_obs;   // raw state, one per analysis cycle
};

Vector diagnostic(const Setup& s, std::span<const double> x) {
  if (s.qg != nullptr) return s.qg->stream_function(x);
  return Vector(x.begin(), x.end());
}

double ensemble_rse(const Setup& s, const EnsembleMatrix& x, std::size_t rec) {
  return rse(s.truth[rec], diagnostic(s, ensemble_mean(x)));
}

Vector initial_truth(const ExperimentConfig& cfg, const ModelOperator& model) {
  const std::size_t n = cfg.n_state();
  RngStream rng = RngStream::derived(cfg.seed_truth, kTruthPerturbation);
  Vector x(n);
  if (cfg.is_qg()) {
    // A zonally uniform q stays zonal; a small random seed breaks that.
    for (double& v : x) v = 1e-3 * rng.normal();
  } else {
    for (double& v : x) v = cfg.lorenz.forcing + 0.01 * rng.normal();
  }
  if (cfg.spin_up_steps > 0) {
    model.advance(x, 0.0, static_cast<double>(cfg.spin_up_steps) * cfg.dt());
  }
  return x;
}

SolverRun run_one(const Setup& s, std::optional<SolverChoice> solver) {
  const ExperimentConfig& cfg = s.cfg;
  SolverRun run;
  run.label = solver ? std::string(to_string(*solver)) : "free";
  const double dt = cfg.dt();
  const std::size_t n_cycles = cfg.steps / cfg.analysis_interval;
  const std::size_t strides_per_cycle = cfg.analysis_interval / s.record_stride;

  RngStream ens_rng = RngStream::derived(cfg.seed_ensemble, kInitialEnsemble);
  EnsembleMatrix x =
      cfg.is_qg()
          ? build_initial_ensemble_qg(s.x0, cfg.std_ens, cfg.n_ens, ens_rng)
          : build_initial_ensemble_lorenz(s.x0, cfg.pct, cfg.n_ens, ens_rng);
  run.ensemble_hash = content_hash(x.states.values());

  const double rse0 = ensemble_rse(s, x, 0);
  run.series.add({0, 0.0, rse0, rse0});

  AnalysisOptions options;
  options.workers = cfg.workers;
  if (s.influence) options.localization = &*s.influence;
  if (solver) options.solver = *solver;

  std::uint64_t obs_hash = 14695981039346656037ULL;
  std::size_t step = 0;
  std::size_t rec = 0;
  for (std::size_t c = 1; c <= n_cycles; ++c) {
    try {
      for (std::size_t k = 0; k < strides_per_cycle; ++k) {
        const double t0 = static_cast<double>(step) * dt;
        step += s.record_stride;
        const double t1 = static_cast<double>(step) * dt;
        Stopwatch timer;
        x = forecast_step(s.model, x, t0, t1, cfg.workers);
        run.series.add_forecast_seconds(timer.seconds());
        ++rec;
        if (k + 1 < strides_per_cycle) {
          const double e = ensemble_rse(s, x, rec);
          run.series.add({rec, t1, e, e});
        }
      }
      if (cfg.model_error_std > 0.0) {
        RngStream err = RngStream::derived(cfg.seed_ensemble, kModelError, c);
        add_model_error(x, cfg.model_error_std, err);
      }
      const double rse_f = ensemble_rse(s, x, rec);
      double rse_a = rse_f;
      if (solver) {
        RngStream eps = RngStream::derived(cfg.seed_obs, kObservationError, c);
        RngStream ups =
            RngStream::derived(cfg.seed_obs, kObservationPerturbation, c);
        const Vector y = synthesize_observation(s.truth_at_obs[c - 1], s.h, s.r, eps);
        const ObservationBatch batch = perturb_observations(y, s.r, cfg.n_ens, ups);
        obs_hash = content_hash(batch.y, obs_hash);
        obs_hash = content_hash(batch.perturbed.values(), obs_hash);

        Stopwatch timer;
        if (cfg.inflation != 1.0) x = inflate(x, cfg.inflation);
        x = analysis_step(x, batch, s.h, s.r, options);
        run.series.add_analysis_seconds(timer.seconds());
        if (!x.states.all_finite()) {
          throw NumericalFailure("analysis produced non-finite states");
        }
        rse_a = ensemble_rse(s, x, rec);
      }
      run.series.add({rec, static_cast<double>(step) * dt, rse_f, rse_a});
    } catch (...) {
      rethrow_with_context("cycle " + std::to_string(c) + ", run " +
                           run.label + ": ");
    }
  }
  run.observation_hash = solver ? obs_hash : 0;
  run.rmse = run.series.analysis_rmse();
  run.elapsed = elapsed_report(run.series);
  return run;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto model = make_model(cfg);
  const std::size_t n = cfg.n_state();
  const std::size_t n_obs =
      cfg.n_obs ? *cfg.n_obs : observation_count(n, cfg.p_obs);

  Setup s{cfg, *model, dynamic_cast<const QGModel*>(model.get()),
          build_selection_operator_count(n, n_obs, cfg.strategy, cfg.seed_obs),
          DiagObsCovariance::constant(n_obs, cfg.r_value),
          std::nullopt,
          {},
          1,
          {},
          {}};
  if (cfg.localization) {
    s.influence = influence_matrix_cyclic(s.h, cfg.localization_length,
                                          cfg.localization_cutoff);
  }
  s.record_stride = cfg.accumulation == RmseAccumulation::per_step
                        ? 1
                        : cfg.analysis_interval;

  RunManifest manifest;
  manifest.config = cfg;
  manifest.n_state = n;
  manifest.n_obs = n_obs;

  // Truth at every record time.
  s.x0 = initial_truth(cfg, *model);
  const std::size_t n_records = cfg.steps / s.record_stride;
  std::vector<double> times(n_records + 1);
  for (std::size_t k = 0; k <= n_records; ++k)
    times[k] = static_cast<double>(k * s.record_stride) * cfg.dt();
  const TruthTrajectory truth =
      generate_truth(*model, s.x0, times, std::string(to_string(cfg.model)),
                     cfg.seed_truth);
  std::uint64_t truth_hash = 14695981039346656037ULL;
  const std::size_t per_cycle = cfg.analysis_interval / s.record_stride;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    truth_hash = content_hash(truth.states[k], truth_hash);
    s.truth.push_back(diagnostic(s, truth.states[k]));
    if (k > 0 && k % per_cycle == 0) s.truth_at_obs.push_back(truth.states[k]);
  }
  manifest.truth_hash = truth_hash;

  if (cfg.free_run) manifest.runs.push_back(run_one(s, std::nullopt));
  for (SolverChoice solver : cfg.solvers) manifest.runs.push_back(run_one(s, solver));

  // Replication check across the solver runs.
  const SolverRun* first = nullptr;
  for (const auto& run : manifest.runs) {
    if (run.label == "free") continue;
    if (first == nullptr) {
      first = &run;
      continue;
    }
    if (run.ensemble_hash != first->ensemble_hash ||
        run.observation_hash != first->observation_hash) {
      throw NumericalFailure("inputs of runs " + first->label + " and " +
                             run.label + " differ");
    }
  }
  return manifest;
}

// ---------------------------------------------------------------------------
// Emission

std::string metrics_csv(const RunManifest& manifest) {
  std::string out = "cycle,time,solver,rse_forecast,rse_analysis\n";
  for (const auto& run : manifest.runs) {
    for (const auto& r : run.series.records()) {
      out += std::to_string(r.cycle);
      out += ',';
      out += format_double(r.time);
      out += ',';
      out += run.label;
      out += ',';
      out += format_double(r.rse_forecast);
      out += ',';
      out += format_double(r.rse_analysis);
      out += '\n';
    }
  }
  return out;
}

std::string summary_csv(const RunManifest& manifest) {
  std::ostringstream o;
  o << "solver,rmse,forecast_s,analysis_s,total_s\n";
  char buf[64];
  auto fixed3 = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
  };
  for (const auto& run : manifest.runs) {
    o << run.label << ',' << format_double(run.rmse) << ','
      << fixed3(run.elapsed.forecast_s) << ',' << fixed3(run.elapsed.analysis_s)
      << ',' << fixed3(run.elapsed.total_s) << '\n';
  }
  return o.str();
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string manifest_json(const RunManifest& m) {
  using nlohmann::json;
  const ExperimentConfig& c = m.config;
  json j;
  j["version"] = m.version;
  j["config_text"] = config_text(c);
  j["config"] = {
      {"name", c.name},
      {"model", std::string(to_string(c.model))},
      {"n_state", m.n_state},
      {"n_obs", m.n_obs},
      {"n_ens", c.n_ens},
      {"p_obs", c.p_obs},
      {"r_value", c.r_value},
      {"steps", c.steps},
      {"analysis_interval", c.analysis_interval},
      {"spin_up_steps", c.spin_up_steps},
      {"dt", c.dt()},
      {"inflation", c.inflation},
      {"localization", c.localization},
      {"workers", c.workers},
  };
  if (c.is_qg()) {
    j["config"]["qg"] = {{"n", c.qg.n},         {"m", c.qg.m},
                         {"lx", c.qg.lx},       {"ly", c.qg.ly},
                         {"rkb", c.qg.rkb},     {"rkh", c.qg.rkh},
                         {"rkh2", c.qg.rkh2},   {"beta", c.qg.beta},
                         {"rossby", c.qg.rossby}, {"froude", c.qg.froude}};
    j["config"]["std_ens"] = c.std_ens;
    j["notes"] = json::array(
        {"QG observation-error variance is not fixed by the model "
         "description; r_value is the configured default"});
  } else {
    j["config"]["forcing"] = c.lorenz.forcing;
    j["config"]["pct"] = c.pct;
  }
  j["seeds"] = {{"truth", c.seed_truth},
                {"ensemble", c.seed_ensemble},
                {"obs", c.seed_obs}};
  j["hashes"]["truth"] = hex(m.truth_hash);
  j["runs"] = json::array();
  for (const auto& run : m.runs) {
    json r;
    r["label"] = run.label;
    r["rmse"] = run.rmse;
    r["forecast_s"] = run.elapsed.forecast_s;
    r["analysis_s"] = run.elapsed.analysis_s;
    r["total_s"] = run.elapsed.total_s;
    r["initial_ensemble_hash"] = hex(run.ensemble_hash);
    r["observation_hash"] = hex(run.observation_hash);
    json rows = json::array();
    for (const auto& rec : run.series.records())
      rows.push_back({rec.cycle, rec.time, rec.rse_forecast, rec.rse_analysis});
    r["records"] = std::move(rows);
    j["runs"].push_back(std::move(r));
  }
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void emit_csv(const RunManifest& manifest, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "plots", ec);
  if (ec) {
    throw std::runtime_error("cannot create " + (dir / "plots").string() +
                             ": " + ec.message());
  }
  write_file(dir / "metrics.csv", metrics_csv(manifest));
  write_file(dir / "summary.csv", summary_csv(manifest));
  write_file(dir / "manifest.json", manifest_json(manifest));
  write_file(dir / "config.echo.ini", config_text(manifest.config));
  for (const auto& run : manifest.runs) {
    std::string forecast = "# time rse_forecast\n";
    std::string analysis = "# time rse_analysis\n";
    for (const auto& r : run.series.records()) {
      forecast += format_double(r.time) + ' ' + format_double(r.rse_forecast) + '\n';
      analysis += format_double(r.time) + ' ' + format_double(r.rse_analysis) + '\n';
    }
    write_file(dir / "plots" / (run.label + "_forecast.dat"), forecast);
    write_file(dir / "plots" / (run.label + "_analysis.dat"), analysis);
  }
}

}  // namespace enkf

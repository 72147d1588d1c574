// Command-line front end: run experiments, scaling sweeps and the
// verification suite.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "enkf/errors.hpp"
#include "enkf/harness.hpp"
#include "enkf/verify.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

enkf::ExperimentConfig resolve_config(const std::string& path,
                                      const std::string& preset) {
  if (!preset.empty()) return enkf::preset_config(preset);
  return enkf::load_config(path);
}

int run_command(const std::string& config, const std::string& preset,
                std::size_t workers, const std::string& out) {
  enkf::ExperimentConfig cfg = resolve_config(config, preset);
  enkf::apply_env_overrides(cfg);
  if (workers > 0) cfg.workers = workers;
  if (!out.empty()) cfg.output_dir = out;
  enkf::validate(cfg);

  const enkf::RunManifest manifest = enkf::run_experiment(cfg);
  enkf::emit_csv(manifest, cfg.output_dir);
  std::cout << enkf::summary_csv(manifest);
  std::cout << "wrote " << cfg.output_dir << "\n";
  return 0;
}

int scale_command(const std::string& config, const std::string& preset,
                  const std::string& sweep, const std::string& out) {
  const enkf::ExperimentConfig exp = resolve_config(config, preset);
  enkf::ScalingConfig cfg;
  cfg.n_ens = exp.n_ens;
  cfg.n_obs = exp.n_obs ? *exp.n_obs
                        : enkf::observation_count(exp.n_state(), exp.p_obs);
  cfg.solvers = exp.solvers;
  cfg.r_value = exp.r_value;
  cfg.seed = exp.seed_obs;
  enkf::parse_sweep(sweep, cfg);
  const enkf::ScalingTable table = enkf::emit_scaling_study(cfg);
  const std::string csv = enkf::scaling_csv(table);
  std::cout << csv;
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::FILE* f = std::fopen((std::filesystem::path(out) / "scaling.csv").c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("cannot write scaling.csv in " + out);
    std::fwrite(csv.data(), 1, csv.size(), f);
    std::fclose(f);
  }
  return 0;
}

int verify_command(bool quick) {
  enkf::verify::Options options;
  options.quick = quick;
  const auto results = enkf::verify::run_acceptance(options, std::cout);
  for (const auto& r : results)
    if (!r.passed) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Kalman filter experiments"};
  app.require_subcommand(1);

  std::string config, preset, out, sweep;
  std::size_t workers = 0;
  bool quick = false;

  auto* run = app.add_subcommand("run", "run a twin experiment");
  auto* run_cfg = run->add_option("--config", config, "experiment config file");
  auto* run_preset = run->add_option("--preset", preset, "built-in preset name");
  run_cfg->excludes(run_preset);
  run->add_option("--workers", workers, "worker threads");
  run->add_option("--out", out, "output directory");

  auto* scale = app.add_subcommand("scale", "time the solvers over a size sweep");
  auto* scale_cfg = scale->add_option("--config", config, "experiment config file");
  auto* scale_preset = scale->add_option("--preset", preset, "built-in preset name");
  scale_cfg->excludes(scale_preset);
  scale->add_option("--sweep", sweep, "nobs=a,b,c or nens=a,b,c")->required();
  scale->add_option("--out", out, "directory for scaling.csv");

  auto* verify = app.add_subcommand("verify", "run the acceptance checks");
  verify->add_flag("--quick", quick, "smaller problem sizes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *scale) {
      if (config.empty() && preset.empty()) {
        throw enkf::ConfigError("one of --config or --preset is required");
      }
    }
    if (*run) return run_command(config, preset, workers, out);
    if (*scale) return scale_command(config, preset, sweep, out);
    return verify_command(quick);
  } catch (const enkf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const enkf::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const enkf::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "enkf/errors.hpp"
#include "enkf/harness.hpp"
#include "json.hpp"

using namespace enkf;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig tiny_lorenz() {
  ExperimentConfig cfg = preset_config("lorenz-small");
  cfg.steps = 40;
  cfg.spin_up_steps = 20;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("presets parse, validate and round-trip") {
  for (const auto& name : preset_names()) {
    const ExperimentConfig cfg = preset_config(name);
    CHECK(cfg.name == name);
    CHECK_NOTHROW(validate(cfg));
    CHECK(parse_config(config_text(cfg), "echo") == cfg);
    CHECK(parse_config(preset_text(name), name) == cfg);
  }
  CHECK_THROWS_AS(preset_config("nope"), ConfigError);
}

TEST_CASE("preset values") {
  const ExperimentConfig qg = preset_config("qg33-short");
  CHECK(qg.model == ModelKind::qg33);
  CHECK(qg.n_state() == 961);
  CHECK(qg.steps == 120);
  CHECK(qg.steps / qg.analysis_interval == 12);
  CHECK(qg.n_ens == 20);
  CHECK(qg.std_ens == 5.0);
  const ExperimentConfig l = preset_config("lorenz-paper-500");
  CHECK(l.lorenz.n_state == 500);
  CHECK(l.r_value == 1e-4);
}

TEST_CASE("config parser") {
  const ExperimentConfig cfg = parse_config(R"(
# comment
[experiment]
name = t   # trailing comment
[model]
name = lorenz96
n_state = 12
[ensemble]
n_ens = 4
[observations]
p_obs = 0.5
strategy = random
[run]
steps = 10
analysis_interval = 5
solvers = svd
)",
                                            "inline");
  CHECK(cfg.name == "t");
  CHECK(cfg.lorenz.n_state == 12);
  CHECK(cfg.strategy == SelectionStrategy::random);
  CHECK(cfg.solvers == std::vector<SolverChoice>{SolverChoice::svd});

  auto fails_at = [](std::string_view text, std::string_view where) {
    try {
      parse_config(text, "f.ini");
    } catch (const ConfigError& e) {
      return std::string(e.what()).find(where) != std::string::npos;
    }
    return false;
  };
  CHECK(fails_at("[run]\nsteps = 1\nsteps = 2\n", "f.ini:3"));
  CHECK(fails_at("[run]\nbogus = 1\n", "f.ini:2"));
  CHECK(fails_at("[nowhere]\nx = 1\n", "f.ini:2"));
  CHECK(fails_at("[run]\nsteps = -3\n", "f.ini:2"));
  CHECK(fails_at("[run\n", "f.ini:1"));
  CHECK(fails_at("[model]\nname = lorenz96\nn = 17\n", "f.ini:3"));
  CHECK(fails_at("[run]\nsteps = 10\nanalysis_interval = 3\n", "multiple"));
}

TEST_CASE("environment overrides seeds") {
  ExperimentConfig cfg = preset_config("lorenz-small");
  setenv("ENKF_SEED_OBS", "987", 1);
  apply_env_overrides(cfg);
  unsetenv("ENKF_SEED_OBS");
  CHECK(cfg.seed_obs == 987);
  CHECK(cfg.seed_truth == 11);
  setenv("ENKF_SEED_TRUTH", "x1", 1);
  CHECK_THROWS_AS(apply_env_overrides(cfg), ConfigError);
  unsetenv("ENKF_SEED_TRUTH");
}

TEST_CASE("hash and number formatting") {
  const std::vector<double> a{1.0, 2.0}, b{2.0, 1.0};
  CHECK(content_hash(a) == content_hash(a));
  CHECK(content_hash(a) != content_hash(b));
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("experiment runs every solver on identical inputs") {
  const ExperimentConfig cfg = tiny_lorenz();
  const RunManifest m = run_experiment(cfg);
  REQUIRE(m.runs.size() == 4);
  CHECK(m.runs[0].label == "free");
  CHECK(m.n_obs == 40);
  for (std::size_t k = 2; k < m.runs.size(); ++k) {
    CHECK(m.runs[k].ensemble_hash == m.runs[1].ensemble_hash);
    CHECK(m.runs[k].observation_hash == m.runs[1].observation_hash);
    CHECK(std::abs(m.runs[k].rmse - m.runs[1].rmse) < 1e-8 * m.runs[1].rmse);
  }
  CHECK(m.runs[1].rmse < m.runs[0].rmse);
  CHECK(m.runs[1].series.records().size() == 41);
}

TEST_CASE("per-step accumulation records intermediate forecasts") {
  ExperimentConfig cfg = tiny_lorenz();
  cfg.analysis_interval = 4;
  cfg.solvers = {SolverChoice::sherman};
  cfg.localization = false;
  cfg.free_run = false;
  const RunManifest a = run_experiment(cfg);
  cfg.accumulation = RmseAccumulation::per_step;
  const RunManifest b = run_experiment(cfg);
  CHECK(a.runs[0].series.records().size() == 11);
  CHECK(b.runs[0].series.records().size() == 41);
}

TEST_CASE("CSV output parses back") {
  const RunManifest m = run_experiment(tiny_lorenz());
  const auto rows = parse_csv(metrics_csv(m));
  REQUIRE(rows.size() == 1 + 4 * 41);
  CHECK(rows[0] == std::vector<std::string>{"cycle", "time", "solver", "rse_forecast",
                                            "rse_analysis"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 5);
    const SolverRun& run = m.runs[(i - 1) / 41];
    const MetricRecord& rec = run.series.records()[(i - 1) % 41];
    CHECK(rows[i][2] == run.label);
    CHECK(std::stoul(rows[i][0]) == rec.cycle);
    CHECK(std::stod(rows[i][3]) == rec.rse_forecast);
    CHECK(std::stod(rows[i][4]) == rec.rse_analysis);
  }
  const auto summary = parse_csv(summary_csv(m));
  REQUIRE(summary.size() == 5);
  CHECK(summary[0][0] == "solver");
  CHECK(std::stod(summary[2][1]) == m.runs[1].rmse);

  const auto j = nlohmann::json::parse(manifest_json(m));
  CHECK(j["version"] == std::string(kVersion));
  CHECK(j["runs"].size() == 4);
  CHECK(parse_config(j["config_text"].get<std::string>(), "manifest") == tiny_lorenz());
}

TEST_CASE("emitted directory") {
  const auto dir = std::filesystem::temp_directory_path() / "enkf_emit_test";
  std::filesystem::remove_all(dir);
  const RunManifest m = run_experiment(tiny_lorenz());
  emit_csv(m, dir);
  CHECK(slurp(dir / "metrics.csv") == metrics_csv(m));
  CHECK(std::filesystem::exists(dir / "summary.csv"));
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(load_config(dir / "config.echo.ini") == tiny_lorenz());
  CHECK(std::filesystem::exists(dir / "plots" / "sherman_analysis.dat"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("runs are reproducible") {
  ExperimentConfig cfg = tiny_lorenz();
  CHECK(metrics_csv(run_experiment(cfg)) == metrics_csv(run_experiment(cfg)));
  cfg.workers = 3;
  cfg.free_run = false;
  ExperimentConfig serial = cfg;
  serial.workers = 1;
  CHECK(metrics_csv(run_experiment(cfg)) == metrics_csv(run_experiment(serial)));
}

TEST_CASE("short QG experiment") {
  ExperimentConfig cfg = preset_config("qg33-short");
  cfg.steps = 20;
  cfg.spin_up_steps = 20;
  cfg.n_ens = 6;
  cfg.solvers = {SolverChoice::sherman, SolverChoice::cholesky};
  const RunManifest m = run_experiment(cfg);
  CHECK(m.n_obs == 480);
  REQUIRE(m.runs.size() == 3);
  CHECK(std::abs(m.runs[1].rmse - m.runs[2].rmse) <= 1e-6 * m.runs[1].rmse);
}

TEST_CASE("scaling helpers") {
  ScalingConfig cfg;
  parse_sweep("nobs=100,200,400", cfg);
  CHECK(cfg.axis == SweepAxis::nobs);
  CHECK(cfg.values == std::vector<std::size_t>{100, 200, 400});
  parse_sweep("nens=4,8,16", cfg);
  CHECK(cfg.axis == SweepAxis::nens);
  CHECK_THROWS_AS(parse_sweep("nfoo=1,2,3", cfg), ConfigError);
  CHECK_THROWS_AS(parse_sweep("nobs=", cfg), ConfigError);

  const std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0));

  cfg.values = {4, 8, 16};
  cfg.n_obs = 200;
  cfg.min_seconds = 0.0;
  cfg.max_repeats = 1;
  const ScalingTable t = emit_scaling_study(cfg);
  CHECK(t.rows.size() == 9);
  CHECK(t.slopes.size() == 3);
  CHECK(parse_csv(scaling_csv(t))[0][0] == "solver");
  cfg.values = {4, 8};
  CHECK_THROWS_AS(emit_scaling_study(cfg), ConfigError);
}

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "enkf/errors.hpp"
#include "enkf/harness.hpp"

namespace enkf {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::lorenz96:
      return "lorenz96";
    case ModelKind::qg33:
      return "qg33";
    case ModelKind::qg65:
      return "qg65";
    case ModelKind::qg129:
      return "qg129";
    case ModelKind::custom:
      return "custom";
  }
  return "unknown";
}

std::size_t ExperimentConfig::n_state() const noexcept {
  return is_qg() ? qg.state_size() : lorenz.n_state;
}

double ExperimentConfig::dt() const noexcept {
  return is_qg() ? qg.dt : lorenz.dt;
}

namespace {

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Parser {
 public:
  explicit Parser(std::string_view origin) : origin_(origin) {}

  [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
    throw ConfigError(std::string(origin_) + ":" + std::to_string(line) + ": " +
                      msg);
  }

  std::vector<Entry> entries(std::string_view text) const {
    std::vector<Entry> out;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto end = std::min(text.find('\n', pos), text.size());
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(line_no, "unterminated section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        if (section.empty()) fail(line_no, "empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) fail(line_no, "expected key = value");
      if (section.empty()) fail(line_no, "key outside of any [section]");
      Entry e{section, std::string(trim(line.substr(0, eq))),
              std::string(trim(line.substr(eq + 1))), line_no};
      if (e.key.empty()) fail(line_no, "empty key");
      for (const auto& prev : out) {
        if (prev.section == e.section && prev.key == e.key) {
          fail(line_no, "duplicate key " + e.section + "." + e.key);
        }
      }
      out.push_back(std::move(e));
    }
    return out;
  }

  template <typename T>
  T integer(const Entry& e) const {
    T v{};
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      fail(e.line, e.key + ": expected a non-negative integer, got '" +
                       e.value + "'");
    }
    return v;
  }

  double real(const Entry& e) const {
    double v = 0.0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      fail(e.line, e.key + ": expected a number, got '" + e.value + "'");
    }
    return v;
  }

  bool boolean(const Entry& e) const {
    const std::string& v = e.value;
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    fail(e.line, e.key + ": expected true or false, got '" + v + "'");
  }

  std::vector<SolverChoice> solvers(const Entry& e) const {
    std::vector<SolverChoice> out;
    std::string_view rest = e.value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = trim(rest.substr(0, comma));
      try {
        out.push_back(parse_solver(item));
      } catch (const InvalidArgument& ex) {
        fail(e.line, ex.what());
      }
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return out;
  }

 private:
  std::string_view origin_;
};

ModelKind parse_model_kind(const Parser& p, const Entry& e) {
  for (ModelKind k : {ModelKind::lorenz96, ModelKind::qg33, ModelKind::qg65,
                      ModelKind::qg129, ModelKind::custom}) {
    if (to_string(k) == e.value) return k;
  }
  p.fail(e.line, "unknown model '" + e.value +
                     "' (expected lorenz96, qg33, qg65, qg129 or custom)");
}

void apply_model_key(const Parser& p, const Entry& e, ExperimentConfig& cfg) {
  if (!cfg.is_qg()) {
    if (e.key == "n_state") {
      cfg.lorenz.n_state = p.integer<std::size_t>(e);
    } else if (e.key == "forcing") {
      cfg.lorenz.forcing = p.real(e);
    } else if (e.key == "dt") {
      cfg.lorenz.dt = p.real(e);
    } else {
      p.fail(e.line, "unknown key model." + e.key + " for lorenz96");
    }
    return;
  }
  QGConfig& q = cfg.qg;
  if (e.key == "n") {
    q.n = p.integer<std::size_t>(e);
  } else if (e.key == "m") {
    q.m = p.integer<std::size_t>(e);
  } else if (e.key == "lx") {
    q.lx = p.real(e);
  } else if (e.key == "ly") {
    q.ly = p.real(e);
  } else if (e.key == "rkb") {
    q.rkb = p.real(e);
  } else if (e.key == "rkh") {
    q.rkh = p.real(e);
  } else if (e.key == "rkh2") {
    q.rkh2 = p.real(e);
  } else if (e.key == "beta") {
    q.beta = p.real(e);
  } else if (e.key == "rossby") {
    q.rossby = p.real(e);
  } else if (e.key == "froude") {
    q.froude = p.real(e);
  } else if (e.key == "dt") {
    q.dt = p.real(e);
  } else {
    p.fail(e.line, "unknown key model." + e.key + " for a QG model");
  }
  if (cfg.model != ModelKind::custom && (e.key == "n" || e.key == "m" ||
                                         e.key == "lx" || e.key == "ly")) {
    p.fail(e.line, "grid keys require model = custom");
  }
}

void apply_entry(const Parser& p, const Entry& e, ExperimentConfig& cfg) {
  const std::string& s = e.section;
  const std::string& k = e.key;
  if (s == "experiment" && k == "name") {
    cfg.name = e.value;
  } else if (s == "model") {
    if (k != "name") apply_model_key(p, e, cfg);
  } else if (s == "ensemble") {
    if (k == "n_ens") {
      cfg.n_ens = p.integer<std::size_t>(e);
    } else if (k == "pct") {
      cfg.pct = p.real(e);
    } else if (k == "std_ens") {
      cfg.std_ens = p.real(e);
    } else if (k == "inflation") {
      cfg.inflation = p.real(e);
    } else if (k == "model_error_std") {
      cfg.model_error_std = p.real(e);
    } else {
      p.fail(e.line, "unknown key ensemble." + k);
    }
  } else if (s == "observations") {
    if (k == "p_obs") {
      cfg.p_obs = p.real(e);
    } else if (k == "n_obs") {
      cfg.n_obs = p.integer<std::size_t>(e);
    } else if (k == "r_value") {
      cfg.r_value = p.real(e);
    } else if (k == "strategy") {
      if (e.value == "uniform") {
        cfg.strategy = SelectionStrategy::uniform_stride;
      } else if (e.value == "random") {
        cfg.strategy = SelectionStrategy::random;
      } else {
        p.fail(e.line, "strategy must be uniform or random");
      }
    } else {
      p.fail(e.line, "unknown key observations." + k);
    }
  } else if (s == "localization") {
    if (k == "enabled") {
      cfg.localization = p.boolean(e);
    } else if (k == "length_scale") {
      cfg.localization_length = p.real(e);
    } else if (k == "cutoff") {
      cfg.localization_cutoff = p.real(e);
    } else {
      p.fail(e.line, "unknown key localization." + k);
    }
  } else if (s == "run") {
    if (k == "steps") {
      cfg.steps = p.integer<std::size_t>(e);
    } else if (k == "analysis_interval") {
      cfg.analysis_interval = p.integer<std::size_t>(e);
    } else if (k == "spin_up_steps") {
      cfg.spin_up_steps = p.integer<std::size_t>(e);
    } else if (k == "solvers") {
      cfg.solvers = p.solvers(e);
    } else if (k == "free_run") {
      cfg.free_run = p.boolean(e);
    } else if (k == "accumulation") {
      if (e.value == "per_cycle") {
        cfg.accumulation = RmseAccumulation::per_cycle;
      } else if (e.value == "per_step") {
        cfg.accumulation = RmseAccumulation::per_step;
      } else {
        p.fail(e.line, "accumulation must be per_cycle or per_step");
      }
    } else if (k == "workers") {
      cfg.workers = p.integer<std::size_t>(e);
    } else {
      p.fail(e.line, "unknown key run." + k);
    }
  } else if (s == "seeds") {
    if (k == "truth") {
      cfg.seed_truth = p.integer<std::uint64_t>(e);
    } else if (k == "ensemble") {
      cfg.seed_ensemble = p.integer<std::uint64_t>(e);
    } else if (k == "obs") {
      cfg.seed_obs = p.integer<std::uint64_t>(e);
    } else {
      p.fail(e.line, "unknown key seeds." + k);
    }
  } else if (s == "output" && k == "dir") {
    cfg.output_dir = e.value;
  } else {
    p.fail(e.line, "unknown key " + s + "." + k);
  }
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::string_view origin) {
  const Parser parser(origin);
  const auto entries = parser.entries(text);

  ExperimentConfig cfg;
  for (const auto& e : entries) {
    if (e.section == "model" && e.key == "name") {
      cfg.model = parse_model_kind(parser, e);
      switch (cfg.model) {
        case ModelKind::qg65:
          cfg.qg = qg65_config();
          break;
        case ModelKind::qg129:
          cfg.qg = qg129_config();
          break;
        default:
          cfg.qg = qg33_config();
      }
    }
  }
  for (const auto& e : entries) apply_entry(parser, e, cfg);
  try {
    validate(cfg);
  } catch (const ConfigError& ex) {
    throw ConfigError(std::string(origin) + ": " + ex.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string config_text(const ExperimentConfig& cfg) {
  std::ostringstream o;
  auto num = [](double x) { return format_double(x); };
  o << "[experiment]\nname = " << cfg.name << "\n\n";
  o << "[model]\nname = " << to_string(cfg.model) << "\n";
  if (cfg.is_qg()) {
    const QGConfig& q = cfg.qg;
    if (cfg.model == ModelKind::custom) {
      o << "n = " << q.n << "\nm = " << q.m << "\nlx = " << num(q.lx)
        << "\nly = " << num(q.ly) << "\n";
    }
    o << "rkb = " << num(q.rkb) << "\nrkh = " << num(q.rkh)
      << "\nrkh2 = " << num(q.rkh2) << "\nbeta = " << num(q.beta)
      << "\nrossby = " << num(q.rossby) << "\nfroude = " << num(q.froude)
      << "\ndt = " << num(q.dt) << "\n\n";
  } else {
    o << "n_state = " << cfg.lorenz.n_state
      << "\nforcing = " << num(cfg.lorenz.forcing)
      << "\ndt = " << num(cfg.lorenz.dt) << "\n\n";
  }
  o << "[ensemble]\nn_ens = " << cfg.n_ens << "\npct = " << num(cfg.pct)
    << "\nstd_ens = " << num(cfg.std_ens)
    << "\ninflation = " << num(cfg.inflation)
    << "\nmodel_error_std = " << num(cfg.model_error_std) << "\n\n";
  o << "[observations]\np_obs = " << num(cfg.p_obs) << "\n";
  if (cfg.n_obs) o << "n_obs = " << *cfg.n_obs << "\n";
  o << "r_value = " << num(cfg.r_value) << "\nstrategy = "
    << (cfg.strategy == SelectionStrategy::uniform_stride ? "uniform"
                                                          : "random")
    << "\n\n";
  o << "[localization]\nenabled = " << (cfg.localization ? "true" : "false")
    << "\n";
  if (cfg.localization_length)
    o << "length_scale = " << num(*cfg.localization_length) << "\n";
  if (cfg.localization_cutoff)
    o << "cutoff = " << num(*cfg.localization_cutoff) << "\n";
  o << "\n[run]\nsteps = " << cfg.steps
    << "\nanalysis_interval = " << cfg.analysis_interval
    << "\nspin_up_steps = " << cfg.spin_up_steps << "\nsolvers = ";
  for (std::size_t i = 0; i < cfg.solvers.size(); ++i)
    o << (i ? ", " : "") << to_string(cfg.solvers[i]);
  o << "\nfree_run = " << (cfg.free_run ? "true" : "false")
    << "\naccumulation = "
    << (cfg.accumulation == RmseAccumulation::per_cycle ? "per_cycle"
                                                        : "per_step")
    << "\nworkers = " << cfg.workers << "\n\n";
  o << "[seeds]\ntruth = " << cfg.seed_truth
    << "\nensemble = " << cfg.seed_ensemble << "\nobs = " << cfg.seed_obs
    << "\n\n";
  o << "[output]\ndir = " << cfg.output_dir << "\n";
  return o.str();
}

void apply_env_overrides(ExperimentConfig& cfg) {
  auto read = [](const char* name, std::uint64_t& target) {
    const char* raw = std::getenv(name);
    if (raw == nullptr || *raw == '\0') return;
    const std::string_view s(raw);
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ConfigError(std::string(name) + ": expected an unsigned integer");
    }
    target = v;
  };
  read("ENKF_SEED_TRUTH", cfg.seed_truth);
  read("ENKF_SEED_ENSEMBLE", cfg.seed_ensemble);
  read("ENKF_SEED_OBS", cfg.seed_obs);
}

void validate(const ExperimentConfig& cfg) {
  try {
    if (cfg.is_qg()) {
      validate(cfg.qg);
    } else {
      validate(cfg.lorenz);
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (!(cfg.dt() > 0.0)) throw ConfigError("model.dt must be positive");
  if (cfg.n_ens < 2) throw ConfigError("ensemble.n_ens must be at least 2");
  if (cfg.is_qg() ? !(cfg.std_ens > 0.0) : !(cfg.pct > 0.0)) {
    throw ConfigError("initial ensemble spread must be positive");
  }
  if (!(cfg.inflation >= 1.0)) throw ConfigError("ensemble.inflation must be >= 1");
  if (!(cfg.model_error_std >= 0.0)) {
    throw ConfigError("ensemble.model_error_std must be >= 0");
  }
  if (!(cfg.p_obs > 0.0 && cfg.p_obs <= 1.0)) {
    throw ConfigError("observations.p_obs must lie in (0, 1]");
  }
  if (cfg.n_obs && (*cfg.n_obs == 0 || *cfg.n_obs > cfg.n_state())) {
    throw ConfigError("observations.n_obs must lie in [1, n_state]");
  }
  if (!cfg.n_obs) {
    try {
      observation_count(cfg.n_state(), cfg.p_obs);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (!(cfg.r_value > 0.0)) throw ConfigError("observations.r_value must be > 0");
  if (cfg.localization_length && !(*cfg.localization_length > 0.0)) {
    throw ConfigError("localization.length_scale must be > 0");
  }
  if (cfg.localization_cutoff && !(*cfg.localization_cutoff >= 0.0)) {
    throw ConfigError("localization.cutoff must be >= 0");
  }
  if (cfg.analysis_interval == 0) {
    throw ConfigError("run.analysis_interval must be at least 1");
  }
  if (cfg.steps % cfg.analysis_interval != 0) {
    throw ConfigError("run.steps (" + std::to_string(cfg.steps) +
                      ") must be a multiple of run.analysis_interval (" +
                      std::to_string(cfg.analysis_interval) + ")");
  }
  if (cfg.solvers.empty() && !cfg.free_run) {
    throw ConfigError("run.solvers is empty and free_run is off");
  }
  for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (cfg.solvers[i] == cfg.solvers[j]) {
        throw ConfigError("run.solvers lists " +
                          std::string(to_string(cfg.solvers[i])) + " twice");
      }
    }
  }
  if (cfg.workers == 0) throw ConfigError("run.workers must be at least 1");
  if (cfg.name.empty()) throw ConfigError("experiment.name must not be empty");
}

// ---------------------------------------------------------------------------
// Presets

namespace {

constexpr std::string_view kLorenzSmall = R"([experiment]
name = lorenz-small

[model]
name = lorenz96
n_state = 40
forcing = 8
dt = 0.05

[ensemble]
n_ens = 20
pct = 0.05
inflation = 1.06

[observations]
p_obs = 1
r_value = 0.25

[localization]
enabled = true
length_scale = 8
cutoff = 18

[run]
steps = 400
analysis_interval = 1
spin_up_steps = 400
solvers = sherman, cholesky, svd

[seeds]
truth = 11
ensemble = 12
obs = 13

[output]
dir = out/lorenz-small
)";

constexpr std::string_view kLorenz500 = R"([experiment]
name = lorenz-paper-500

[model]
name = lorenz96
n_state = 500
forcing = 8
dt = 0.05

[ensemble]
n_ens = 200
pct = 0.05
inflation = 1.2

[observations]
p_obs = 1
r_value = 0.0001

[run]
steps = 2000
analysis_interval = 2
spin_up_steps = 400
solvers = sherman, cholesky, svd

[seeds]
truth = 21
ensemble = 22
obs = 23

[output]
dir = out/lorenz-paper-500
)";

constexpr std::string_view kQg33Short = R"([experiment]
name = qg33-short

[model]
name = qg33

[ensemble]
n_ens = 20
std_ens = 5.0

[observations]
p_obs = 0.5
r_value = 4

[run]
steps = 120
analysis_interval = 10
spin_up_steps = 200
solvers = sherman, cholesky, svd

[seeds]
truth = 31
ensemble = 32
obs = 33

[output]
dir = out/qg33-short
)";

}  // namespace

std::vector<std::string> preset_names() {
  return {"lorenz-small", "lorenz-paper-500", "qg33-short"};
}

std::string preset_text(std::string_view name) {
  if (name == "lorenz-small") return std::string(kLorenzSmall);
  if (name == "lorenz-paper-500") return std::string(kLorenz500);
  if (name == "qg33-short") return std::string(kQg33Short);
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

ExperimentConfig preset_config(std::string_view name) {
  return parse_config(preset_text(name), name);
}

}  // namespace enkf

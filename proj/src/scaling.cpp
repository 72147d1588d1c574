#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "enkf/errors.hpp"
#include "enkf/harness.hpp"
#include "enkf/solvers.hpp"
#include "enkf/stopwatch.hpp"

namespace enkf {

void parse_sweep(std::string_view spec, ScalingConfig& cfg) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("sweep must look like nobs=a,b,c or nens=a,b,c");
  }
  const std::string_view axis = spec.substr(0, eq);
  if (axis == "nobs") {
    cfg.axis = SweepAxis::nobs;
  } else if (axis == "nens") {
    cfg.axis = SweepAxis::nens;
  } else {
    throw ConfigError("unknown sweep axis '" + std::string(axis) + "'");
  }
  cfg.values.clear();
  std::string_view rest = spec.substr(eq + 1);
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || v == 0) {
      throw ConfigError("bad sweep value '" + std::string(item) + "'");
    }
    cfg.values.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("loglog_slope needs two or more matching points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw InvalidArgument("loglog_slope needs positive values");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InvalidArgument("loglog_slope: all x values equal");
  return sxy / sxx;
}

ScalingTable emit_scaling_study(const ScalingConfig& cfg) {
  if (cfg.values.size() < 3) {
    throw ConfigError("scaling study needs at least 3 grid points, got " +
                      std::to_string(cfg.values.size()));
  }
  if (cfg.solvers.empty()) throw ConfigError("scaling study needs a solver");
  ScalingTable table;
  table.axis = cfg.axis;
  for (std::size_t point = 0; point < cfg.values.size(); ++point) {
    const std::size_t n_obs =
        cfg.axis == SweepAxis::nobs ? cfg.values[point] : cfg.n_obs;
    const std::size_t n_ens =
        cfg.axis == SweepAxis::nens ? cfg.values[point] : cfg.n_ens;
    if (n_ens < 2) throw ConfigError("scaling study needs n_ens >= 2");
    RngStream rng = RngStream::derived(cfg.seed, point);
    const DiagObsCovariance r = DiagObsCovariance::constant(n_obs, cfg.r_value);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_ens - 1));
    const DenseMatrix v = gaussian_matrix(rng, n_obs, n_ens, 0.0, scale);
    const DenseMatrix d = gaussian_matrix(rng, n_obs, n_ens, 0.0, 1.0);
    for (SolverChoice solver : cfg.solvers) {
      double best = std::numeric_limits<double>::infinity();
      double spent = 0.0;
      for (std::size_t rep = 0; rep < std::max<std::size_t>(1, cfg.max_repeats);
           ++rep) {
        Stopwatch timer;
        const SolverResult res = solve_analysis_system(solver, r, v, d);
        const double s = timer.seconds();
        if (res.z.rows() != n_obs) throw NumericalFailure("solver returned wrong shape");
        best = std::min(best, s);
        spent += s;
        if (spent >= cfg.min_seconds) break;
      }
      table.rows.push_back({solver, n_obs, n_ens, best});
    }
  }
  for (SolverChoice solver : cfg.solvers) {
    std::vector<double> xs, ys;
    for (const auto& row : table.rows) {
      if (row.solver != solver) continue;
      xs.push_back(static_cast<double>(cfg.axis == SweepAxis::nobs ? row.n_obs
                                                                   : row.n_ens));
      ys.push_back(std::max(row.seconds, 1e-9));
    }
    table.slopes.push_back({solver, loglog_slope(xs, ys)});
  }
  return table;
}

std::string scaling_csv(const ScalingTable& table) {
  std::ostringstream o;
  o << "solver,n_obs,n_ens,analysis_s\n";
  for (const auto& row : table.rows) {
    o << to_string(row.solver) << ',' << row.n_obs << ',' << row.n_ens << ','
      << format_double(row.seconds) << '\n';
  }
  o << "\nsolver,slope_vs_" << (table.axis == SweepAxis::nobs ? "nobs" : "nens")
    << '\n';
  for (const auto& s : table.slopes)
    o << to_string(s.solver) << ',' << format_double(s.slope) << '\n';
  return o.str();
}

}  // namespace enkf

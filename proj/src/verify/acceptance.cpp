#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <sstream>

#include "enkf/harness.hpp"
#include "enkf/ismf.hpp"
#include "enkf/models.hpp"
#include "enkf/solvers.hpp"
#include "enkf/stopwatch.hpp"
#include "enkf/verify.hpp"

namespace enkf::verify {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

std::size_t log_uniform(RngStream& rng, std::size_t lo, std::size_t hi) {
  const double v = std::exp(std::log(static_cast<double>(lo)) +
                            rng.uniform() * (std::log(static_cast<double>(hi) + 1.0) -
                                             std::log(static_cast<double>(lo))));
  return std::clamp(static_cast<std::size_t>(v), lo, hi);
}

struct System {
  DiagObsCovariance r;
  DenseMatrix v;
  DenseMatrix d;
};

System random_system(RngStream& rng, std::size_t n_obs, std::size_t n_ens) {
  Vector r(n_obs);
  for (double& x : r) x = 0.1 + rng.uniform();
  const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(n_ens, 2) - 1));
  return {DiagObsCovariance(std::move(r)), gaussian_matrix(rng, n_obs, n_ens, 0.0, scale),
          gaussian_matrix(rng, n_obs, n_ens, 0.0, 1.0)};
}

template <typename Fn>
CriterionResult timed(int id, std::string name, Fn&& fn) {
  CriterionResult result;
  result.id = id;
  result.name = std::move(name);
  Stopwatch timer;
  try {
    fn(result);
  } catch (const std::exception& e) {
    result.passed = false;
    result.detail = std::string("exception: ") + e.what();
  }
  result.seconds = timer.seconds();
  return result;
}

}  // namespace

CriterionResult check_solver_agreement(const Options& options) {
  return timed(1, "solver agreement", [&](CriterionResult& out) {
    RngStream rng = RngStream::derived(options.seed, 1);
    const std::size_t count = options.quick ? 20 : 100;
    double worst = 0.0;
    for (std::size_t t = 0; t < count; ++t) {
      const std::size_t n_obs = log_uniform(rng, 10, 500);
      const std::size_t n_ens = log_uniform(rng, 2, 64);
      const System s = random_system(rng, n_obs, n_ens);
      const DenseMatrix zs = solve_analysis_system(SolverChoice::sherman, s.r, s.v, s.d).z;
      const DenseMatrix zc = solve_analysis_system(SolverChoice::cholesky, s.r, s.v, s.d).z;
      const DenseMatrix zv = solve_analysis_system(SolverChoice::svd, s.r, s.v, s.d).z;
      const double norm = norm_inf(zc);
      const double dev = std::max({max_abs_diff(zs, zc), max_abs_diff(zs, zv),
                                   max_abs_diff(zc, zv)});
      worst = std::max(worst, dev / norm);
    }
    out.passed = worst <= 1e-8;
    out.detail = fmt("%.0f systems, max deviation / ||Z||inf = %.3g (limit 1e-8)",
                     static_cast<double>(count), worst);
  });
}

CriterionResult check_recursive_oracle(const Options& options) {
  return timed(2, "recursive oracle", [&](CriterionResult& out) {
    RngStream rng = RngStream::derived(options.seed, 2);
    double worst = 0.0;
    for (std::size_t t = 0; t < 50; ++t) {
      const std::size_t n_ens = 1 + t % 6;
      const std::size_t n_obs = 5 + static_cast<std::size_t>(rng.uniform() * 36.0);
      const System s = random_system(rng, n_obs, n_ens);
      const DenseMatrix z = ismf_solve(s.r, s.v, s.d).z;
      const double scale = std::max(1.0, max_abs(z));
      for (std::size_t j = 0; j < n_ens; ++j) {
        const Vector f = recursive_sm_solve(s.r, s.v, s.d.col(j), n_ens);
        for (std::size_t i = 0; i < n_obs; ++i)
          worst = std::max(worst, std::abs(f[i] - z(i, j)) / scale);
      }
    }
    RngStream rng3 = RngStream::derived(options.seed, 2, 1);
    const System s3 = random_system(rng3, 12, 3);
    RecursionStats stats;
    recursive_sm_solve(s3.r, s3.v, s3.d.col(0), 3, &stats);
    out.passed = worst <= 1e-12 && stats.base_solves_v1 == 4;
    out.detail = fmt("50 instances, max deviation %.3g (limit 1e-12); v1 base solves at Nens=3: %.0f (expected 4)",
                     worst, static_cast<double>(stats.base_solves_v1));
  });
}

CriterionResult check_kalman_oracle(const Options& options) {
  return timed(3, "explicit Kalman gain oracle", [&](CriterionResult& out) {
    RngStream rng = RngStream::derived(options.seed, 3);
    double worst = 0.0;
    for (std::size_t t = 0; t < 20; ++t) {
      const std::size_t n_state = 4 + static_cast<std::size_t>(rng.uniform() * 17.0);
      const std::size_t n_ens = 2 + static_cast<std::size_t>(rng.uniform() * 14.0);
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n_state; ++i)
        if (rng.uniform() < 0.6) idx.push_back(i);
      if (idx.empty()) idx.push_back(0);
      const ObservationOperator h = ObservationOperator::selection(n_state, idx);
      Vector r(idx.size());
      for (double& x : r) x = 0.05 + rng.uniform();
      const DiagObsCovariance cov(r);
      EnsembleMatrix xb{gaussian_matrix(rng, n_state, n_ens, 1.0, 2.0)};
      const DenseMatrix y_col = gaussian_matrix(rng, idx.size(), 1, 0.5, 1.0);
      const Vector y(y_col.values().begin(), y_col.values().end());
      RngStream pert = RngStream::derived(options.seed, 3, t + 1);
      const ObservationBatch batch = perturb_observations(y, cov, n_ens, pert);
      const DenseMatrix expected = explicit_gain_analysis(xb.states, batch.perturbed, idx, r);
      const double scale = std::max(1.0, max_abs(expected));
      for (SolverChoice solver : kAllSolvers) {
        AnalysisOptions opt;
        opt.solver = solver;
        const EnsembleMatrix xa = analysis_step(xb, batch, h, cov, opt);
        worst = std::max(worst, max_abs_diff(xa.states, expected) / scale);
      }
    }
    out.passed = worst <= 1e-9;
    out.detail = fmt("20 instances x 3 solvers, max deviation %.3g (limit 1e-9)", worst);
  });
}

CriterionResult check_op_counts(const Options& options) {
  return timed(4, "operation count audit", [&](CriterionResult& out) {
    const std::pair<std::size_t, std::size_t> pairs[] = {
        {1, 1}, {1, 10}, {2, 7}, {3, 50}, {5, 5}, {8, 100}, {13, 31},
        {16, 1000}, {32, 64}, {64, 257}};
    RngStream rng = RngStream::derived(options.seed, 4);
    std::size_t matched = 0;
    std::ostringstream misses;
    IsmfOptions opt;
    opt.count_operations = true;
    for (const auto& [n_ens, n_obs] : pairs) {
      const System s = random_system(rng, n_obs, n_ens);
      const SolverResult res = ismf_solve(s.r, s.v, s.d, opt);
      const std::uint64_t expected = 3 * (n_ens * n_ens * n_obs + n_ens * n_obs);
      if (res.ops && res.ops->multiplications_and_divisions == expected) {
        ++matched;
      } else {
        misses << " (" << n_ens << "," << n_obs << ")";
      }
    }
    out.passed = matched == std::size(pairs);
    out.detail = std::to_string(matched) + "/10 (Nens, Nobs) pairs match 3(Nens^2 Nobs + Nens Nobs)" +
                 (misses.str().empty() ? "" : "; mismatches:" + misses.str());
  });
}

CriterionResult check_parallel_determinism(const Options& options) {
  return timed(5, "blocked solver determinism", [&](CriterionResult& out) {
    RngStream rng = RngStream::derived(options.seed, 5);
    const System s = random_system(rng, 2000, 32);
    const DenseMatrix serial = ismf_solve(s.r, s.v, s.d).z;
    double worst = 0.0;
    for (std::size_t workers : {1, 2, 4, 8}) {
      const DenseMatrix z = ismf_solve_blocked(s.r, s.v, s.d, workers).z;
      worst = std::max(worst, max_abs_diff(z, serial));
    }
    out.passed = worst <= 1e-12;
    out.detail = fmt("2000x32, workers 1/2/4/8, max deviation from serial %.3g (limit 1e-12)", worst);
  });
}

CriterionResult check_scaling_trend(const Options& options) {
  return timed(6, "scaling trend", [&](CriterionResult& out) {
    ScalingConfig cfg;
    cfg.axis = SweepAxis::nobs;
    cfg.values = options.quick ? std::vector<std::size_t>{500, 1000, 2000}
                               : std::vector<std::size_t>{1000, 2000, 4000, 8000};
    cfg.n_ens = 16;
    cfg.solvers = {SolverChoice::sherman, SolverChoice::cholesky};
    cfg.r_value = 0.5;
    cfg.seed = options.seed;
    cfg.min_seconds = 0.25;
    const ScalingTable table = emit_scaling_study(cfg);
    double sherman = 0.0, cholesky = 0.0;
    for (const auto& s : table.slopes) {
      if (s.solver == SolverChoice::sherman) sherman = s.slope;
      if (s.solver == SolverChoice::cholesky) cholesky = s.slope;
    }
    out.passed = sherman >= 0.8 && sherman <= 1.2 && cholesky >= 1.8;
    out.detail = fmt("log-log slope vs Nobs at Nens=16: sherman %.3f (want [0.8, 1.2]), cholesky %.3f (want >= 1.8)",
                     sherman, cholesky);
  });
}

namespace {

// Lorenz-96 settings for the ensemble-size study: every step observed,
// multiplicative inflation and exponential partial localization.
ExperimentConfig lorenz_study_config(std::size_t n_ens, std::uint64_t seed,
                                     bool free_run) {
  ExperimentConfig cfg = preset_config("lorenz-small");
  cfg.n_ens = n_ens;
  cfg.solvers = {SolverChoice::sherman};
  cfg.free_run = free_run;
  cfg.seed_truth = 1000 + seed;
  cfg.seed_ensemble = 2000 + seed;
  cfg.seed_obs = 3000 + seed;
  return cfg;
}

}  // namespace

CriterionResult check_lorenz_quality(const Options& options) {
  return timed(7, "Lorenz-96 assimilation quality", [&](CriterionResult& out) {
    const std::size_t ens_sizes[] = {10, 20, 40};
    const std::size_t seeds = options.quick ? 2 : 5;
    double rmse[3] = {0.0, 0.0, 0.0};
    double free_rmse = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t s = 0; s < seeds; ++s) {
        const RunManifest m = run_experiment(lorenz_study_config(ens_sizes[k], s, k == 0));
        for (const auto& run : m.runs) {
          const double tail = run.series.analysis_rmse_tail(0.25);
          if (run.label == "free") {
            free_rmse += tail / static_cast<double>(seeds);
          } else {
            rmse[k] += tail / static_cast<double>(seeds);
          }
        }
      }
    }
    const bool monotone = rmse[1] <= 1.05 * rmse[0] && rmse[2] <= 1.05 * rmse[1];
    const double worst_ratio = free_rmse / std::max({rmse[0], rmse[1], rmse[2]});
    out.passed = monotone && worst_ratio >= 5.0;
    out.detail = fmt("final-quarter analysis RMSE Nens=10/20/40: %.4f / %.4f / %.4f", rmse[0],
                     rmse[1], rmse[2]) +
                 fmt("; free run %.3f, smallest improvement %.1fx (want >= 5x)", free_rmse,
                     worst_ratio);
  });
}

CriterionResult check_qg_end_to_end(const Options& options) {
  return timed(8, "QG33 end to end", [&](CriterionResult& out) {
    ExperimentConfig cfg = preset_config("qg33-short");
    cfg.free_run = false;
    if (options.quick) {
      cfg.steps = 40;
    }
    const RunManifest m = run_experiment(cfg);
    double lo = 1e300, hi = 0.0;
    for (const auto& run : m.runs) {
      lo = std::min(lo, run.rmse);
      hi = std::max(hi, run.rmse);
    }
    const double rel = (hi - lo) / hi;
    out.passed = m.runs.size() == 3 && m.n_obs == 480 && rel <= 1e-6;
    out.detail = fmt("%.0f solvers completed, Nobs=%.0f, relative RMSE spread %.3g (limit 1e-6)",
                     static_cast<double>(m.runs.size()), static_cast<double>(m.n_obs), rel);
  });
}

CriterionResult check_model_verification(const Options& options) {
  return timed(9, "model verification", [&](CriterionResult& out) {
    const auto h = helmholtz_orders({17, 33, 65});
    const auto c = arakawa_conservation(33, options.seed);
    const auto l = lorenz96_orders(0.05);
    const double h_lo = std::min(h[0], h[1]), h_hi = std::max(h[0], h[1]);
    const double cons = std::max({c.sum_j, c.sum_psi_j, c.sum_q_j});
    const double l_lo = std::min(l[0], l[1]);
    out.passed = h_lo >= 1.9 && h_hi <= 2.1 && cons <= 1e-10 && l_lo >= 3.8;
    out.detail = fmt("Helmholtz orders %.3f, %.3f; ", h[0], h[1]) +
                 fmt("Arakawa relative sums <= %.2g; ", cons) +
                 fmt("Lorenz RK4 orders %.3f, %.3f", l[0], l[1]);
  });
}

CriterionResult check_reproducibility(const Options& options) {
  return timed(10, "reproducibility", [&](CriterionResult& out) {
    std::vector<std::string> names = {"lorenz-small", "qg33-short"};
    if (options.quick) names.pop_back();
    std::size_t identical = 0;
    for (const auto& name : names) {
      const ExperimentConfig cfg = preset_config(name);
      const std::string a = metrics_csv(run_experiment(cfg));
      const std::string b = metrics_csv(run_experiment(cfg));
      if (a == b && a.size() > 64) ++identical;
    }
    out.passed = identical == names.size();
    out.detail = std::to_string(identical) + "/" + std::to_string(names.size()) +
                 " presets produced byte-identical metrics.csv across two runs";
  });
}

std::string format_result(const CriterionResult& r) {
  char head[128];
  std::snprintf(head, sizeof(head), "[%s] %2d %-32s %8.2fs  ", r.passed ? "PASS" : "FAIL",
                r.id, r.name.c_str(), r.seconds);
  return head + r.detail;
}

std::vector<CriterionResult> run_acceptance(const Options& options, std::ostream& log) {
  using Check = CriterionResult (*)(const Options&);
  const Check checks[] = {check_solver_agreement,   check_recursive_oracle,
                          check_kalman_oracle,      check_op_counts,
                          check_parallel_determinism, check_scaling_trend,
                          check_lorenz_quality,     check_qg_end_to_end,
                          check_model_verification, check_reproducibility};
  std::vector<CriterionResult> results;
  for (Check check : checks) {
    results.push_back(check(options));
    log << format_result(results.back()) << std::endl;
  }
  return results;
}

}  // namespace enkf::verify

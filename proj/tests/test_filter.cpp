#include <cmath>
#include <numeric>

#include "doctest.h"
#include "enkf/errors.hpp"
#include "enkf/filter.hpp"
#include "enkf/models.hpp"
#include "enkf/verify.hpp"

using namespace enkf;

namespace {

EnsembleMatrix random_ensemble(RngStream& rng, std::size_t n, std::size_t m) {
  return {gaussian_matrix(rng, n, m, 2.0, 1.5)};
}

std::vector<std::size_t> indices_of(const ObservationOperator& h) {
  return {h.indices().begin(), h.indices().end()};
}

}  // namespace

TEST_CASE("mean and deviations") {
  const EnsembleMatrix x{DenseMatrix{{1, 2, 3}, {0, 0, 6}}};
  const Vector mean = ensemble_mean(x);
  CHECK(mean[0] == 2.0);
  CHECK(mean[1] == 2.0);
  const DenseMatrix s = member_deviations(x);
  CHECK(s(0, 0) == doctest::Approx(-1.0 / std::sqrt(2.0)));
  CHECK(s(1, 2) == doctest::Approx(4.0 / std::sqrt(2.0)));
  for (std::size_t i = 0; i < 2; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 3; ++j) row += s(i, j);
    CHECK(std::abs(row) < 1e-15);
  }
}

TEST_CASE("observation operator") {
  const auto h = ObservationOperator::selection(6, {1, 4});
  CHECK(h.n_obs() == 2);
  const Vector x{0, 10, 20, 30, 40, 50};
  CHECK(h.apply(x) == Vector{10, 40});
  CHECK(h.adjoint(Vector{1, 2}) == Vector{0, 1, 0, 0, 2, 0});
  CHECK(ObservationOperator::identity(3).is_identity());
  CHECK(ObservationOperator::identity(3).apply(Vector{1, 2, 3}) == Vector{1, 2, 3});
  CHECK_THROWS_AS(ObservationOperator::selection(6, {4, 1}), InvalidArgument);
  CHECK_THROWS_AS(ObservationOperator::selection(6, {6}), InvalidArgument);
  CHECK_THROWS_AS(h.apply(Vector{1, 2}), DimensionMismatch);
}

TEST_CASE("perturbed observations") {
  RngStream rng(2);
  const Vector y{1.0, -1.0, 3.0};
  const DiagObsCovariance r({0.25, 1.0, 4.0});
  const ObservationBatch b = perturb_observations(y, r, 4000, rng);
  CHECK(b.perturbed.cols() == 4000);
  for (std::size_t i = 0; i < 3; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < 4000; ++j) {
      CHECK(b.perturbed(i, j) == y[i] + b.perturbations(i, j));
      sq += b.perturbations(i, j) * b.perturbations(i, j);
    }
    CHECK(sq / 4000.0 == doctest::Approx(r[i]).epsilon(0.08));
  }
}

TEST_CASE("analysis matches the explicit gain for every solver") {
  RngStream rng(21);
  for (int t = 0; t < 8; ++t) {
    const std::size_t n = 6 + t, m = 3 + t;
    const auto h = ObservationOperator::selection(n, t % 2 ? std::vector<std::size_t>{0, 2, 5}
                                                           : std::vector<std::size_t>{1, 3, 4, 5});
    const DiagObsCovariance r = DiagObsCovariance::constant(h.n_obs(), 0.2 + 0.1 * t);
    const EnsembleMatrix xb = random_ensemble(rng, n, m);
    const ObservationBatch obs = perturb_observations(Vector(h.n_obs(), 1.0), r, m, rng);
    const DenseMatrix expected =
        verify::explicit_gain_analysis(xb.states, obs.perturbed, indices_of(h), r.values());
    for (SolverChoice c : kAllSolvers) {
      AnalysisOptions opt;
      opt.solver = c;
      const EnsembleMatrix xa = analysis_step(xb, obs, h, r, opt);
      CHECK(xa.stage == EnsembleStage::analysis);
      CHECK(max_abs_diff(xa.states, expected) < 1e-10);
    }
  }
}

TEST_CASE("localized analysis matches the tapered explicit gain") {
  RngStream rng(4);
  const std::size_t n = 12, m = 6;
  const auto h = ObservationOperator::selection(n, {0, 3, 6, 9});
  const DiagObsCovariance r = DiagObsCovariance::constant(4, 0.5);
  const InfluenceMatrix delta = influence_matrix_cyclic(h, 3.0, 5.0);
  const EnsembleMatrix xb = random_ensemble(rng, n, m);
  const ObservationBatch obs = perturb_observations(Vector(4, 0.0), r, m, rng);
  const DenseMatrix expected = verify::explicit_gain_analysis_localized(
      xb.states, obs.perturbed, indices_of(h), r.values(), delta.delta());
  AnalysisOptions opt;
  opt.localization = &delta;
  for (SolverChoice c : kAllSolvers) {
    opt.solver = c;
    CHECK(max_abs_diff(analysis_step(xb, obs, h, r, opt).states, expected) < 1e-10);
  }
}

TEST_CASE("influence matrix") {
  const auto h = ObservationOperator::selection(10, {0, 5});
  const InfluenceMatrix d = influence_matrix_cyclic(h, 2.0, 3.0);
  CHECK(d.delta()(0, 0) == 1.0);
  CHECK(d.delta()(9, 0) == doctest::Approx(std::exp(-0.5)));
  CHECK(d.delta()(3, 0) == doctest::Approx(std::exp(-1.5)));
  CHECK(d.delta()(4, 0) == 0.0);
  CHECK(cyclic_distance(1, 9, 10) == 2);
  CHECK(cyclic_distance(9, 1, 10) == 2);
  const InfluenceMatrix wide = influence_matrix_cyclic(h);
  CHECK(wide.delta()(5, 0) == doctest::Approx(std::exp(-0.5)));
  CHECK_THROWS_AS(InfluenceMatrix(DenseMatrix{{1.5}}), InvalidArgument);
}

TEST_CASE("inflation keeps the mean and scales spread") {
  RngStream rng(8);
  const EnsembleMatrix x = random_ensemble(rng, 5, 7);
  const EnsembleMatrix y = inflate(x, 1.3);
  const Vector mx = ensemble_mean(x), my = ensemble_mean(y);
  for (std::size_t i = 0; i < 5; ++i) CHECK(my[i] == doctest::Approx(mx[i]));
  const DenseMatrix sx = member_deviations(x), sy = member_deviations(y);
  for (std::size_t k = 0; k < sx.size(); ++k)
    CHECK(sy.data()[k] == doctest::Approx(1.3 * sx.data()[k]));
  CHECK_THROWS_AS(inflate(x, 0.9), InvalidArgument);
}

TEST_CASE("forecast is independent of worker count") {
  const Lorenz96Model model(Lorenz96Config{});
  RngStream rng(10);
  const EnsembleMatrix x{gaussian_matrix(rng, 40, 9, 8.0, 1.0)};
  const EnsembleMatrix a = forecast_step(model, x, 0.0, 0.5, 1);
  const EnsembleMatrix b = forecast_step(model, x, 0.0, 0.5, 4);
  CHECK(a.states == b.states);
  CHECK(a.time == 0.5);
  CHECK(a.stage == EnsembleStage::background);
  for (std::size_t j = 0; j < 9; ++j) {
    const Vector ref = verify::lorenz96_reference({x.states.col(j).begin(), x.states.col(j).end()},
                                                  8.0, 0.05, 10);
    for (std::size_t i = 0; i < 40; ++i) CHECK(a.states(i, j) == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("model error noise") {
  RngStream rng(3);
  EnsembleMatrix x{DenseMatrix(50, 200)};
  add_model_error(x, 0.5, rng);
  double sq = 0.0;
  for (double v : x.states.values()) sq += v * v;
  CHECK(sq / 10000.0 == doctest::Approx(0.25).epsilon(0.05));
}

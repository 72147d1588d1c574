#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "enkf/errors.hpp"
#include "enkf/models.hpp"
#include "enkf/observations.hpp"

using namespace enkf;

TEST_CASE("observation count") {
  CHECK(observation_count(961, 0.5) == 480);
  CHECK(observation_count(40, 1.0) == 40);
  CHECK(observation_count(10, 0.3) == 3);
  CHECK_THROWS_AS(observation_count(10, 0.01), InvalidArgument);
  CHECK_THROWS_AS(build_selection_operator(10, 0.01), InvalidArgument);
  CHECK_THROWS_AS(build_selection_operator(10, 1.5), InvalidArgument);
}

TEST_CASE("uniform stride selection") {
  const auto h = build_selection_operator(961, 0.5);
  REQUIRE(h.n_obs() == 480);
  for (std::size_t k = 0; k < h.n_obs(); ++k) CHECK(h.indices()[k] == k * 961 / 480);
  CHECK(build_selection_operator(12, 1.0).is_identity());
}

TEST_CASE("random selection is sorted, distinct and seeded") {
  const auto a = build_selection_operator_count(100, 30, SelectionStrategy::random, 4);
  const auto b = build_selection_operator_count(100, 30, SelectionStrategy::random, 4);
  const auto c = build_selection_operator_count(100, 30, SelectionStrategy::random, 5);
  CHECK(std::equal(a.indices().begin(), a.indices().end(), b.indices().begin()));
  CHECK_FALSE(std::equal(a.indices().begin(), a.indices().end(), c.indices().begin()));
  CHECK(std::adjacent_find(a.indices().begin(), a.indices().end(),
                           [](auto x, auto y) { return x >= y; }) == a.indices().end());
  CHECK(a.indices().back() < 100);
}

TEST_CASE("truth trajectory") {
  const Lorenz96Model model(Lorenz96Config{});
  Vector x0(40, 8.0);
  x0[0] = 8.01;
  const std::vector<double> times{0.0, 0.5, 1.0};
  const TruthTrajectory t = generate_truth(model, x0, times, "lorenz96", 17);
  REQUIRE(t.size() == 3);
  CHECK(t.states[0] == x0);
  Vector x = x0;
  model.advance(x, 0.0, 1.0);
  CHECK(t.states[2] == x);
  CHECK(t.seed == 17);
  const std::vector<double> bad{0.0, 0.0};
  CHECK_THROWS_AS(generate_truth(model, x0, bad, "lorenz96", 1), InvalidArgument);
}

TEST_CASE("schedule validation") {
  ObsSchedule s{{0.1, 0.2}, 0.5, 1.0};
  CHECK_NOTHROW(validate(s, 40));
  s.r_value = 0.0;
  CHECK_THROWS_AS(validate(s, 40), InvalidArgument);
  s = {{0.2, 0.1}, 0.5, 1.0};
  CHECK_THROWS_AS(validate(s, 40), InvalidArgument);
}

TEST_CASE("synthetic observations carry noise of variance r") {
  const auto h = ObservationOperator::identity(20000);
  const DiagObsCovariance r = DiagObsCovariance::constant(20000, 0.09);
  RngStream rng(3);
  const Vector truth(20000, 1.0);
  const Vector y = synthesize_observation(truth, h, r, rng);
  double mean = 0.0, sq = 0.0;
  for (double v : y) {
    mean += v - 1.0;
    sq += (v - 1.0) * (v - 1.0);
  }
  CHECK(std::abs(mean / 20000.0) < 0.01);
  CHECK(sq / 20000.0 == doctest::Approx(0.09).epsilon(0.05));
}

TEST_CASE("initial ensembles") {
  RngStream rng(1);
  const Vector x0{2.0, -4.0, 0.0};
  const EnsembleMatrix e = build_initial_ensemble_lorenz(x0, 0.1, 5000, rng);
  double sq = 0.0;
  for (std::size_t j = 0; j < 5000; ++j) {
    sq += (e.states(1, j) + 4.0) * (e.states(1, j) + 4.0);
    CHECK(e.states(2, j) == 0.0);
  }
  CHECK(std::sqrt(sq / 5000.0) == doctest::Approx(0.4).epsilon(0.05));

  const EnsembleMatrix q = build_initial_ensemble_qg(x0, 5.0, 4000, rng);
  // spread is std_ens times mean |x0| = 2
  double sq0 = 0.0;
  for (std::size_t j = 0; j < 4000; ++j) sq0 += (q.states(2, j)) * (q.states(2, j));
  CHECK(std::sqrt(sq0 / 4000.0) == doctest::Approx(10.0).epsilon(0.05));
  CHECK_THROWS_AS(build_initial_ensemble_lorenz(x0, 0.1, 0, rng), InvalidArgument);
}

#include <cmath>

#include "doctest.h"
#include "enkf/errors.hpp"
#include "enkf/metrics.hpp"

using namespace enkf;

TEST_CASE("rse") {
  const std::vector<double> t{1, 2, 3, 4};
  const std::vector<double> x{1, 2, 3, 6};
  CHECK(rse(t, x) == doctest::Approx(1.0));
  CHECK(rse(t, t) == 0.0);
  CHECK_THROWS_AS(rse(t, std::vector<double>{1, 2}), DimensionMismatch);
  CHECK_THROWS_AS(rse(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("rmse is the mean of the series") {
  CHECK(rmse(std::vector<double>{1, 2, 6}) == 3.0);
  CHECK_THROWS_AS(rmse(std::vector<double>{}), InvalidArgument);
}

TEST_CASE("series accumulates records and times") {
  MetricSeries s;
  s.add({0, 0.0, 9.0, 9.0});
  for (std::size_t c = 1; c <= 8; ++c) s.add({c, 0.1 * c, 2.0, static_cast<double>(c)});
  CHECK(s.records().size() == 9);
  CHECK(s.analysis_rmse() == doctest::Approx(4.5));
  CHECK(s.analysis_rmse_tail(0.25) == doctest::Approx(7.5));
  CHECK(s.analysis_rmse_tail(0.01) == doctest::Approx(8.0));
  CHECK_THROWS_AS(s.analysis_rmse_tail(0.0), InvalidArgument);
  CHECK_THROWS_AS(s.add({9, 1.0, -1.0, 0.0}), InvalidArgument);
  CHECK_THROWS_AS(s.add({9, 1.0, NAN, 0.0}), InvalidArgument);

  s.add_forecast_seconds(1.5);
  s.add_forecast_seconds(0.5);
  s.add_analysis_seconds(0.25);
  CHECK_THROWS_AS(s.add_analysis_seconds(-1.0), InvalidArgument);
  const ElapsedReport r = elapsed_report(s);
  CHECK(r.forecast_s == 2.0);
  CHECK(r.analysis_s == 0.25);
  CHECK(r.total_s == 2.25);
}

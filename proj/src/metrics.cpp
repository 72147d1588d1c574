#include "enkf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "enkf/errors.hpp"

namespace enkf {

double rse(std::span<const double> x_true, std::span<const double> x) {
  if (x_true.size() != x.size()) {
    throw DimensionMismatch("rse: vectors have lengths " +
                            std::to_string(x_true.size()) + " and " +
                            std::to_string(x.size()));
  }
  if (x.empty()) throw InvalidArgument("rse: empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x_true[i] - x[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(x.size()));
}

double rmse(std::span<const double> series) {
  if (series.empty()) throw InvalidArgument("rmse: empty series");
  double sum = 0.0;
  for (double v : series) sum += v;
  return sum / static_cast<double>(series.size());
}

void MetricSeries::add(const MetricRecord& record) {
  if (!(record.rse_forecast >= 0.0) || !(record.rse_analysis >= 0.0)) {
    throw InvalidArgument("metric record with negative or NaN RSE");
  }
  records_.push_back(record);
}

void MetricSeries::add_forecast_seconds(double s) {
  if (!(s >= 0.0)) throw InvalidArgument("negative forecast time");
  forecast_s_ += s;
}

void MetricSeries::add_analysis_seconds(double s) {
  if (!(s >= 0.0)) throw InvalidArgument("negative analysis time");
  analysis_s_ += s;
}

double MetricSeries::analysis_rmse() const { return analysis_rmse_tail(1.0); }

double MetricSeries::analysis_rmse_tail(double fraction) const {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("tail fraction must lie in (0, 1]");
  }
  if (records_.empty()) throw InvalidArgument("rmse: no records");
  if (records_.size() == 1) return records_.front().rse_analysis;
  const std::size_t n = records_.size() - 1;
  const auto take = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  std::vector<double> values;
  values.reserve(take);
  for (std::size_t k = records_.size() - take; k < records_.size(); ++k)
    values.push_back(records_[k].rse_analysis);
  return rmse(values);
}

ElapsedReport elapsed_report(const MetricSeries& series) {
  ElapsedReport report;
  report.forecast_s = series.forecast_seconds();
  report.analysis_s = series.analysis_seconds();
  report.total_s = report.forecast_s + report.analysis_s;
  return report;
}

}  // namespace enkf

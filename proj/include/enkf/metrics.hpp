#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace enkf {

// sqrt(|x_true - x|^2 / n).
double rse(std::span<const double> x_true, std::span<const double> x);

// Arithmetic mean of an RSE series; throws InvalidArgument when empty.
double rmse(std::span<const double> series);

enum class RmseAccumulation { per_cycle, per_step };

struct MetricRecord {
  std::size_t cycle = 0;  // record index; 0 is the initial ensemble
  double time = 0.0;
  double rse_forecast = 0.0;
  double rse_analysis = 0.0;
};

class MetricSeries {
 public:
  void add(const MetricRecord& record);
  void add_forecast_seconds(double s);
  void add_analysis_seconds(double s);

  const std::vector<MetricRecord>& records() const noexcept { return records_; }
  double forecast_seconds() const noexcept { return forecast_s_; }
  double analysis_seconds() const noexcept { return analysis_s_; }

  // RMSE of the analysis RSE over records after the initial one (the
  // initial record alone when nothing else was recorded).
  double analysis_rmse() const;
  // Same restricted to the last `fraction` of those records.
  double analysis_rmse_tail(double fraction) const;

 private:
  std::vector<MetricRecord> records_;
  double forecast_s_ = 0.0;
  double analysis_s_ = 0.0;
};

struct ElapsedReport {
  double forecast_s = 0.0;
  double analysis_s = 0.0;
  double total_s = 0.0;
};

ElapsedReport elapsed_report(const MetricSeries& series);

}  // namespace enkf

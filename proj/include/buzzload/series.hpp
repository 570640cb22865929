#ifndef BUZZLOAD_SERIES_HPP
#define BUZZLOAD_SERIES_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "buzzload/model.hpp"

namespace buzzload {

// Regularly sampled workload. Sample k holds the state on [t0 + k*dt, t0 + (k+1)*dt).
// The optional channels carry R and the hidden regime: true values when the series
// comes from the simulator, reconstructed ones when it comes from the estimator.
struct WorkloadSeries {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<int> i;
  std::optional<std::vector<double>> r;
  std::optional<std::vector<Regime>> regime;

  std::size_t size() const { return i.size(); }
  bool empty() const { return i.empty(); }
  double t_end() const { return t0 + dt * static_cast<double>(i.size()); }
  double time_at(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
};

// Throws ContractError on negative counts or mismatched channel lengths.
void check_series(const WorkloadSeries& series);

double mean_i(const WorkloadSeries& series);

// CSV `t,i[,r_hat][,regime_hat]`.
void write_series_csv(const WorkloadSeries& series, std::ostream& out);
void write_series_csv(const WorkloadSeries& series, const std::string& path);
WorkloadSeries read_series_csv(std::istream& in);
WorkloadSeries read_series_csv(const std::string& path);

}  // namespace buzzload

#endif  // BUZZLOAD_SERIES_HPP

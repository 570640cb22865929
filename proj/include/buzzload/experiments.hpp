#ifndef BUZZLOAD_EXPERIMENTS_HPP
#define BUZZLOAD_EXPERIMENTS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "buzzload/estimation.hpp"
#include "buzzload/model.hpp"
#include "buzzload/simulator.hpp"

namespace buzzload {

// Analytic mean state (rounded), BuzzFree; (0, 0) when the model has no mean.
SystemState mean_state(const ModelParams& params);

inline constexpr std::array<const char*, 7> kParamNames = {"gamma", "beta1", "mu", "l",
                                                           "beta2", "a1",    "a2"};
double param_value(const ModelParams& params, std::size_t index);

struct ReplicationOutcome {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t events = 0;
  ModelParams estimate;
};

// Replication k simulates from mean_state(params) with seed + k and runs the
// full estimation pipeline. Failures are recorded, not thrown.
std::vector<ReplicationOutcome> run_replications(const ModelParams& params, const Horizon& horizon,
                                                 std::uint64_t seed, std::size_t replications,
                                                 const EstimationOptions& options = {});

struct ErrorSummary {
  std::string name;
  std::size_t count = 0;  // successful replications
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;  // of theta_hat / theta - 1
  double median_abs = 0.0;                                         // median of |theta_hat / theta - 1|
};

std::vector<ErrorSummary> summarize_relative_errors(const ModelParams& truth,
                                                    const std::vector<ReplicationOutcome>& outcomes);

// Linear-interpolation quantile of an unsorted sample.
double sample_quantile(std::vector<double> values, double p);

struct MsePoint {
  std::uint64_t events = 0;
  std::size_t ok = 0;
  std::array<double, 7> mse{};  // mean of (theta_hat / theta - 1)^2, per kParamNames
};

std::vector<MsePoint> mse_sweep(const ModelParams& params, const std::vector<std::uint64_t>& lengths,
                                std::uint64_t seed, std::size_t replications,
                                const EstimationOptions& options = {});

// Minus the least-squares slope of log y against log x (the decay rate).
double loglog_decay(const std::vector<double>& x, const std::vector<double>& y);

struct ClosureReport {
  ModelParams estimate;
  std::vector<std::string> warnings;
  double mean_formula = 0.0;  // flow-balance mean of the estimate, NaN when unstable
  double sample_mean = 0.0;
  double refit_mean = 0.0;
  double tv = 0.0;
  std::size_t decorrelation_lag = 0;  // first lag where the source correlation drops below 1/e
  bool decorrelated = true;           // false: never dropped within max_lag
  double acf_max_diff = 0.0;          // over lags 0..decorrelation_lag
  std::vector<double> hist_source, hist_refit;
  std::vector<double> acf_source, acf_refit;
};

// Estimate from `source`, re-simulate the estimate over the same span, compare
// time-weighted histograms of I and sample autocorrelations on a dt grid.
ClosureReport closure(const EventTrace& source, double dt, std::size_t max_lag, std::uint64_t seed,
                      const EstimationOptions& options = {});

}  // namespace buzzload

#endif  // BUZZLOAD_EXPERIMENTS_HPP

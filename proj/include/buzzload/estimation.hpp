#ifndef BUZZLOAD_ESTIMATION_HPP
#define BUZZLOAD_ESTIMATION_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "buzzload/model.hpp"
#include "buzzload/series.hpp"
#include "buzzload/simulator.hpp"

namespace buzzload {

// The observable part of a workload trace: the times at which I(t) moves up or
// down by one. Memory-ends and regime switches are hidden and never used.
class Observation {
public:
  Observation() = default;
  Observation(double t_start, double t_end, int i0, std::vector<double> times,
              std::vector<std::int8_t> steps);

  static Observation from_trace(const EventTrace& trace);
  // Each bin's net change is spread evenly over the bin, so moves that cancel
  // inside one bin are lost.
  static Observation from_series(const WorkloadSeries& series);

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double span() const { return t_end_ - t_start_; }
  int initial_level() const { return i0_; }
  std::size_t size() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<std::int8_t>& steps() const { return steps_; }
  // I just after event k.
  int level_after(std::size_t k) const { return levels_[k]; }
  int peak() const { return peak_; }

  std::size_t arrivals() const { return arrivals_; }
  std::size_t departures() const { return size() - arrivals_; }

  // I(t), right-continuous.
  int level_at(double t) const;
  // Integral of I from t_start to t, t clamped to the observed range.
  double integral_to(double t) const;
  // Same, for non-decreasing t across calls sharing `cursor` (start it at 0).
  double integral_to(double t, std::size_t& cursor) const;
  double integral(double a, double b) const { return integral_to(b) - integral_to(a); }

  // Time-weighted quantile of I.
  double quantile(double p) const;

private:
  double t_start_ = 0.0;
  double t_end_ = 0.0;
  int i0_ = 0;
  int peak_ = 0;
  std::size_t arrivals_ = 0;
  std::vector<double> times_;
  std::vector<std::int8_t> steps_;
  std::vector<int> levels_;
  std::vector<double> cum_;  // integral of I up to times_[k]
};

// decrements / integral of I.
double estimate_gamma(const Observation& obs);

// Integral of I over (t - window, t]. Windows reaching before the first
// observation are extrapolated from the covered part and flagged.
double window_integral(const Observation& obs, double t, double window, bool* truncated = nullptr);

// Past-viewer estimate at time t: the viewers who stopped watching during the
// last 1/gamma + 1/mu time units, gamma * window_integral - I(t), floored at 0.
// Constant I = c gives gamma*c/mu, the stationary past-viewer level.
double reconstruct_r(const Observation& obs, double t, double mu, double gamma,
                     bool* truncated = nullptr);
std::vector<double> reconstruct_r(const Observation& obs, const std::vector<double>& times,
                                  double mu, double gamma, bool* truncated = nullptr);

// Gap w before an arrival, the level x = I + round(R_hat) when the gap opened,
// and the time t at which it closed.
struct InterArrival {
  double w = 0.0;
  int x = 0;
  double t = 0.0;
};
using InterArrivalSet = std::vector<InterArrival>;

InterArrivalSet inter_arrivals(const Observation& obs, double mu, double gamma);

// Normalised-spacings exponentiality statistic sqrt(1/N) * sup|F - G|, where F
// and G are the empirical CDFs of the samples and of their normalised spacings.
double exp_spacings_statistic(std::vector<double> samples);

// Log-spaced candidates on [lo_fraction * gamma, gamma].
std::vector<double> mu_grid(double gamma, std::size_t points = 60, double lo_fraction = 1e-3);

struct MuFit {
  double mu = 0.0;
  std::vector<std::pair<double, double>> curve;  // (mu, statistic)
};

// Groups gaps by x, normalises each group of at least `min_group` by its mean
// and returns the candidate with the smallest statistic (ties: smallest mu).
MuFit estimate_mu(const Observation& obs, double gamma, const std::vector<double>& grid,
                  std::size_t min_group = 5);

struct RegressionPoint {
  double x = 0.0;
  double inv_omega = 0.0;
  double weight = 0.0;
};

struct LinearFit {
  double beta1 = 0.0;
  double l = 0.0;
  std::vector<RegressionPoint> points;
};

// Weighted least squares of 1/mean-gap against x, weights = group sizes.
LinearFit estimate_beta1_l(const InterArrivalSet& gaps, std::size_t min_group = 5);

struct Interval {
  double t_start = 0.0;
  double t_end = 0.0;
};

struct BuzzPolicy {
  double quantile = 0.95;        // threshold on I, time-weighted
  std::size_t min_arrivals = 5;  // arrivals needed on the rising part
  double min_evidence = 12.0;    // Poisson log-likelihood ratio against buzz-free
  double min_ratio = 3.0;        // arrivals over the buzz-free expectation
};

// Excursions of I above the threshold are cut at their peak. The rising part
// is kept when it holds at least min_arrivals arrivals and its count n beats
// the buzz-free expectation m from (beta1, l) both as a ratio, n >= min_ratio * m,
// and as evidence, n log(n/m) - (n - m) >= min_evidence. The ratio rejects slow
// drifts whose evidence grows only with their length.
std::vector<Interval> detect_buzz_periods(const Observation& obs, double mu, double gamma,
                                          double beta1, double l, const BuzzPolicy& policy = {});

// Arrivals inside the intervals, minus l * duration, over the exposure
// integral of I + R_hat, with R_hat frozen at each interval's start.
double estimate_beta2(const Observation& obs, const std::vector<Interval>& buzz, double mu,
                      double gamma, double l);

// Two-state maximum-score path over the gaps. Each gap scores its exponential
// log-likelihood ratio, every switch costs `switch_penalty`. Ties go to BuzzFree.
std::vector<Regime> restore_regimes(const InterArrivalSet& gaps, double beta1, double beta2,
                                    double l, double switch_penalty = 8.0);

struct RegimeSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  Regime regime = Regime::BuzzFree;
};

// Merges the per-gap labels into segments covering [obs.t_start, obs.t_end].
std::vector<RegimeSegment> regime_segments(const Observation& obs, const InterArrivalSet& gaps,
                                           const std::vector<Regime>& labels);

struct DwellTimes {
  std::vector<double> buzz_free;
  std::vector<double> buzz;
};

DwellTimes dwell_times(const std::vector<RegimeSegment>& segments);

struct TransitionFit {
  double a1 = 0.0;
  double a2 = 0.0;
  bool partial = false;  // one of the states was never visited
};

// a1 = 1/mean BuzzFree dwell, a2 = 1/mean Buzz dwell. A state never visited
// leaves its rate at 0 and sets `partial`.
TransitionFit estimate_transition_rates(const DwellTimes& dwell);

struct EstimationOptions {
  std::vector<double> mu_grid;  // empty: mu_grid(gamma_hat)
  std::size_t min_group = 5;
  BuzzPolicy buzz;
  double switch_penalty = 8.0;
};

struct EstimationResult {
  ModelParams params_hat;
  std::vector<std::pair<double, double>> t_mu_curve;
  std::vector<RegressionPoint> regression_points;
  std::vector<Interval> buzz_intervals;
  std::vector<RegimeSegment> regime_path;
  std::vector<std::string> warnings;
};

// gamma -> mu (with R_hat) -> (beta1, l) -> buzz periods -> beta2 -> regimes ->
// (a1, a2). Stage failures surface as EstimationError. Missing buzz evidence
// degrades to beta2 = beta1, a1 = 0 with a warning instead of failing.
EstimationResult estimate_all(const Observation& obs, const EstimationOptions& options = {});

// Adds the r_hat and regime_hat channels to a series sampled from `obs`.
WorkloadSeries annotate(const WorkloadSeries& series, const Observation& obs,
                        const EstimationResult& result);

nlohmann::json to_json(const EstimationResult& result);

}  // namespace buzzload

#endif  // BUZZLOAD_ESTIMATION_HPP

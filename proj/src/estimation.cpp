#include "buzzload/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "buzzload/errors.hpp"
#include "buzzload/parallel.hpp"

namespace buzzload {

Observation::Observation(double t_start, double t_end, int i0, std::vector<double> times,
                         std::vector<std::int8_t> steps)
    : t_start_(t_start), t_end_(t_end), i0_(i0), times_(std::move(times)), steps_(std::move(steps)) {
  if (times_.size() != steps_.size()) throw ContractError("times and steps differ in length");
  if (!(t_end_ >= t_start_)) throw ContractError("observation ends before it starts");
  if (i0_ < 0) throw ContractError("negative initial level");
  levels_.resize(times_.size());
  cum_.resize(times_.size());
  int level = i0_;
  peak_ = i0_;
  double t = t_start_, acc = 0.0;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (times_[k] < t || times_[k] > t_end_) throw ContractError("observation times out of order");
    if (steps_[k] != 1 && steps_[k] != -1) throw ContractError("steps must be +1 or -1");
    acc += level * (times_[k] - t);
    t = times_[k];
    level += steps_[k];
    if (level < 0) throw ContractError("observed level went negative");
    if (steps_[k] > 0) ++arrivals_;
    peak_ = std::max(peak_, level);
    levels_[k] = level;
    cum_[k] = acc;
  }
}

Observation Observation::from_trace(const EventTrace& trace) {
  std::vector<double> times;
  std::vector<std::int8_t> steps;
  for (const Event& e : trace.events) {
    if (e.kind == EventKind::Arrival) {
      times.push_back(e.t);
      steps.push_back(1);
    } else if (e.kind == EventKind::WatchEnd) {
      times.push_back(e.t);
      steps.push_back(-1);
    }
  }
  return Observation(trace.t_start, trace.t_end, trace.initial.i, std::move(times),
                     std::move(steps));
}

Observation Observation::from_series(const WorkloadSeries& series) {
  check_series(series);
  if (series.empty()) throw InsufficientDataError("empty series");
  std::vector<double> times;
  std::vector<std::int8_t> steps;
  for (std::size_t k = 0; k + 1 < series.size(); ++k) {
    const int d = series.i[k + 1] - series.i[k];
    const int n = std::abs(d);
    const double t0 = series.time_at(k);
    for (int j = 1; j <= n; ++j) {
      times.push_back(t0 + series.dt * j / (n + 1.0));
      steps.push_back(d > 0 ? 1 : -1);
    }
  }
  return Observation(series.t0, series.t_end(), series.i.front(), std::move(times),
                     std::move(steps));
}

int Observation::level_at(double t) const {
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return i0_;
  return levels_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double Observation::integral_to(double t) const {
  t = std::clamp(t, t_start_, t_end_);
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return i0_ * (t - t_start_);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
  return cum_[k] + levels_[k] * (t - times_[k]);
}

double Observation::integral_to(double t, std::size_t& cursor) const {
  t = std::clamp(t, t_start_, t_end_);
  while (cursor < times_.size() && times_[cursor] <= t) ++cursor;
  if (cursor == 0) return i0_ * (t - t_start_);
  return cum_[cursor - 1] + levels_[cursor - 1] * (t - times_[cursor - 1]);
}

double Observation::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level outside [0, 1]");
  std::vector<double> occupancy(static_cast<std::size_t>(peak_) + 1, 0.0);
  double t = t_start_;
  int level = i0_;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    occupancy[static_cast<std::size_t>(level)] += times_[k] - t;
    t = times_[k];
    level = levels_[k];
  }
  occupancy[static_cast<std::size_t>(level)] += t_end_ - t;
  const double total = std::accumulate(occupancy.begin(), occupancy.end(), 0.0);
  if (!(total > 0.0)) return i0_;
  double acc = 0.0;
  for (std::size_t v = 0; v < occupancy.size(); ++v) {
    acc += occupancy[v];
    if (acc >= p * total) return static_cast<double>(v);
  }
  return peak_;
}

double estimate_gamma(const Observation& obs) {
  if (obs.departures() == 0) throw InsufficientDataError("no decrement of I observed");
  const double area = obs.integral_to(obs.t_end());
  if (!(area > 0.0)) throw InsufficientDataError("integral of I is zero");
  return static_cast<double>(obs.departures()) / area;
}

double window_integral(const Observation& obs, double t, double window, bool* truncated) {
  if (!(window > 0.0)) throw ContractError("window must be > 0");
  const double a = t - window;
  if (a >= obs.t_start()) return obs.integral(a, t);
  if (truncated) *truncated = true;
  const double covered = t - obs.t_start();
  if (!(covered > 0.0)) return obs.level_at(t) * window;
  return obs.integral(obs.t_start(), t) * window / covered;
}

double reconstruct_r(const Observation& obs, double t, double mu, double gamma, bool* truncated) {
  if (!(mu > 0.0) || !(gamma > 0.0)) throw ContractError("mu and gamma must be > 0");
  const double w = window_integral(obs, t, 1.0 / gamma + 1.0 / mu, truncated);
  return std::max(0.0, gamma * w - obs.level_at(t));
}

std::vector<double> reconstruct_r(const Observation& obs, const std::vector<double>& times,
                                  double mu, double gamma, bool* truncated) {
  std::vector<double> out(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    out[k] = reconstruct_r(obs, times[k], mu, gamma, truncated);
  }
  return out;
}

InterArrivalSet inter_arrivals(const Observation& obs, double mu, double gamma) {
  if (!(mu > 0.0) || !(gamma > 0.0)) throw ContractError("mu and gamma must be > 0");
  const double window = 1.0 / gamma + 1.0 / mu;
  const auto& times = obs.times();
  const auto& steps = obs.steps();
  InterArrivalSet out;
  out.reserve(obs.arrivals());
  bool have_prev = false;
  double prev_t = 0.0;
  int prev_x = 0;
  std::size_t lo = 0, hi = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (steps[k] < 0) continue;
    if (have_prev && times[k] > prev_t) out.push_back({times[k] - prev_t, prev_x, times[k]});
    have_prev = true;
    prev_t = times[k];
    const int level = obs.level_after(k);
    double w;
    if (prev_t - window >= obs.t_start()) {
      w = obs.integral_to(prev_t, hi) - obs.integral_to(prev_t - window, lo);
    } else {
      w = window_integral(obs, prev_t, window);
    }
    const double r = std::max(0.0, gamma * w - level);
    prev_x = level + static_cast<int>(std::lround(r));
  }
  return out;
}

double exp_spacings_statistic(std::vector<double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw InsufficientDataError("spacings statistic needs at least 2 samples");
  for (double v : samples) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ContractError("spacings samples must be > 0");
  }
  std::sort(samples.begin(), samples.end());
  std::vector<double> spacings(n);
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    spacings[k] = static_cast<double>(n - k) * (samples[k] - prev);
    prev = samples[k];
  }
  std::sort(spacings.begin(), spacings.end());
  std::size_t a = 0, b = 0;
  double sup = 0.0;
  while (a < n || b < n) {
    double v;
    if (b >= n || (a < n && samples[a] <= spacings[b])) {
      v = samples[a];
    } else {
      v = spacings[b];
    }
    while (a < n && samples[a] <= v) ++a;
    while (b < n && spacings[b] <= v) ++b;
    sup = std::max(sup, std::abs(static_cast<double>(a) - static_cast<double>(b)) / n);
  }
  return std::sqrt(1.0 / static_cast<double>(n)) * sup;
}

std::vector<double> mu_grid(double gamma, std::size_t points, double lo_fraction) {
  if (!(gamma > 0.0) || points == 0 || !(lo_fraction > 0.0 && lo_fraction <= 1.0)) {
    throw ContractError("invalid mu grid specification");
  }
  std::vector<double> grid(points);
  if (points == 1) {
    grid[0] = gamma;
    return grid;
  }
  const double lo = std::log(lo_fraction * gamma), hi = std::log(gamma);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = std::exp(lo + (hi - lo) * k / static_cast<double>(points - 1));
  }
  grid.back() = gamma;
  return grid;
}

namespace {

struct Group {
  int x = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Sorts gaps by x and returns the groups of at least min_group members.
std::vector<Group> group_by_level(InterArrivalSet& gaps, std::size_t min_group) {
  if (gaps.empty()) return {};
  int top = 0;
  for (const auto& g : gaps) top = std::max(top, g.x);
  std::vector<std::size_t> offset(static_cast<std::size_t>(top) + 2, 0);
  for (const auto& g : gaps) ++offset[static_cast<std::size_t>(g.x) + 1];
  std::partial_sum(offset.begin(), offset.end(), offset.begin());
  InterArrivalSet sorted(gaps.size());
  for (const auto& g : gaps) sorted[offset[static_cast<std::size_t>(g.x)]++] = g;
  gaps.swap(sorted);
  std::vector<Group> groups;
  for (std::size_t k = 0; k < gaps.size();) {
    std::size_t j = k;
    while (j < gaps.size() && gaps[j].x == gaps[k].x) ++j;
    if (j - k >= min_group) groups.push_back({gaps[k].x, k, j});
    k = j;
  }
  return groups;
}

}  // namespace

MuFit estimate_mu(const Observation& obs, double gamma, const std::vector<double>& grid,
                  std::size_t min_group) {
  if (grid.empty()) throw ContractError("empty mu grid");
  for (double mu : grid) {
    if (!(mu > 0.0) || mu > gamma * (1.0 + 1e-12)) {
      throw ContractError("mu grid must lie within (0, gamma]");
    }
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> stat(grid.size(), inf);
  parallel_for(grid.size(), [&](std::size_t g) {
    InterArrivalSet gaps = inter_arrivals(obs, grid[g], gamma);
    const auto groups = group_by_level(gaps, min_group);
    std::vector<double> pooled;
    pooled.reserve(gaps.size());
    for (const Group& grp : groups) {
      double sum = 0.0;
      for (std::size_t k = grp.begin; k < grp.end; ++k) sum += gaps[k].w;
      const double mean = sum / static_cast<double>(grp.end - grp.begin);
      for (std::size_t k = grp.begin; k < grp.end; ++k) pooled.push_back(gaps[k].w / mean);
    }
    if (pooled.size() >= 2) stat[g] = exp_spacings_statistic(std::move(pooled));
  });
  MuFit fit;
  double best = inf;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    fit.curve.emplace_back(grid[g], stat[g]);
    if (stat[g] < best || (stat[g] == best && fit.mu > 0.0 && grid[g] < fit.mu)) {
      best = stat[g];
      fit.mu = grid[g];
    }
  }
  if (!std::isfinite(best)) {
    throw InsufficientDataError("no level holds enough inter-arrival gaps");
  }
  return fit;
}

LinearFit estimate_beta1_l(const InterArrivalSet& gaps_in, std::size_t min_group) {
  InterArrivalSet gaps = gaps_in;
  const auto groups = group_by_level(gaps, min_group);
  if (groups.size() < 3) {
    throw InsufficientDataError("regression needs at least 3 populated levels");
  }
  LinearFit fit;
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (const Group& grp : groups) {
    double sum = 0.0;
    for (std::size_t k = grp.begin; k < grp.end; ++k) sum += gaps[k].w;
    const double n = static_cast<double>(grp.end - grp.begin);
    const RegressionPoint pt{static_cast<double>(grp.x), n / sum, n};
    fit.points.push_back(pt);
    sw += pt.weight;
    sx += pt.weight * pt.x;
    sy += pt.weight * pt.inv_omega;
  }
  const double xbar = sx / sw, ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& pt : fit.points) {
    sxx += pt.weight * (pt.x - xbar) * (pt.x - xbar);
    sxy += pt.weight * (pt.x - xbar) * (pt.inv_omega - ybar);
  }
  fit.beta1 = sxy / sxx;
  fit.l = ybar - fit.beta1 * xbar;
  if (!(fit.beta1 > 0.0)) throw EstimationError("beta1_l", "fitted slope is not positive");
  if (!(fit.l > 0.0)) throw EstimationError("beta1_l", "fitted intercept is not positive");
  return fit;
}

namespace {

std::size_t arrivals_in(const Observation& obs, double a, double b) {
  const auto& times = obs.times();
  auto lo = std::upper_bound(times.begin(), times.end(), a);
  auto hi = std::upper_bound(times.begin(), times.end(), b);
  std::size_t n = 0;
  for (auto it = lo; it != hi; ++it) {
    if (obs.steps()[static_cast<std::size_t>(it - times.begin())] > 0) ++n;
  }
  return n;
}

}  // namespace

std::vector<Interval> detect_buzz_periods(const Observation& obs, double mu, double gamma,
                                          double beta1, double l, const BuzzPolicy& policy) {
  std::vector<Interval> out;
  if (obs.size() == 0) return out;
  const double threshold = obs.quantile(policy.quantile);
  const auto& times = obs.times();

  auto consider = [&](double s, double peak_t) {
    if (!(peak_t > s)) return;
    const auto n = static_cast<double>(arrivals_in(obs, s, peak_t));
    const double r = reconstruct_r(obs, s, mu, gamma);
    const double expected = beta1 * (obs.integral(s, peak_t) + r * (peak_t - s)) + l * (peak_t - s);
    if (n < static_cast<double>(policy.min_arrivals) || n < policy.min_ratio * expected) return;
    const double evidence = expected > 0.0 ? n * std::log(n / expected) - (n - expected)
                                           : std::numeric_limits<double>::infinity();
    if (evidence >= policy.min_evidence) out.push_back({s, peak_t});
  };

  bool above = obs.initial_level() >= threshold;
  double start = obs.t_start();
  int peak = obs.initial_level();
  double peak_t = obs.t_start();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const int level = obs.level_after(k);
    if (!above && level >= threshold) {
      above = true;
      start = times[k];
      peak = level;
      peak_t = times[k];
    } else if (above && level < threshold) {
      consider(start, peak_t);
      above = false;
    } else if (above && level > peak) {
      peak = level;
      peak_t = times[k];
    }
  }
  if (above) consider(start, peak_t);
  return out;
}

double estimate_beta2(const Observation& obs, const std::vector<Interval>& buzz, double mu,
                      double gamma, double l) {
  if (buzz.empty()) throw InsufficientDataError("no buzz period to estimate beta2 from");
  double n = 0.0, exposure = 0.0, duration = 0.0;
  for (const Interval& iv : buzz) {
    const double len = iv.t_end - iv.t_start;
    if (!(len > 0.0)) continue;
    n += static_cast<double>(arrivals_in(obs, iv.t_start, iv.t_end));
    exposure += obs.integral(iv.t_start, iv.t_end) + reconstruct_r(obs, iv.t_start, mu, gamma) * len;
    duration += len;
  }
  if (n == 0.0) throw InsufficientDataError("no arrival inside the buzz periods");
  if (!(exposure > 0.0)) throw InsufficientDataError("zero exposure inside the buzz periods");
  return std::max(0.0, n - l * duration) / exposure;
}

std::vector<Regime> restore_regimes(const InterArrivalSet& gaps, double beta1, double beta2,
                                    double l, double switch_penalty) {
  if (!(beta1 > 0.0) || !(beta2 > 0.0) || !(l > 0.0)) {
    throw ContractError("restore_regimes needs positive rates");
  }
  const std::size_t n = gaps.size();
  std::vector<Regime> path(n, Regime::BuzzFree);
  if (n == 0) return path;
  // bit 0: predecessor of BuzzFree is Buzz, bit 1: predecessor of Buzz is Buzz
  std::vector<std::uint8_t> back(n);
  double s0 = 0.0, s1 = -switch_penalty;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = gaps[k].x;
    const double lam1 = beta1 * x + l, lam2 = beta2 * x + l;
    const double llr = std::log(lam2 / lam1) - (lam2 - lam1) * gaps[k].w;
    std::uint8_t b = 0;
    double n0 = s0;
    if (s1 - switch_penalty > s0) {
      n0 = s1 - switch_penalty;
      b |= 1;
    }
    double n1 = s0 - switch_penalty;
    if (s1 > s0 - switch_penalty) {
      n1 = s1;
      b |= 2;
    }
    s0 = n0;
    s1 = n1 + llr;
    back[k] = b;
  }
  int state = s1 > s0 ? 1 : 0;
  for (std::size_t k = n; k-- > 0;) {
    path[k] = state ? Regime::Buzz : Regime::BuzzFree;
    state = state ? ((back[k] >> 1) & 1) : (back[k] & 1);
  }
  return path;
}

std::vector<RegimeSegment> regime_segments(const Observation& obs, const InterArrivalSet& gaps,
                                           const std::vector<Regime>& labels) {
  if (gaps.size() != labels.size()) throw ContractError("one label per gap expected");
  std::vector<RegimeSegment> out;
  if (gaps.empty()) {
    out.push_back({obs.t_start(), obs.t_end(), Regime::BuzzFree});
    return out;
  }
  out.push_back({obs.t_start(), gaps[0].t, labels[0]});
  for (std::size_t k = 1; k < gaps.size(); ++k) {
    if (labels[k] == out.back().regime) {
      out.back().t_end = gaps[k].t;
    } else {
      const double boundary = gaps[k].t - gaps[k].w;
      out.back().t_end = boundary;
      out.push_back({boundary, gaps[k].t, labels[k]});
    }
  }
  out.back().t_end = obs.t_end();
  return out;
}

DwellTimes dwell_times(const std::vector<RegimeSegment>& segments) {
  DwellTimes d;
  for (const auto& s : segments) {
    (s.regime == Regime::Buzz ? d.buzz : d.buzz_free).push_back(s.t_end - s.t_start);
  }
  return d;
}

TransitionFit estimate_transition_rates(const DwellTimes& dwell) {
  auto reciprocal_mean = [](const std::vector<double>& v) {
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    return total > 0.0 ? static_cast<double>(v.size()) / total : 0.0;
  };
  TransitionFit fit;
  fit.a1 = reciprocal_mean(dwell.buzz_free);
  fit.a2 = reciprocal_mean(dwell.buzz);
  fit.partial = dwell.buzz_free.empty() || dwell.buzz.empty();
  return fit;
}

namespace {

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const EstimationError&) {
    throw;
  } catch (const Error& e) {
    throw EstimationError(name, e.what());
  }
}

}  // namespace

EstimationResult estimate_all(const Observation& obs, const EstimationOptions& options) {
  EstimationResult res;
  ModelParams& p = res.params_hat;

  p.gamma = stage("gamma", [&] { return estimate_gamma(obs); });

  const MuFit mu_fit = stage("mu", [&] {
    const auto grid = options.mu_grid.empty() ? mu_grid(p.gamma) : options.mu_grid;
    return estimate_mu(obs, p.gamma, grid, options.min_group);
  });
  p.mu = mu_fit.mu;
  res.t_mu_curve = mu_fit.curve;
  bool truncated = false;
  reconstruct_r(obs, obs.t_end(), p.mu, p.gamma, &truncated);
  if (truncated) res.warnings.push_back("R_hat window longer than the trace");

  const InterArrivalSet gaps = inter_arrivals(obs, p.mu, p.gamma);
  const LinearFit lin = stage("beta1_l", [&] { return estimate_beta1_l(gaps, options.min_group); });
  p.beta1 = lin.beta1;
  p.l = lin.l;
  res.regression_points = lin.points;

  res.buzz_intervals = stage("buzz", [&] {
    return detect_buzz_periods(obs, p.mu, p.gamma, p.beta1, p.l, options.buzz);
  });
  if (res.buzz_intervals.empty()) {
    res.warnings.push_back("no buzz period detected; beta2 set to beta1");
    p.beta2 = p.beta1;
  } else {
    p.beta2 = stage("beta2", [&] {
      return estimate_beta2(obs, res.buzz_intervals, p.mu, p.gamma, p.l);
    });
    if (p.beta2 < p.beta1) {
      res.warnings.push_back("beta2 below beta1; clamped to beta1");
      p.beta2 = p.beta1;
    }
  }

  const auto labels = stage("regimes", [&] {
    return restore_regimes(gaps, p.beta1, p.beta2, p.l, options.switch_penalty);
  });
  res.regime_path = regime_segments(obs, gaps, labels);
  const TransitionFit tr = estimate_transition_rates(dwell_times(res.regime_path));
  if (tr.partial) {
    res.warnings.push_back("a regime was never visited; buzz regime frozen");
    p.a1 = 0.0;
    p.a2 = tr.a2 > 0.0 ? tr.a2 : p.gamma;
  } else {
    p.a1 = tr.a1;
    p.a2 = tr.a2;
  }

  int max_x = 1;
  for (const auto& g : gaps) max_x = std::max(max_x, g.x);
  p.i_max = std::max(1, obs.peak());
  p.r_max = max_x;
  return res;
}

WorkloadSeries annotate(const WorkloadSeries& series, const Observation& obs,
                        const EstimationResult& result) {
  WorkloadSeries out = series;
  std::vector<double> r(series.size());
  std::vector<Regime> regime(series.size(), Regime::BuzzFree);
  std::size_t seg = 0;
  const auto& path = result.regime_path;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double t = series.time_at(k);
    r[k] = reconstruct_r(obs, t, result.params_hat.mu, result.params_hat.gamma);
    while (seg + 1 < path.size() && path[seg].t_end <= t) ++seg;
    if (!path.empty()) regime[k] = path[seg].regime;
  }
  out.r = std::move(r);
  out.regime = std::move(regime);
  return out;
}

nlohmann::json to_json(const EstimationResult& result) {
  nlohmann::json j;
  j["params_hat"] = to_json(result.params_hat);
  auto& curve = j["t_mu_curve"] = nlohmann::json::array();
  for (const auto& [mu, t] : result.t_mu_curve) {
    curve.push_back({{"mu", mu}, {"statistic", std::isfinite(t) ? nlohmann::json(t) : nlohmann::json()}});
  }
  auto& pts = j["regression_points"] = nlohmann::json::array();
  for (const auto& p : result.regression_points) {
    pts.push_back({{"x", p.x}, {"inv_omega", p.inv_omega}, {"weight", p.weight}});
  }
  auto& buzz = j["buzz_intervals"] = nlohmann::json::array();
  for (const auto& iv : result.buzz_intervals) buzz.push_back({iv.t_start, iv.t_end});
  auto& path = j["regime_path"] = nlohmann::json::array();
  for (const auto& s : result.regime_path) {
    path.push_back({s.t_start, s.t_end, static_cast<int>(s.regime)});
  }
  j["warnings"] = result.warnings;
  return j;
}

}  // namespace buzzload

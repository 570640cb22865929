#include "buzzload/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "buzzload/errors.hpp"
#include "buzzload/parallel.hpp"
#include "buzzload/trace_io.hpp"

namespace buzzload {

SystemState mean_state(const ModelParams& params) {
  SystemState s;
  try {
    s.i = static_cast<std::int32_t>(std::min<double>(std::lround(mean_workload(params)), params.i_max));
    s.r = static_cast<std::int32_t>(
        std::min<double>(std::lround(mean_past_viewers(params)), params.r_max));
  } catch (const InstabilityError&) {
    s = SystemState{};
  }
  return s;
}

double param_value(const ModelParams& p, std::size_t index) {
  switch (index) {
    case 0: return p.gamma;
    case 1: return p.beta1;
    case 2: return p.mu;
    case 3: return p.l;
    case 4: return p.beta2;
    case 5: return p.a1;
    case 6: return p.a2;
    default: throw ContractError("parameter index out of range");
  }
}

std::vector<ReplicationOutcome> run_replications(const ModelParams& params, const Horizon& horizon,
                                                 std::uint64_t seed, std::size_t replications,
                                                 const EstimationOptions& options) {
  validate(params);
  std::vector<ReplicationOutcome> out(replications);
  const SystemState start = mean_state(params);
  parallel_for(replications, [&](std::size_t k) {
    ReplicationOutcome& o = out[k];
    o.seed = seed + k;
    try {
      Observation obs = [&] {
        const EventTrace trace = simulate(params, start, horizon, o.seed);
        o.events = trace.events.size();
        return Observation::from_trace(trace);
      }();
      o.estimate = estimate_all(obs, options).params_hat;
      o.ok = true;
    } catch (const Error& e) {
      o.error = e.what();
    }
  });
  return out;
}

double sample_quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= v.size()) return v.back();
  return v[k] + (pos - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

std::vector<ErrorSummary> summarize_relative_errors(const ModelParams& truth,
                                                    const std::vector<ReplicationOutcome>& outcomes) {
  std::vector<ErrorSummary> out;
  for (std::size_t j = 0; j < kParamNames.size(); ++j) {
    std::vector<double> rel, abs_rel;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      const double e = param_value(o.estimate, j) / param_value(truth, j) - 1.0;
      rel.push_back(e);
      abs_rel.push_back(std::fabs(e));
    }
    ErrorSummary s;
    s.name = kParamNames[j];
    s.count = rel.size();
    if (!rel.empty()) {
      s.min = *std::min_element(rel.begin(), rel.end());
      s.max = *std::max_element(rel.begin(), rel.end());
      s.q1 = sample_quantile(rel, 0.25);
      s.median = sample_quantile(rel, 0.5);
      s.q3 = sample_quantile(rel, 0.75);
      s.median_abs = sample_quantile(abs_rel, 0.5);
    } else {
      s.min = s.q1 = s.median = s.q3 = s.max = s.median_abs = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(s);
  }
  return out;
}

std::vector<MsePoint> mse_sweep(const ModelParams& params, const std::vector<std::uint64_t>& lengths,
                                std::uint64_t seed, std::size_t replications,
                                const EstimationOptions& options) {
  std::vector<MsePoint> out;
  for (const std::uint64_t n : lengths) {
    const auto reps = run_replications(params, Horizon::event_count(n), seed, replications, options);
    MsePoint pt;
    pt.events = n;
    for (const auto& o : reps) {
      if (!o.ok) continue;
      ++pt.ok;
      for (std::size_t j = 0; j < kParamNames.size(); ++j) {
        const double e = param_value(o.estimate, j) / param_value(params, j) - 1.0;
        pt.mse[j] += e * e;
      }
    }
    for (double& m : pt.mse) {
      m = pt.ok ? m / static_cast<double>(pt.ok) : std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(pt);
  }
  return out;
}

double loglog_decay(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("need at least two (x, y) pairs");
  double sx = 0.0, sy = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0 && y[k] > 0.0)) throw ContractError("log-log fit needs positive values");
    sx += std::log(x[k]);
    sy += std::log(y[k]);
  }
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - sx / n;
    sxx += dx * dx;
    sxy += dx * (std::log(y[k]) - sy / n);
  }
  return -sxy / sxx;
}

ClosureReport closure(const EventTrace& source, double dt, std::size_t max_lag, std::uint64_t seed,
                      const EstimationOptions& options) {
  ClosureReport rep;
  const Observation obs = Observation::from_trace(source);
  EstimationResult est = estimate_all(obs, options);
  rep.estimate = est.params_hat;
  rep.warnings = est.warnings;
  try {
    rep.mean_formula = mean_workload(rep.estimate);
  } catch (const InstabilityError&) {
    rep.mean_formula = std::numeric_limits<double>::quiet_NaN();
    rep.warnings.push_back("estimated model has no finite mean workload");
  }
  rep.sample_mean = time_average_i(source);

  const EventTrace refit = simulate(rep.estimate, mean_state(rep.estimate), Horizon::until(source.span()), seed);
  rep.refit_mean = time_average_i(refit);
  rep.hist_source = histogram(source);
  rep.hist_refit = histogram(refit);
  rep.tv = total_variation(rep.hist_source, rep.hist_refit);

  rep.acf_source = autocorrelation(sample_series(source, dt), max_lag);
  rep.acf_refit = autocorrelation(sample_series(refit, dt), max_lag);
  std::size_t lag = 0;
  while (lag <= max_lag && rep.acf_source[lag] >= std::exp(-1.0)) ++lag;
  if (lag > max_lag) {
    rep.decorrelated = false;
    lag = max_lag;
  }
  rep.decorrelation_lag = lag;
  for (std::size_t k = 0; k <= lag; ++k) {
    rep.acf_max_diff = std::max(rep.acf_max_diff, std::fabs(rep.acf_source[k] - rep.acf_refit[k]));
  }
  return rep;
}

}  // namespace buzzload

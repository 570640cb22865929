// Acceptance checks, one per criterion number given on the command line.
// Each prints a single "PASS criterion N: ..." or "FAIL criterion N: ..." line
// (details go to stderr) and exits non-zero on FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "buzzload/errors.hpp"
#include "buzzload/experiments.hpp"
#include "buzzload/provisioning.hpp"
#include "buzzload/simulator.hpp"
#include "buzzload/spectrum.hpp"
#include "buzzload/trace_io.hpp"
#include "oracles.hpp"

using namespace buzzload;

namespace {

ModelParams preset(const std::string& name) {
  return load_params(std::string(BUZZLOAD_PRESET_DIR) + "/" + name + ".json");
}

struct Verdict {
  bool pass = true;
  std::ostringstream summary;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      summary << "[failed: " << what << "] ";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: mean workload of the three table cases ----
void criterion1(Verdict& v) {
  const char* names[] = {"table1a", "table1b", "table1c"};
  const char* labels[] = {"a", "b", "c"};
  for (int k = 0; k < 3; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelParams p = preset(names[k]);
    const double expect = mean_workload(p);
    const auto tr = simulate(p, mean_state(p), Horizon::event_count(1u << 21), 1);
    const double got = time_average_i(tr);
    const double rel = got / expect - 1.0;
    std::cerr << "case (" << labels[k] << "): E(i) " << expect << ", simulated " << got << ", rel " << rel
              << ", " << seconds_since(t0) << " s\n";
    v.summary << "(" << labels[k] << ") " << got << " vs " << expect << "; ";
    v.require(std::fabs(rel) <= 0.15, std::string("case ") + labels[k] + " outside 15%");
  }
}

// ---- 2: estimator recovery over 10 replications of case (b) ----
void criterion2(Verdict& v) {
  const ModelParams p = preset("table1b");
  const auto t0 = std::chrono::steady_clock::now();
  const auto outcomes = run_replications(p, Horizon::until(static_cast<double>(1u << 21) * 100.0), 1, 10);
  std::size_t ok = 0;
  for (const auto& o : outcomes) {
    if (o.ok) {
      ++ok;
    } else {
      std::cerr << "replication seed " << o.seed << " failed: " << o.error << "\n";
    }
  }
  std::cerr << ok << "/10 replications estimated in " << seconds_since(t0) << " s\n";
  v.require(ok > 0, "no replication succeeded");
  if (ok == 0) return;
  const auto sums = summarize_relative_errors(p, outcomes);
  const double limit[] = {0.05, 0.10, 0.25, -1.0, 0.25, 0.25, 0.25};  // l has no target
  std::vector<double> spread(7);
  for (std::size_t k = 0; k < sums.size(); ++k) {
    const auto& s = sums[k];
    spread[k] = s.q3 - s.q1;
    std::cerr << s.name << ": median rel " << s.median << ", median |rel| " << s.median_abs << ", IQR "
              << spread[k] << ", range [" << s.min << ", " << s.max << "]\n";
    if (limit[k] > 0.0) {
      v.summary << s.name << " " << s.median_abs << "; ";
      v.require(s.median_abs <= limit[k], s.name + " median error above " + std::to_string(limit[k]));
    }
  }
  // Dispersion: gamma tightest, beta2 widest among the scored parameters.
  std::vector<std::size_t> scored{0, 1, 2, 4, 5, 6};
  std::sort(scored.begin(), scored.end(), [&](std::size_t a, std::size_t b) { return spread[a] < spread[b]; });
  std::cerr << "dispersion order (IQR, tightest first):";
  for (auto k : scored) std::cerr << " " << kParamNames[k];
  std::cerr << "\n";
  v.require(scored.front() == 0, "gamma is not the tightest");
  v.require(scored.back() == 4, "beta2 is not the widest");
}

// ---- 3: MSE decay for gamma and beta1 ----
void criterion3(Verdict& v) {
  const ModelParams p = preset("table1b");
  const std::vector<std::uint64_t> lengths{1u << 15, 1u << 17, 1u << 19, 1u << 21};
  const auto t0 = std::chrono::steady_clock::now();
  const auto pts = mse_sweep(p, lengths, 1, 10);
  std::cerr << "sweep took " << seconds_since(t0) << " s\n";
  for (std::size_t idx : {std::size_t{0}, std::size_t{1}}) {
    std::vector<double> x, y;
    for (const auto& pt : pts) {
      std::cerr << kParamNames[idx] << " N=" << pt.events << " ok=" << pt.ok << " mse=" << pt.mse[idx] << "\n";
      if (pt.ok > 0 && pt.mse[idx] > 0.0) {
        x.push_back(static_cast<double>(pt.events));
        y.push_back(pt.mse[idx]);
      }
    }
    if (x.size() < 2) {
      v.require(false, std::string(kParamNames[idx]) + " has fewer than two usable lengths");
      continue;
    }
    const double rate = loglog_decay(x, y);
    v.summary << kParamNames[idx] << " decay " << rate << "; ";
    v.require(x.size() == lengths.size(), std::string(kParamNames[idx]) + " lost lengths to failed fits");
    v.require(rate >= 0.5, std::string(kParamNames[idx]) + " decay below 0.5");
  }
}

// ---- 4: tiny-chain oracles ----
void criterion4(Verdict& v) {
  ModelParams p;
  p.beta1 = 0.3;
  p.beta2 = 0.9;
  p.gamma = 1.0;
  p.mu = 0.6;
  p.l = 0.5;
  p.a1 = 0.2;
  p.a2 = 0.5;
  p.i_max = 2;
  p.r_max = 2;
  const auto tr = simulate(p, {}, Horizon::event_count(1000000), 21);
  const auto occ = state_occupancy(tr);
  const Eigen::VectorXd pi = oracle::stationary(oracle::dense_generator(p));
  double tv = 0.0;
  for (std::size_t k = 0; k < occ.size(); ++k) tv += 0.5 * std::fabs(occ[k] - pi(static_cast<Eigen::Index>(k)));
  v.summary << "TV " << tv << "; ";
  v.require(tv <= 0.02, "occupancy TV above 0.02");

  ModelParams e = p;
  e.beta1 = 0.2;
  e.beta2 = 0.7;
  e.mu = 0.4;
  e.l = 0.3;
  e.a1 = 0.1;
  e.a2 = 0.6;
  e.i_max = 1;
  e.r_max = 1;
  const RateMatrix m = build_rate_matrix(e);
  const auto phi = observable_i(e);
  const Eigen::MatrixXd dense = oracle::dense_generator(e);
  double worst = 0.0;
  for (double q : linear_grid(-2.0, 2.0, 81))
    worst = std::max(worst, std::fabs(scgf(m, q, phi) - oracle::principal_eigenvalue(dense, q, phi)));
  v.summary << "8-state max |dLambda| " << worst;
  v.require(m.dim == 8, "chain is not 8 states");
  v.require(worst <= 1e-8, "scgf differs from the dense eigenvalue");
}

// Horizontal distance from (alpha, f) to curve `c` on the given side of its apex.
double horizontal_gap(const SpectrumCurve& c, double alpha, double f, bool right) {
  const auto pts = c.finite_points();
  std::size_t apex = 0;
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (pts[k].f > pts[apex].f) apex = k;
  if (f >= pts[apex].f) return std::fabs(alpha - pts[apex].alpha);
  if (right) {
    for (std::size_t k = apex; k + 1 < pts.size(); ++k) {
      if (pts[k + 1].f <= f) {
        const double w = (pts[k].f - f) / (pts[k].f - pts[k + 1].f);
        return std::fabs(alpha - (pts[k].alpha + w * (pts[k + 1].alpha - pts[k].alpha)));
      }
    }
  } else {
    for (std::size_t k = apex; k > 0; --k) {
      if (pts[k - 1].f <= f) {
        const double w = (pts[k].f - f) / (pts[k].f - pts[k - 1].f);
        return std::fabs(alpha - (pts[k].alpha + w * (pts[k - 1].alpha - pts[k].alpha)));
      }
    }
  }
  return std::numeric_limits<double>::infinity();
}

const SpectrumPoint& point_at_q0(const SpectrumCurve& c) {
  const SpectrumPoint* best = &c.points.front();
  for (const auto& p : c.points)
    if (std::fabs(p.q) < std::fabs(best->q)) best = &p;
  return *best;
}

// ---- 5: spectrum properties ----
void criterion5(Verdict& v) {
  const ModelParams buzz = preset("demo_buzz");
  const ModelParams quiet = preset("demo_buzzfree");
  const auto grid = default_q_grid(buzz.i_max);
  std::pair<double, double> supports[2];
  int which = 0;
  for (const ModelParams* p : {&buzz, &quiet}) {
    const auto t0 = std::chrono::steady_clock::now();
    const RateMatrix m = build_rate_matrix(*p);
    const auto phi = observable_i(*p);
    const SpectrumCurve c = theoretical_spectrum(m, phi, grid);
    const auto pi = stationary_distribution(m);
    double mean = 0.0;
    for (std::size_t s = 0; s < pi.size(); ++s) mean += pi[s] * phi[s];

    std::vector<SpectrumPoint> by_q = c.points;
    std::sort(by_q.begin(), by_q.end(), [](const SpectrumPoint& a, const SpectrumPoint& b) { return a.q < b.q; });
    double worst_convexity = 0.0;
    for (std::size_t k = 1; k + 1 < by_q.size(); ++k) {
      const double h1 = by_q[k].q - by_q[k - 1].q, h2 = by_q[k + 1].q - by_q[k].q;
      const double slope_r = (by_q[k + 1].lambda - by_q[k].lambda) / h2;
      const double slope_l = (by_q[k].lambda - by_q[k - 1].lambda) / h1;
      worst_convexity = std::min(worst_convexity, slope_r - slope_l);
    }
    const SpectrumPoint& z = point_at_q0(c);
    const SpectrumPoint* apex = &c.points.front();
    for (const auto& pt : c.points)
      if (pt.f > apex->f) apex = &pt;
    supports[which] = c.support();
    const char* name = which == 0 ? "buzz" : "buzz-free";
    std::cerr << name << ": Lambda(0) " << z.lambda << ", worst slope drop " << worst_convexity << ", apex f "
              << apex->f << " at alpha " << apex->alpha << ", pi mean " << mean << ", support ["
              << supports[which].first << ", " << supports[which].second << "], " << seconds_since(t0) << " s\n";
    v.require(std::fabs(z.lambda) <= 1e-9, std::string(name) + " Lambda(0) != 0");
    v.require(worst_convexity >= -1e-9, std::string(name) + " Lambda not convex");
    v.require(std::fabs(apex->f) <= 1e-6, std::string(name) + " apex f not 0");
    v.require(std::fabs(apex->alpha / mean - 1.0) <= 0.05, std::string(name) + " apex off the mean");
    ++which;
  }
  v.summary << "buzz support [" << supports[0].first << ", " << supports[0].second << "] vs buzz-free ["
            << supports[1].first << ", " << supports[1].second << "]; ";
  v.require(supports[0].first < supports[1].first, "buzz support does not extend below the buzz-free one");
  v.require(supports[0].second > supports[1].second, "buzz support does not extend above the buzz-free one");

  const auto tr = simulate(buzz, mean_state(buzz), Horizon::event_count(1u << 21), 1);
  const WorkloadSeries s = sample_series(tr, 1.0);
  const auto egrid = default_q_grid(static_cast<double>(*std::max_element(s.i.begin(), s.i.end())));
  std::vector<SpectrumCurve> fam;
  for (double tau : {100.0, 200.0, 400.0}) fam.push_back(empirical_spectrum(s, tau, egrid));
  double worst_ratio = 0.0;
  for (std::size_t a = 0; a < fam.size(); ++a) {
    const SpectrumPoint& za = point_at_q0(fam[a]);
    const double eps = za.eps;
    // Near the apex: points within one eps of the apex location.
    for (const auto& pt : fam[a].finite_points()) {
      if (std::fabs(pt.alpha - za.alpha) > eps) continue;
      for (std::size_t b = 0; b < fam.size(); ++b) {
        if (b == a) continue;
        const double gap = horizontal_gap(fam[b], pt.alpha, pt.f, pt.alpha >= za.alpha);
        worst_ratio = std::max(worst_ratio, gap / eps);
      }
    }
  }
  std::cerr << "empirical: worst horizontal gap near the apex = " << worst_ratio << " eps\n";
  bool nested = true;
  for (std::size_t a = 0; a + 1 < fam.size(); ++a) {
    const auto [lo, hi] = fam[a].support();
    const auto [lo2, hi2] = fam[a + 1].support();
    std::cerr << "tau " << fam[a].tau << " support [" << lo << ", " << hi << "]\n";
    nested = nested && lo <= lo2 && hi2 <= hi && (lo < lo2 || hi2 < hi);
  }
  std::cerr << "tau " << fam.back().tau << " support [" << fam.back().support().first << ", "
            << fam.back().support().second << "]\n";
  v.summary << "empirical gap " << worst_ratio << " eps, nested " << (nested ? "yes" : "no");
  v.require(worst_ratio <= 2.0, "empirical spectra do not superimpose near the apex");
  v.require(nested, "empirical supports not nested");
}

// ---- 6: anchor points of the buzz demo ----
void criterion6(Verdict& v) {
  const ModelParams p = preset("demo_buzz");
  const auto tr = simulate(p, mean_state(p), Horizon::event_count(1u << 21), 1);
  const WorkloadSeries s = sample_series(tr, 1.0);
  const auto grid = default_q_grid(static_cast<double>(*std::max_element(s.i.begin(), s.i.end())));
  struct Anchor {
    double tau, lo, hi, f, f_tol;
  };
  // f tolerances: half the anchor value, enough for the Monte-Carlo spread of the one-window floor.
  for (const Anchor& a : {Anchor{400.0, 4.0, 6.0, -0.02, 0.01}, Anchor{100.0, 8.0, 10.0, -0.08, 0.04}}) {
    const auto pts = empirical_spectrum(s, a.tau, grid).finite_points();
    const auto& top = pts.back();
    std::cerr << "tau " << a.tau << ": max alpha " << top.alpha << " at f " << top.f << "\n";
    v.summary << "tau " << a.tau << " (" << top.alpha << ", " << top.f << "); ";
    v.require(top.alpha >= a.lo && top.alpha <= a.hi, "max alpha outside the anchor window at tau " + std::to_string(a.tau));
    v.require(std::fabs(top.f - a.f) <= a.f_tol, "f far from the anchor at tau " + std::to_string(a.tau));
  }
}

// ---- 7: provisioning soundness ----
void criterion7(Verdict& v) {
  const ModelParams p = preset("demo_buzz");
  const SpectrumCurve th = theoretical_spectrum(p, default_q_grid(p.i_max));
  const double alpha_as = point_at_q0(th).alpha;

  bool mono_p = true, mono_q = true, residual_ok = true;
  double prev = -std::numeric_limits<double>::infinity();
  for (double pl : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const Margin m = safety_margin(th, alpha_as, 10.0, pl);
    std::cerr << "Q 10 p_loss " << pl << ": C0 " << m.c0 << " residual " << m.residual << " it " << m.iterations << "\n";
    mono_p = mono_p && m.c0 >= prev - 1e-9;
    residual_ok = residual_ok && m.residual <= pl;
    prev = m.c0;
  }
  prev = std::numeric_limits<double>::infinity();
  for (double q : {0.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
    const Margin m = safety_margin(th, alpha_as, q, 1e-3);
    std::cerr << "Q " << q << " p_loss 1e-3: C0 " << m.c0 << " residual " << m.residual << "\n";
    mono_q = mono_q && m.c0 <= prev + 1e-9;
    residual_ok = residual_ok && m.residual <= 1e-3;
    prev = m.c0;
  }
  v.require(mono_p, "C0 not monotone in p_loss");
  v.require(mono_q, "C0 not monotone in Q");
  v.require(residual_ok, "residual loss above p_loss");

  // End to end: estimate from one trace, size from the estimate, replay an independent trace.
  const double p_loss = 1e-3, buffer = 50.0;
  const auto train = simulate(p, mean_state(p), Horizon::event_count(1u << 21), 1);
  const auto est = estimate_all(Observation::from_trace(train));
  for (const auto& w : est.warnings) std::cerr << "estimate warning: " << w << "\n";
  const SpectrumCurve th_hat = theoretical_spectrum(est.params_hat, default_q_grid(est.params_hat.i_max));
  const double alpha_hat = point_at_q0(th_hat).alpha;
  const Margin m = safety_margin(th_hat, alpha_hat, buffer, p_loss);
  const auto test = simulate(p, mean_state(p), Horizon::event_count(1u << 21), 2);
  const double exceed = buffer_overflow_fraction(Observation::from_trace(test), m.capacity, buffer);
  std::cerr << "end to end: alpha_as_hat " << alpha_hat << ", C " << m.capacity << ", exceedance " << exceed << "\n";
  v.summary << "monotone p/Q " << mono_p << "/" << mono_q << ", end-to-end exceedance " << exceed << " at C "
            << m.capacity;
  v.require(exceed <= 2.0 * p_loss, "simulated exceedance above 2 p_loss");
}

// ---- 8: closure on the bundled session log ----
void criterion8(Verdict& v) {
  const auto t0 = std::chrono::steady_clock::now();
  const EventTrace source = read_trace_any(std::string(BUZZLOAD_DATA_DIR) + "/synthetic_sessions.csv", 10.0);
  const ClosureReport r = closure(source, 1.0, 200, 1);
  for (const auto& w : r.warnings) std::cerr << "estimate warning: " << w << "\n";
  std::cerr << "closure took " << seconds_since(t0) << " s; TV " << r.tv << ", decorrelation lag " << r.decorrelation_lag
            << ", max ACF diff " << r.acf_max_diff << ", E(i) of estimate " << r.mean_formula << ", sample mean "
            << r.sample_mean << ", refit mean " << r.refit_mean << "\n";
  const double mean_rel = r.mean_formula / r.sample_mean - 1.0;
  v.summary << "TV " << r.tv << ", ACF diff " << r.acf_max_diff << " up to lag " << r.decorrelation_lag
            << ", mean rel " << mean_rel;
  v.require(r.tv <= 0.1, "histogram TV above 0.1");
  v.require(r.decorrelated, "source never decorrelates within 200 lags");
  v.require(r.acf_max_diff <= 0.1, "autocorrelation gap above 0.1");
  v.require(std::isfinite(mean_rel) && std::fabs(mean_rel) <= 0.2, "E(i) more than 20% from the sample mean");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1-8>\n";
    return 2;
  }
  const int n = std::atoi(argv[1]);
  void (*checks[])(Verdict&) = {criterion1, criterion2, criterion3, criterion4,
                                criterion5, criterion6, criterion7, criterion8};
  if (n < 1 || n > 8) {
    std::cerr << "criterion must be 1-8\n";
    return 2;
  }
  Verdict v;
  try {
    checks[n - 1](v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.summary << "[error: " << e.what() << "]";
  }
  std::printf("%s criterion %d: %s\n", v.pass ? "PASS" : "FAIL", n, v.summary.str().c_str());
  return v.pass ? 0 : 1;
}

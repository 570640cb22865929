#include "buzzload/provisioning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "buzzload/errors.hpp"

namespace buzzload {

OverflowProbability overflow_probability(const SpectrumCurve& curve, double alpha_star) {
  if (!std::isfinite(curve.tau) || !(curve.tau > 0.0)) {
    throw ContractError("overflow probability needs a finite time scale");
  }
  const auto pts = curve.finite_points();
  OverflowProbability out;
  if (pts.empty() || alpha_star > pts.back().alpha) {
    out.beyond_support = true;
    return out;
  }
  std::vector<std::pair<double, double>> nodes;  // (alpha, f)
  if (alpha_star >= pts.front().alpha) nodes.emplace_back(alpha_star, curve.f_at(alpha_star));
  for (const auto& p : pts) {
    if (p.alpha > alpha_star) nodes.emplace_back(p.alpha, p.f);
  }
  double acc = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double h = nodes[k].first - nodes[k - 1].first;
    acc += 0.5 * h * (std::exp(curve.tau * nodes[k].second) + std::exp(curve.tau * nodes[k - 1].second));
  }
  out.probability = acc;
  return out;
}

ScaleChoice reconfiguration_scale(const std::vector<SpectrumCurve>& family, double alpha_star,
                                  double sigma_star) {
  if (family.empty()) throw ContractError("no candidate time scale");
  if (!(sigma_star > 0.0 && sigma_star <= 1.0)) throw ContractError("sigma_star must lie in (0, 1]");
  std::vector<const SpectrumCurve*> sorted;
  for (const auto& c : family) sorted.push_back(&c);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SpectrumCurve* a, const SpectrumCurve* b) { return a->tau < b->tau; });
  ScaleChoice out;
  out.tau_star = sorted.front()->tau;
  for (const SpectrumCurve* c : sorted) {
    const double p = overflow_probability(*c, alpha_star).probability;
    if (!out.probabilities.empty() && p > out.probabilities.back().second) out.monotone = false;
    out.probabilities.emplace_back(c->tau, p);
    if (p >= sigma_star) {
      out.tau_star = c->tau;
      out.found = true;
    }
  }
  return out;
}

double loss_integral(const SpectrumCurve& spectrum, double capacity, double buffer_q,
                     std::size_t nodes) {
  if (nodes == 0) throw ContractError("quadrature needs at least one node");
  if (!(buffer_q >= 0.0)) throw ContractError("buffer size must be >= 0");
  const auto [lo, hi] = spectrum.support();
  (void)lo;
  if (!(capacity < hi)) return 0.0;
  const double h = (hi - capacity) / static_cast<double>(nodes);
  // The integrand vanishes as alpha -> C+, so the first node is one step above C.
  auto integrand = [&](double alpha) {
    const double f = spectrum.f_at(alpha);
    if (!(f < 0.0)) return f == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    if (!std::isfinite(f)) return 0.0;
    return (-1.0 / f) * std::exp(buffer_q * f / (alpha - capacity));
  };
  double acc = 0.0;
  double prev = 0.0;
  for (std::size_t k = 1; k <= nodes; ++k) {
    const double v = integrand(capacity + h * static_cast<double>(k));
    acc += 0.5 * h * (prev + v);
    prev = v;
  }
  return acc;
}

Margin safety_margin(const SpectrumCurve& spectrum, double alpha_as, double buffer_q, double p_loss) {
  if (!(p_loss > 0.0 && p_loss < 1.0)) throw ContractError("p_loss must lie in (0, 1)");
  if (!(alpha_as > 0.0)) throw ContractError("alpha_as must be > 0");
  const auto [lo_support, hi_support] = spectrum.support();
  (void)lo_support;
  if (!(hi_support > alpha_as)) throw ContractError("spectrum support must extend beyond alpha_as");
  const double tol = 1e-6 * alpha_as;

  Margin out;
  double lo = alpha_as + tol;
  double hi = hi_support;
  const double loss_lo = loss_integral(spectrum, lo, buffer_q);
  if (loss_lo <= p_loss) {
    out.capacity = lo;
    out.residual = loss_lo;
  } else {
    double loss_hi = loss_integral(spectrum, hi, buffer_q);
    if (loss_hi > p_loss) {
      out.unreachable = true;
      out.capacity = hi;
      out.residual = loss_hi;
    } else {
      while (hi - lo > tol && out.iterations < 200) {
        const double mid = 0.5 * (lo + hi);
        const double v = loss_integral(spectrum, mid, buffer_q);
        if (v <= p_loss) {
          hi = mid;
          loss_hi = v;
        } else {
          lo = mid;
        }
        ++out.iterations;
      }
      out.capacity = hi;
      out.residual = loss_hi;
    }
  }
  out.c0 = out.capacity - alpha_as;
  return out;
}

ServerCount max_servers(double capacity, double alpha_as, double c0) {
  if (!(alpha_as > 0.0)) throw ContractError("alpha_as must be > 0");
  ServerCount out;
  if (capacity < c0) {
    out.capacity_short = true;
    return out;
  }
  const double ratio = (capacity - c0) / alpha_as;
  out.k = static_cast<long long>(std::floor(ratio * (1.0 + 1e-12)));
  return out;
}

double buffer_overflow_fraction(const Observation& obs, double capacity, double buffer_q) {
  if (!(buffer_q >= 0.0)) throw ContractError("buffer size must be >= 0");
  if (!(obs.span() > 0.0)) throw InsufficientDataError("observation has zero length");
  double content = 0.0, full = 0.0;
  auto advance = [&](int level, double d) {
    const double net = level - capacity;
    if (net > 0.0) {
      const double to_fill = (buffer_q - content) / net;
      if (d <= to_fill) {
        content += net * d;
      } else {
        full += d - to_fill;
        content = buffer_q;
      }
    } else if (net < 0.0) {
      content = std::max(0.0, content + net * d);
    }
  };
  double t = obs.t_start();
  int level = obs.initial_level();
  for (std::size_t k = 0; k < obs.size(); ++k) {
    advance(level, obs.times()[k] - t);
    t = obs.times()[k];
    level = obs.level_after(k);
  }
  advance(level, obs.t_end() - t);
  return full / obs.span();
}

}  // namespace buzzload

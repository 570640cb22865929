#ifndef BUZZLOAD_PROVISIONING_HPP
#define BUZZLOAD_PROVISIONING_HPP

#include <cstddef>
#include <utility>
#include <vector>

#include "buzzload/estimation.hpp"
#include "buzzload/spectrum.hpp"

namespace buzzload {

struct OverflowProbability {
  double probability = 0.0;
  bool beyond_support = false;  // alpha_star lies past the last finite point
};

// Trapezoidal integral of exp(tau f(alpha)) over [alpha_star, end of support],
// tau taken from the curve (must be finite).
OverflowProbability overflow_probability(const SpectrumCurve& curve, double alpha_star);

struct ScaleChoice {
  double tau_star = 0.0;
  bool found = false;     // false: no candidate reached sigma_star, tau_star is the smallest
  bool monotone = true;   // overflow probability non-increasing in tau over the candidates
  std::vector<std::pair<double, double>> probabilities;  // (tau, probability), ascending tau
};

// Largest candidate scale whose overflow probability is still >= sigma_star.
ScaleChoice reconfiguration_scale(const std::vector<SpectrumCurve>& family, double alpha_star,
                                  double sigma_star);

// loss(C) = integral over (C, end of support] of (-1/f) exp(Q f / (alpha - C)),
// on `nodes` points C + k h, k = 1..nodes.
double loss_integral(const SpectrumCurve& spectrum, double capacity, double buffer_q,
                     std::size_t nodes = 2000);

struct Margin {
  double c0 = 0.0;        // capacity margin above alpha_as
  double capacity = 0.0;  // alpha_as + c0
  double residual = 0.0;  // loss at the returned capacity
  std::size_t iterations = 0;
  bool unreachable = false;  // p_loss not met inside the support; c0 is the edge margin
};

// Smallest capacity C > alpha_as with loss(C) <= p_loss, by bisection to
// 1e-6 * alpha_as. When the smallest margin already satisfies p_loss it is returned.
Margin safety_margin(const SpectrumCurve& spectrum, double alpha_as, double buffer_q, double p_loss);

struct ServerCount {
  long long k = 0;
  bool capacity_short = false;  // capacity below c0
};

// Largest K with K * alpha_as + c0 <= capacity.
ServerCount max_servers(double capacity, double alpha_as, double c0);

// Fluid buffer of size buffer_q fed by I(t) and drained at `capacity`: the
// fraction of time the buffer is full while the input exceeds the capacity.
double buffer_overflow_fraction(const Observation& obs, double capacity, double buffer_q);

}  // namespace buzzload

#endif  // BUZZLOAD_PROVISIONING_HPP

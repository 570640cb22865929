#ifndef BUZZLOAD_MODEL_HPP
#define BUZZLOAD_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace buzzload {

// Hidden dissemination regime. The numeric values are the ones written to
// CSV files (regime column is 1 or 2).
enum class Regime : std::uint8_t { BuzzFree = 1, Buzz = 2 };

// The seven rates of the epidemic workload model plus the population caps.
// All rates are expressed per unit of the trace's own time unit.
struct ModelParams {
  double beta1 = 0.0;  // dissemination rate, buzz-free regime
  double beta2 = 0.0;  // dissemination rate, buzz regime
  double gamma = 0.0;  // watch-end rate
  double mu = 0.0;     // memory-end rate
  double l = 0.0;      // spontaneous arrival rate
  double a1 = 0.0;     // buzz onset rate
  double a2 = 0.0;     // buzz offset rate
  int i_max = 1;
  int r_max = 1;

  double beta(Regime regime) const { return regime == Regime::Buzz ? beta2 : beta1; }
  double switch_rate(Regime regime) const { return regime == Regime::Buzz ? a2 : a1; }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Throws ContractError when a rate is not strictly positive, beta2 < beta1,
// or a cap is below 1. a1 == 0 is accepted so that a regime can be frozen.
void validate(const ModelParams& params);

struct SystemState {
  std::int32_t i = 0;
  std::int32_t r = 0;
  Regime regime = Regime::BuzzFree;

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

bool in_bounds(const SystemState& state, const ModelParams& params);

// Flat index over {0..i_max} x {0..r_max} x {BuzzFree, Buzz}, i fastest.
std::size_t state_count(const ModelParams& params);
std::size_t state_index(const SystemState& state, const ModelParams& params);
SystemState state_at(std::size_t index, const ModelParams& params);

struct TransitionRates {
  double arrival = 0.0;
  double watch_end = 0.0;
  double memory_end = 0.0;
  double regime_switch = 0.0;

  double total() const { return arrival + watch_end + memory_end + regime_switch; }
};

// Competing rates out of `state`. Arrivals are lost at i == i_max. A watch-end
// at r == r_max still fires; the viewer then leaves without joining R (see
// apply_watch_end), so its rate is never clipped.
TransitionRates transition_rates(const SystemState& state, const ModelParams& params);

SystemState apply_arrival(SystemState state);
SystemState apply_watch_end(SystemState state, const ModelParams& params);
SystemState apply_memory_end(SystemState state);
SystemState apply_regime_switch(SystemState state);

// Time-averaged dissemination rate (beta1 * a2 + beta2 * a1) / (a1 + a2).
double mean_beta(const ModelParams& params);

// 1/mean_beta > 1/mu + 1/gamma.
bool is_stable(const ModelParams& params);

// Flow-balance mean of the current-viewer count, mu*l / (mu*gamma - mu*b - gamma*b)
// with b = mean_beta. Throws InstabilityError when the denominator is <= 0.
double mean_workload(const ModelParams& params);

// Companion mean of the past-viewer count, gamma/mu * mean_workload.
double mean_past_viewers(const ModelParams& params);

nlohmann::json to_json(const ModelParams& params);
ModelParams params_from_json(const nlohmann::json& j);
ModelParams load_params(const std::string& path);
void save_params(const ModelParams& params, const std::string& path);

}  // namespace buzzload

#endif  // BUZZLOAD_MODEL_HPP

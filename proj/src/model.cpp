#include "buzzload/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "buzzload/errors.hpp"

namespace buzzload {

void validate(const ModelParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ContractError(std::string("parameter ") + name + " must be finite and > 0");
    }
  };
  positive(p.beta1, "beta1");
  positive(p.beta2, "beta2");
  positive(p.gamma, "gamma");
  positive(p.mu, "mu");
  positive(p.l, "l");
  positive(p.a2, "a2");
  if (!(p.a1 >= 0.0) || !std::isfinite(p.a1)) {
    throw ContractError("parameter a1 must be finite and >= 0");
  }
  if (p.beta2 < p.beta1) {
    throw ContractError("beta2 must be >= beta1");
  }
  if (p.i_max < 1 || p.r_max < 1) {
    throw ContractError("i_max and r_max must be >= 1");
  }
}

bool in_bounds(const SystemState& s, const ModelParams& p) {
  return s.i >= 0 && s.i <= p.i_max && s.r >= 0 && s.r <= p.r_max &&
         (s.regime == Regime::BuzzFree || s.regime == Regime::Buzz);
}

std::size_t state_count(const ModelParams& p) {
  return static_cast<std::size_t>(p.i_max + 1) * static_cast<std::size_t>(p.r_max + 1) * 2;
}

std::size_t state_index(const SystemState& s, const ModelParams& p) {
  const std::size_t plane = static_cast<std::size_t>(p.i_max + 1) * (p.r_max + 1);
  const std::size_t layer = s.regime == Regime::Buzz ? 1 : 0;
  return layer * plane + static_cast<std::size_t>(s.r) * (p.i_max + 1) + s.i;
}

SystemState state_at(std::size_t index, const ModelParams& p) {
  const std::size_t row = static_cast<std::size_t>(p.i_max + 1);
  const std::size_t plane = row * (p.r_max + 1);
  SystemState s;
  s.regime = index >= plane ? Regime::Buzz : Regime::BuzzFree;
  index %= plane;
  s.r = static_cast<std::int32_t>(index / row);
  s.i = static_cast<std::int32_t>(index % row);
  return s;
}

TransitionRates transition_rates(const SystemState& s, const ModelParams& p) {
  if (!in_bounds(s, p)) {
    std::ostringstream os;
    os << "state (i=" << s.i << ", r=" << s.r << ") outside [0," << p.i_max << "]x[0,"
       << p.r_max << "]";
    throw ContractError(os.str());
  }
  TransitionRates rates;
  if (s.i < p.i_max) {
    rates.arrival = p.l + static_cast<double>(s.i + s.r) * p.beta(s.regime);
  }
  rates.watch_end = p.gamma * s.i;
  rates.memory_end = p.mu * s.r;
  rates.regime_switch = p.switch_rate(s.regime);
  return rates;
}

SystemState apply_arrival(SystemState s) {
  ++s.i;
  return s;
}

SystemState apply_watch_end(SystemState s, const ModelParams& p) {
  --s.i;
  if (s.r < p.r_max) ++s.r;
  return s;
}

SystemState apply_memory_end(SystemState s) {
  --s.r;
  return s;
}

SystemState apply_regime_switch(SystemState s) {
  s.regime = s.regime == Regime::Buzz ? Regime::BuzzFree : Regime::Buzz;
  return s;
}

double mean_beta(const ModelParams& p) {
  const double a = p.a1 + p.a2;
  if (!(a > 0.0)) throw ContractError("mean_beta requires a1 + a2 > 0");
  return (p.beta1 * p.a2 + p.beta2 * p.a1) / a;
}

bool is_stable(const ModelParams& p) {
  const double b = mean_beta(p);
  return 1.0 / b > 1.0 / p.mu + 1.0 / p.gamma;
}

double mean_workload(const ModelParams& p) {
  const double b = mean_beta(p);
  const double denominator = p.mu * p.gamma - p.mu * b - p.gamma * b;
  if (!(denominator > 0.0)) throw InstabilityError(denominator);
  return p.mu * p.l / denominator;
}

double mean_past_viewers(const ModelParams& p) {
  return p.gamma / p.mu * mean_workload(p);
}

nlohmann::json to_json(const ModelParams& p) {
  return nlohmann::json{{"beta1", p.beta1}, {"beta2", p.beta2}, {"gamma", p.gamma},
                        {"mu", p.mu},       {"l", p.l},         {"a1", p.a1},
                        {"a2", p.a2},       {"i_max", p.i_max}, {"r_max", p.r_max}};
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  try {
    p.beta1 = j.at("beta1").get<double>();
    p.beta2 = j.at("beta2").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.mu = j.at("mu").get<double>();
    p.l = j.at("l").get<double>();
    p.a1 = j.at("a1").get<double>();
    p.a2 = j.at("a2").get<double>();
    p.i_max = j.at("i_max").get<int>();
    p.r_max = j.at("r_max").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model parameters: ") + e.what(), 0);
  }
  validate(p);
  return p;
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open parameter file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  return params_from_json(j);
}

void save_params(const ModelParams& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_json(p).dump(2) << '\n';
}

}  // namespace buzzload

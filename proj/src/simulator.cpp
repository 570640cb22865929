#include "buzzload/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "buzzload/errors.hpp"
#include "buzzload/random.hpp"

namespace buzzload {

char kind_code(EventKind kind) {
  switch (kind) {
    case EventKind::Arrival: return 'A';
    case EventKind::WatchEnd: return 'W';
    case EventKind::MemoryEnd: return 'M';
    case EventKind::RegimeSwitch: return 'S';
  }
  return '?';
}

EventKind kind_from_code(char code) {
  switch (code) {
    case 'A': return EventKind::Arrival;
    case 'W': return EventKind::WatchEnd;
    case 'M': return EventKind::MemoryEnd;
    case 'S': return EventKind::RegimeSwitch;
    default: throw ContractError(std::string("unknown event kind '") + code + "'");
  }
}

namespace {

SystemState apply(EventKind kind, const SystemState& s, const ModelParams& p) {
  switch (kind) {
    case EventKind::Arrival: return apply_arrival(s);
    case EventKind::WatchEnd: return apply_watch_end(s, p);
    case EventKind::MemoryEnd: return apply_memory_end(s);
    case EventKind::RegimeSwitch: return apply_regime_switch(s);
  }
  return s;
}

class Stepper {
public:
  Stepper(const ModelParams& params, const SystemState& initial, std::uint64_t seed)
      : params_(params), state_(initial), rng_(seed) {}

  // Advances one event; returns the kind of the event that fired.
  EventKind step() {
    const TransitionRates rates = transition_rates(state_, params_);
    const double total = rates.total();
    if (!(total > 0.0)) {
      throw Error("internal invariant violated: zero total transition rate");
    }
    t_ += rng_.exponential(total);
    double u = rng_.uniform() * total;
    EventKind kind;
    if ((u -= rates.arrival) < 0.0) {
      kind = EventKind::Arrival;
    } else if ((u -= rates.watch_end) < 0.0) {
      kind = EventKind::WatchEnd;
    } else if ((u -= rates.memory_end) < 0.0) {
      kind = EventKind::MemoryEnd;
    } else {
      kind = EventKind::RegimeSwitch;
    }
    // Guard against rounding picking a zero-rate event at the tail.
    if (kind == EventKind::RegimeSwitch && rates.regime_switch == 0.0) {
      kind = rates.memory_end > 0.0 ? EventKind::MemoryEnd
             : rates.watch_end > 0.0 ? EventKind::WatchEnd
                                     : EventKind::Arrival;
    }
    state_ = apply(kind, state_, params_);
    return kind;
  }

  double time() const { return t_; }
  void reset_time() { t_ = 0.0; }
  const SystemState& state() const { return state_; }

private:
  ModelParams params_;
  SystemState state_;
  Rng rng_;
  double t_ = 0.0;
};

}  // namespace

EventTrace simulate(const ModelParams& params, const SystemState& initial, const Horizon& horizon,
                    std::uint64_t seed, const SimulationOptions& options) {
  validate(params);
  if (!in_bounds(initial, params)) throw ContractError("initial state out of bounds");

  Stepper stepper(params, initial, seed);
  for (std::uint64_t k = 0; k < options.burn_in_events; ++k) stepper.step();
  stepper.reset_time();

  EventTrace trace;
  trace.params = params;
  trace.seed = seed;
  trace.initial = stepper.state();
  trace.t_start = 0.0;

  if (horizon.mode == Horizon::Mode::Events) {
    trace.events.reserve(horizon.events);
    for (std::uint64_t k = 0; k < horizon.events; ++k) {
      const EventKind kind = stepper.step();
      trace.events.push_back({stepper.time(), kind, stepper.state()});
    }
    trace.t_end = trace.events.empty() ? 0.0 : trace.events.back().t;
  } else {
    if (!(horizon.t_end > 0.0)) throw ContractError("time horizon must be > 0");
    // The event that overshoots t_end is drawn and dropped.
    for (;;) {
      const EventKind kind = stepper.step();
      if (stepper.time() > horizon.t_end) break;
      trace.events.push_back({stepper.time(), kind, stepper.state()});
    }
    trace.t_end = horizon.t_end;
  }
  return trace;
}

EventTrace discard_warmup(const EventTrace& trace, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ContractError("warm-up fraction must be in [0, 1)");
  const auto cut = static_cast<std::size_t>(fraction * static_cast<double>(trace.events.size()));
  EventTrace out;
  out.params = trace.params;
  out.seed = trace.seed;
  out.t_end = trace.t_end;
  if (cut == 0) {
    out.initial = trace.initial;
    out.t_start = trace.t_start;
  } else {
    out.initial = trace.events[cut - 1].state_after;
    out.t_start = trace.events[cut - 1].t;
  }
  out.events.assign(trace.events.begin() + static_cast<std::ptrdiff_t>(cut), trace.events.end());
  return out;
}

bool replay_consistent(const EventTrace& trace) {
  SystemState s = trace.initial;
  double t = trace.t_start;
  if (!in_bounds(s, trace.params)) return false;
  for (const Event& e : trace.events) {
    if (!(e.t > t)) return false;
    const TransitionRates rates = transition_rates(s, trace.params);
    const double rate = e.kind == EventKind::Arrival     ? rates.arrival
                        : e.kind == EventKind::WatchEnd  ? rates.watch_end
                        : e.kind == EventKind::MemoryEnd ? rates.memory_end
                                                         : rates.regime_switch;
    if (!(rate > 0.0)) return false;
    s = apply(e.kind, s, trace.params);
    if (!(s == e.state_after) || !in_bounds(s, trace.params)) return false;
    t = e.t;
  }
  return true;
}

WorkloadSeries sample_series(const EventTrace& trace, double dt) {
  if (!(dt > 0.0)) throw ContractError("sampling step must be > 0");
  WorkloadSeries series;
  series.t0 = trace.t_start;
  series.dt = dt;
  if (trace.events.empty() && !(trace.span() > 0.0)) return series;
  const double span = std::max(0.0, trace.span());
  const auto n = static_cast<std::size_t>(std::floor(span / dt)) + 1;
  series.i.reserve(n);
  std::vector<double> r;
  std::vector<Regime> regime;
  r.reserve(n);
  regime.reserve(n);

  SystemState s = trace.initial;
  std::size_t next = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = trace.t_start + dt * static_cast<double>(k);
    while (next < trace.events.size() && trace.events[next].t <= t) {
      s = trace.events[next].state_after;
      ++next;
    }
    series.i.push_back(s.i);
    r.push_back(s.r);
    regime.push_back(s.regime);
  }
  series.r = std::move(r);
  series.regime = std::move(regime);
  return series;
}

double time_average_i(const EventTrace& trace) {
  const double span = trace.span();
  if (!(span > 0.0)) return static_cast<double>(trace.initial.i);
  double area = 0.0;
  double t = trace.t_start;
  int i = trace.initial.i;
  for (const Event& e : trace.events) {
    area += static_cast<double>(i) * (e.t - t);
    t = e.t;
    i = e.state_after.i;
  }
  area += static_cast<double>(i) * (trace.t_end - t);
  return area / span;
}

std::vector<double> state_occupancy(const EventTrace& trace) {
  std::vector<double> occ(state_count(trace.params), 0.0);
  SystemState s = trace.initial;
  double t = trace.t_start;
  for (const Event& e : trace.events) {
    occ[state_index(s, trace.params)] += e.t - t;
    t = e.t;
    s = e.state_after;
  }
  occ[state_index(s, trace.params)] += trace.t_end - t;
  const double span = trace.span();
  if (span > 0.0) {
    for (double& v : occ) v /= span;
  }
  return occ;
}

void write_trace_csv(const EventTrace& trace, std::ostream& out) {
  out << "t,kind,i,r,regime\n";
  out.precision(17);
  for (const Event& e : trace.events) {
    out << e.t << ',' << kind_code(e.kind) << ',' << e.state_after.i << ',' << e.state_after.r
        << ',' << static_cast<int>(e.state_after.regime) << '\n';
  }
}

void write_trace_csv(const EventTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_trace_csv(trace, out);
}

namespace {

SystemState state_before(const Event& e) {
  SystemState s = e.state_after;
  switch (e.kind) {
    case EventKind::Arrival: --s.i; break;
    case EventKind::WatchEnd:
      ++s.i;
      if (s.r > 0) --s.r;
      break;
    case EventKind::MemoryEnd: ++s.r; break;
    case EventKind::RegimeSwitch: s = apply_regime_switch(s); break;
  }
  return s;
}

}  // namespace

EventTrace read_trace_csv(std::istream& in) {
  EventTrace trace;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty event file", 1);
  ++lineno;
  if (line.rfind("t,kind", 0) != 0) throw ParseError("expected header t,kind,i,r,regime", lineno);
  int max_i = 1, max_r = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string t, kind, i, r, regime;
    if (!std::getline(ls, t, ',') || !std::getline(ls, kind, ',') || !std::getline(ls, i, ',') ||
        !std::getline(ls, r, ',') || !std::getline(ls, regime, ',') || kind.size() != 1) {
      throw ParseError("malformed event record", lineno);
    }
    Event e;
    try {
      e.t = std::stod(t);
      e.kind = kind_from_code(kind[0]);
      e.state_after.i = std::stoi(i);
      e.state_after.r = std::stoi(r);
      const int reg = std::stoi(regime);
      if (reg != 1 && reg != 2) throw ContractError("regime must be 1 or 2");
      e.state_after.regime = static_cast<Regime>(reg);
    } catch (const std::exception& ex) {
      throw ParseError(std::string("malformed event record: ") + ex.what(), lineno);
    }
    max_i = std::max(max_i, e.state_after.i + 1);
    max_r = std::max(max_r, e.state_after.r + 1);
    trace.events.push_back(e);
  }
  trace.params.i_max = max_i;
  trace.params.r_max = max_r;
  if (!trace.events.empty()) {
    trace.initial = state_before(trace.events.front());
    trace.t_start = std::min(0.0, trace.events.front().t);
    trace.t_end = trace.events.back().t;
  }
  return trace;
}

EventTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_trace_csv(in);
}

namespace {

constexpr char kMagic[4] = {'B', 'Z', 'L', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError("truncated binary trace", 0);
  return v;
}

}  // namespace

void write_trace_binary(const EventTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(kMagic, 4);
  put(out, kVersion);
  const ModelParams& p = trace.params;
  for (double v : {p.beta1, p.beta2, p.gamma, p.mu, p.l, p.a1, p.a2}) put(out, v);
  put<std::int32_t>(out, p.i_max);
  put<std::int32_t>(out, p.r_max);
  put(out, trace.seed);
  put(out, trace.initial.i);
  put(out, trace.initial.r);
  put(out, static_cast<std::uint8_t>(trace.initial.regime));
  put(out, trace.t_start);
  put(out, trace.t_end);
  put<std::uint64_t>(out, trace.events.size());
  for (const Event& e : trace.events) {
    put(out, e.t);
    put(out, static_cast<std::uint8_t>(e.kind));
    put(out, e.state_after.i);
    put(out, e.state_after.r);
    put(out, static_cast<std::uint8_t>(e.state_after.regime));
  }
}

EventTrace read_trace_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("not a binary trace file", 0);
  if (get<std::uint32_t>(in) != kVersion) throw ParseError("unsupported binary trace version", 0);
  EventTrace trace;
  ModelParams& p = trace.params;
  for (double* v : {&p.beta1, &p.beta2, &p.gamma, &p.mu, &p.l, &p.a1, &p.a2}) *v = get<double>(in);
  p.i_max = get<std::int32_t>(in);
  p.r_max = get<std::int32_t>(in);
  trace.seed = get<std::uint64_t>(in);
  trace.initial.i = get<std::int32_t>(in);
  trace.initial.r = get<std::int32_t>(in);
  trace.initial.regime = static_cast<Regime>(get<std::uint8_t>(in));
  trace.t_start = get<double>(in);
  trace.t_end = get<double>(in);
  const auto n = get<std::uint64_t>(in);
  trace.events.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    Event e;
    e.t = get<double>(in);
    e.kind = static_cast<EventKind>(get<std::uint8_t>(in));
    e.state_after.i = get<std::int32_t>(in);
    e.state_after.r = get<std::int32_t>(in);
    e.state_after.regime = static_cast<Regime>(get<std::uint8_t>(in));
    trace.events.push_back(e);
  }
  return trace;
}

}  // namespace buzzload

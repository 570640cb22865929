#ifndef BUZZLOAD_SIMULATOR_HPP
#define BUZZLOAD_SIMULATOR_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "buzzload/model.hpp"
#include "buzzload/series.hpp"

namespace buzzload {

enum class EventKind : std::uint8_t { Arrival, WatchEnd, MemoryEnd, RegimeSwitch };

char kind_code(EventKind kind);  // A, W, M, S
EventKind kind_from_code(char code);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::Arrival;
  SystemState state_after;
};

struct EventTrace {
  ModelParams params;
  std::uint64_t seed = 0;
  SystemState initial;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<Event> events;

  double span() const { return t_end - t_start; }
};

// Simulation stops after a fixed number of recorded events or at a time limit.
struct Horizon {
  enum class Mode { Events, Time };
  Mode mode = Mode::Events;
  std::uint64_t events = 0;
  double t_end = 0.0;

  static Horizon event_count(std::uint64_t n) { return {Mode::Events, n, 0.0}; }
  static Horizon until(double t) { return {Mode::Time, 0, t}; }
};

struct SimulationOptions {
  // Events simulated from `initial` and thrown away before recording starts.
  // The recorded trace then starts at time 0 from the post-burn-in state.
  std::uint64_t burn_in_events = 0;
};

// Exact competing-exponentials simulation of the hidden-Markov epidemic chain.
// The output depends only on (params, initial, horizon, seed, options).
EventTrace simulate(const ModelParams& params, const SystemState& initial, const Horizon& horizon,
                    std::uint64_t seed, const SimulationOptions& options = {});

// Drops the first `fraction` of the events; the returned trace starts from the
// state reached at the cut.
EventTrace discard_warmup(const EventTrace& trace, double fraction);

// Replays the events from `initial` and reports whether every state_after,
// timestamp order and bound matches.
bool replay_consistent(const EventTrace& trace);

// Right-continuous sampling on t_start + k*dt, k = 0 .. floor(span/dt).
WorkloadSeries sample_series(const EventTrace& trace, double dt);

// Exact (1/T) * integral of I over the trace.
double time_average_i(const EventTrace& trace);

// Time spent in each (i, r, regime) state, normalised to a probability vector over
// the flat index used by the rate matrix.
std::vector<double> state_occupancy(const EventTrace& trace);

// CSV `t,kind,i,r,regime`. The initial state is recovered from the first event.
void write_trace_csv(const EventTrace& trace, std::ostream& out);
void write_trace_csv(const EventTrace& trace, const std::string& path);
EventTrace read_trace_csv(std::istream& in);
EventTrace read_trace_csv(const std::string& path);

// Compact little-endian binary form holding everything, including params and seed.
void write_trace_binary(const EventTrace& trace, const std::string& path);
EventTrace read_trace_binary(const std::string& path);

}  // namespace buzzload

#endif  // BUZZLOAD_SIMULATOR_HPP

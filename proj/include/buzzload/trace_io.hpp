#ifndef BUZZLOAD_TRACE_IO_HPP
#define BUZZLOAD_TRACE_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "buzzload/series.hpp"
#include "buzzload/simulator.hpp"

namespace buzzload {

struct SessionRecord {
  double start = 0.0;
  double duration = 0.0;
};

// CSV `start,duration`. Malformed rows raise ParseError with the line number.
std::vector<SessionRecord> read_sessions_csv(std::istream& in);
std::vector<SessionRecord> read_sessions_csv(const std::string& path);
void write_sessions_csv(const std::vector<SessionRecord>& records, std::ostream& out);
void write_sessions_csv(const std::vector<SessionRecord>& records, const std::string& path);

// Converts session logs to an Arrival/WatchEnd event trace. Start times are divided
// by `scale`; durations are kept, so scale > 1 raises the concurrent load. Events
// at equal timestamps are ordered departures first. The trace starts at min(0,
// first start) with no viewer active and ends at the last departure.
EventTrace ingest_sessions(const std::vector<SessionRecord>& records, double scale);

// Reads either a session log or an event trace, chosen by the header line.
EventTrace read_trace_any(const std::string& path, double scale);

// Session log consistent with a simulated trace: each watch-end closes a uniformly
// chosen active session. Viewers active at the start get start = t_start, those
// still active at the end are closed at t_end.
std::vector<SessionRecord> sessions_from_trace(const EventTrace& trace, std::uint64_t seed);

// Splits at `cut`; the first part holds every sample with time < cut.
std::pair<WorkloadSeries, WorkloadSeries> split(const WorkloadSeries& series, double cut);

// Inverse of split; b must start where a ends.
WorkloadSeries join(const WorkloadSeries& a, const WorkloadSeries& b);

// Biased sample autocorrelation of I for lags 0..max_lag.
std::vector<double> autocorrelation(const WorkloadSeries& series, std::size_t max_lag);

// Normalised occupancy frequencies of I over 0..max(I).
std::vector<double> histogram(const WorkloadSeries& series);
// Exact time-weighted version computed from the event trace.
std::vector<double> histogram(const EventTrace& trace);

// 0.5 * sum |p - q|, padding the shorter vector with zeros.
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace buzzload

#endif  // BUZZLOAD_TRACE_IO_HPP

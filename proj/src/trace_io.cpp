#include "buzzload/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "buzzload/errors.hpp"
#include "buzzload/random.hpp"

namespace buzzload {

std::vector<SessionRecord> read_sessions_csv(std::istream& in) {
  std::vector<SessionRecord> records;
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty session file", lineno);
  if (line.rfind("start,duration", 0) != 0) throw ParseError("expected header start,duration", lineno);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, extra;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || std::getline(ls, extra, ',')) {
      throw ParseError("expected two fields start,duration", lineno);
    }
    SessionRecord rec;
    std::size_t used_a = 0, used_b = 0;
    try {
      rec.start = std::stod(a, &used_a);
      rec.duration = std::stod(b, &used_b);
    } catch (const std::exception&) {
      throw ParseError("non-numeric session record", lineno);
    }
    if (used_a != a.size() || (used_b != b.size() && b.substr(used_b) != "\r")) {
      throw ParseError("trailing characters in session record", lineno);
    }
    if (!std::isfinite(rec.start) || !(rec.duration > 0.0) || !std::isfinite(rec.duration)) {
      throw ParseError("session duration must be finite and > 0", lineno);
    }
    records.push_back(rec);
  }
  return records;
}

std::vector<SessionRecord> read_sessions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_sessions_csv(in);
}

void write_sessions_csv(const std::vector<SessionRecord>& records, std::ostream& out) {
  out << "start,duration\n";
  out.precision(12);
  for (const auto& r : records) out << r.start << ',' << r.duration << '\n';
}

void write_sessions_csv(const std::vector<SessionRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_sessions_csv(records, out);
}

EventTrace ingest_sessions(const std::vector<SessionRecord>& records, double scale) {
  if (records.empty()) throw ContractError("no session records");
  if (!(scale > 0.0)) throw ContractError("scale must be > 0");

  struct Edge {
    double t;
    int delta;
  };
  std::vector<Edge> edges;
  edges.reserve(records.size() * 2);
  for (const auto& r : records) {
    if (!(r.duration > 0.0)) throw ContractError("session duration must be > 0");
    const double start = r.start / scale;
    edges.push_back({start, +1});
    edges.push_back({start + r.duration, -1});
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.t < b.t || (a.t == b.t && a.delta < b.delta);
  });

  EventTrace trace;
  trace.t_start = std::min(0.0, edges.front().t);
  trace.t_end = edges.back().t;
  trace.events.reserve(edges.size());
  SystemState s;
  int peak = 0;
  for (const Edge& e : edges) {
    s.i += e.delta;
    peak = std::max(peak, s.i);
    trace.events.push_back({e.t, e.delta > 0 ? EventKind::Arrival : EventKind::WatchEnd, s});
  }
  trace.params.i_max = std::max(1, peak);
  trace.params.r_max = 1;
  return trace;
}

EventTrace read_trace_any(const std::string& path, double scale) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string header;
  std::getline(in, header);
  in.seekg(0);
  if (header.rfind("start,duration", 0) == 0) return ingest_sessions(read_sessions_csv(in), scale);
  if (header.rfind("t,kind", 0) == 0) {
    EventTrace trace = read_trace_csv(in);
    if (scale != 1.0) {
      trace.t_start /= scale;
      trace.t_end /= scale;
      for (Event& e : trace.events) e.t /= scale;
    }
    return trace;
  }
  throw ParseError("unrecognised header '" + header + "'", 1);
}

std::vector<SessionRecord> sessions_from_trace(const EventTrace& trace, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> active(static_cast<std::size_t>(trace.initial.i), trace.t_start);
  std::vector<SessionRecord> out;
  for (const Event& e : trace.events) {
    if (e.kind == EventKind::Arrival) {
      active.push_back(e.t);
    } else if (e.kind == EventKind::WatchEnd) {
      if (active.empty()) throw ContractError("watch-end with no active session");
      const std::size_t k = rng.below(active.size());
      out.push_back({active[k], e.t - active[k]});
      active[k] = active.back();
      active.pop_back();
    }
  }
  for (double start : active) {
    if (trace.t_end > start) out.push_back({start, trace.t_end - start});
  }
  std::sort(out.begin(), out.end(),
            [](const SessionRecord& a, const SessionRecord& b) { return a.start < b.start; });
  return out;
}

std::pair<WorkloadSeries, WorkloadSeries> split(const WorkloadSeries& s, double cut) {
  if (!(cut > s.t0 && cut < s.t_end())) throw RangeError("cut outside the series time range");
  auto k = static_cast<std::size_t>(std::ceil((cut - s.t0) / s.dt - 1e-9));
  k = std::min(k, s.size());
  WorkloadSeries a, b;
  a.t0 = s.t0;
  a.dt = b.dt = s.dt;
  b.t0 = s.time_at(k);
  a.i.assign(s.i.begin(), s.i.begin() + static_cast<std::ptrdiff_t>(k));
  b.i.assign(s.i.begin() + static_cast<std::ptrdiff_t>(k), s.i.end());
  if (s.r) {
    a.r.emplace(s.r->begin(), s.r->begin() + static_cast<std::ptrdiff_t>(k));
    b.r.emplace(s.r->begin() + static_cast<std::ptrdiff_t>(k), s.r->end());
  }
  if (s.regime) {
    a.regime.emplace(s.regime->begin(), s.regime->begin() + static_cast<std::ptrdiff_t>(k));
    b.regime.emplace(s.regime->begin() + static_cast<std::ptrdiff_t>(k), s.regime->end());
  }
  return {std::move(a), std::move(b)};
}

WorkloadSeries join(const WorkloadSeries& a, const WorkloadSeries& b) {
  if (a.dt != b.dt) throw ContractError("cannot join series with different steps");
  if (std::abs(a.t_end() - b.t0) > 1e-9 * std::max(1.0, std::abs(b.t0))) {
    throw ContractError("series are not contiguous");
  }
  if (a.r.has_value() != b.r.has_value() || a.regime.has_value() != b.regime.has_value()) {
    throw ContractError("series channels differ");
  }
  WorkloadSeries out = a;
  out.i.insert(out.i.end(), b.i.begin(), b.i.end());
  if (out.r) out.r->insert(out.r->end(), b.r->begin(), b.r->end());
  if (out.regime) out.regime->insert(out.regime->end(), b.regime->begin(), b.regime->end());
  return out;
}

std::vector<double> autocorrelation(const WorkloadSeries& s, std::size_t max_lag) {
  const std::size_t n = s.size();
  if (n <= max_lag) throw ContractError("series shorter than max_lag + 1");
  const double m = mean_i(s);
  std::vector<double> c(n);
  for (std::size_t k = 0; k < n; ++k) c[k] = static_cast<double>(s.i[k]) - m;
  const double c0 = std::inner_product(c.begin(), c.end(), c.begin(), 0.0);
  if (!(c0 > 0.0)) throw InsufficientDataError("autocorrelation undefined for a constant series");
  std::vector<double> rho(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) acc += c[k] * c[k + lag];
    rho[lag] = acc / c0;
  }
  return rho;
}

std::vector<double> histogram(const WorkloadSeries& s) {
  if (s.empty()) throw ContractError("histogram of an empty series");
  const int top = *std::max_element(s.i.begin(), s.i.end());
  std::vector<double> h(static_cast<std::size_t>(top) + 1, 0.0);
  for (int v : s.i) h[static_cast<std::size_t>(v)] += 1.0;
  for (double& v : h) v /= static_cast<double>(s.size());
  return h;
}

std::vector<double> histogram(const EventTrace& trace) {
  int top = trace.initial.i;
  for (const Event& e : trace.events) top = std::max(top, e.state_after.i);
  std::vector<double> h(static_cast<std::size_t>(top) + 1, 0.0);
  double t = trace.t_start;
  int i = trace.initial.i;
  for (const Event& e : trace.events) {
    h[static_cast<std::size_t>(i)] += e.t - t;
    t = e.t;
    i = e.state_after.i;
  }
  h[static_cast<std::size_t>(i)] += trace.t_end - t;
  const double span = trace.span();
  if (!(span > 0.0)) {
    std::fill(h.begin(), h.end(), 0.0);
    h[static_cast<std::size_t>(trace.initial.i)] = 1.0;
    return h;
  }
  for (double& v : h) v /= span;
  return h;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  const std::size_t n = std::max(p.size(), q.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = k < p.size() ? p[k] : 0.0;
    const double b = k < q.size() ? q[k] : 0.0;
    acc += std::abs(a - b);
  }
  return 0.5 * acc;
}

}  // namespace buzzload

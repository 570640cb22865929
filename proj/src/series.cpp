#include "buzzload/series.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "buzzload/errors.hpp"

namespace buzzload {

void check_series(const WorkloadSeries& s) {
  if (!(s.dt > 0.0)) throw ContractError("series step must be > 0");
  for (int v : s.i) {
    if (v < 0) throw ContractError("series counts must be >= 0");
  }
  if (s.r && s.r->size() != s.i.size()) throw ContractError("r channel length mismatch");
  if (s.regime && s.regime->size() != s.i.size()) throw ContractError("regime channel length mismatch");
}

double mean_i(const WorkloadSeries& s) {
  if (s.empty()) return 0.0;
  const double sum = std::accumulate(s.i.begin(), s.i.end(), 0.0);
  return sum / static_cast<double>(s.size());
}

void write_series_csv(const WorkloadSeries& s, std::ostream& out) {
  out << "t,i";
  if (s.r) out << ",r_hat";
  if (s.regime) out << ",regime_hat";
  out << '\n';
  out.precision(15);
  for (std::size_t k = 0; k < s.size(); ++k) {
    out << s.time_at(k) << ',' << s.i[k];
    if (s.r) out << ',' << (*s.r)[k];
    if (s.regime) out << ',' << static_cast<int>((*s.regime)[k]);
    out << '\n';
  }
}

void write_series_csv(const WorkloadSeries& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_series_csv(s, out);
}

WorkloadSeries read_series_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty series file", lineno);
  if (line.rfind("t,i", 0) != 0) throw ParseError("expected header t,i[,r_hat][,regime_hat]", lineno);
  const bool has_r = line.find("r_hat") != std::string::npos;
  const bool has_regime = line.find("regime_hat") != std::string::npos;

  WorkloadSeries s;
  std::vector<double> times;
  std::vector<double> r;
  std::vector<Regime> regime;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    try {
      std::getline(ls, field, ',');
      times.push_back(std::stod(field));
      if (!std::getline(ls, field, ',')) throw std::invalid_argument("missing i");
      const int v = std::stoi(field);
      if (v < 0) throw std::invalid_argument("negative count");
      s.i.push_back(v);
      if (has_r) {
        if (!std::getline(ls, field, ',')) throw std::invalid_argument("missing r_hat");
        r.push_back(std::stod(field));
      }
      if (has_regime) {
        if (!std::getline(ls, field, ',')) throw std::invalid_argument("missing regime_hat");
        const int g = std::stoi(field);
        if (g != 1 && g != 2) throw std::invalid_argument("regime must be 1 or 2");
        regime.push_back(static_cast<Regime>(g));
      }
    } catch (const std::exception& e) {
      throw ParseError(std::string("malformed series record: ") + e.what(), lineno);
    }
  }
  if (!times.empty()) s.t0 = times.front();
  if (times.size() >= 2) {
    s.dt = times[1] - times[0];
    if (!(s.dt > 0.0)) throw ParseError("series times must increase", 3);
    for (std::size_t k = 2; k < times.size(); ++k) {
      const double expected = s.t0 + s.dt * static_cast<double>(k);
      if (std::abs(times[k] - expected) > 1e-6 * std::max(1.0, std::abs(expected))) {
        throw ParseError("series is not regularly sampled", k + 2);
      }
    }
  }
  if (has_r) s.r = std::move(r);
  if (has_regime) s.regime = std::move(regime);
  return s;
}

WorkloadSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_series_csv(in);
}

}  // namespace buzzload

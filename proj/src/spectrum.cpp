#include "buzzload/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "buzzload/errors.hpp"
#include "buzzload/parallel.hpp"

namespace buzzload {

double RateMatrix::max_exit_rate() const {
  double m = 0.0;
  for (double d : diag) m = std::max(m, -d);
  return m;
}

void RateMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.resize(dim);
  for (std::size_t s = 0; s < dim; ++s) {
    double acc = diag[s] * x[s];
    for (std::size_t k = row_ptr[s]; k < row_ptr[s + 1]; ++k) acc += val[k] * x[col[k]];
    y[s] = acc;
  }
}

RateMatrix build_rate_matrix(const ModelParams& params, std::size_t max_states) {
  validate(params);
  const std::size_t n = state_count(params);
  if (n > max_states) {
    throw ResourceError("state space of " + std::to_string(n) + " states exceeds the limit of " +
                        std::to_string(max_states));
  }
  RateMatrix m;
  m.dim = n;
  m.row_ptr.assign(n + 1, 0);
  m.diag.assign(n, 0.0);
  m.col.reserve(4 * n);
  m.val.reserve(4 * n);
  for (std::size_t s = 0; s < n; ++s) {
    const SystemState st = state_at(s, params);
    const TransitionRates r = transition_rates(st, params);
    auto add = [&](const SystemState& to, double rate) {
      if (rate <= 0.0) return;
      m.col.push_back(static_cast<std::uint32_t>(state_index(to, params)));
      m.val.push_back(rate);
      m.diag[s] -= rate;
    };
    add(apply_arrival(st), r.arrival);
    if (st.i > 0) add(apply_watch_end(st, params), r.watch_end);
    if (st.r > 0) add(apply_memory_end(st), r.memory_end);
    add(apply_regime_switch(st), r.regime_switch);
    m.row_ptr[s + 1] = m.col.size();
  }
  return m;
}

RateMatrix rate_matrix_from_dense(const std::vector<std::vector<double>>& dense) {
  RateMatrix m;
  m.dim = dense.size();
  m.row_ptr.assign(m.dim + 1, 0);
  m.diag.assign(m.dim, 0.0);
  for (std::size_t s = 0; s < m.dim; ++s) {
    if (dense[s].size() != m.dim) throw ContractError("dense generator must be square");
    for (std::size_t t = 0; t < m.dim; ++t) {
      if (t == s || dense[s][t] == 0.0) continue;
      if (dense[s][t] < 0.0) throw ContractError("negative off-diagonal rate");
      m.col.push_back(static_cast<std::uint32_t>(t));
      m.val.push_back(dense[s][t]);
      m.diag[s] -= dense[s][t];
    }
    m.row_ptr[s + 1] = m.col.size();
  }
  return m;
}

std::vector<double> observable_i(const ModelParams& params) {
  std::vector<double> phi(state_count(params));
  for (std::size_t s = 0; s < phi.size(); ++s) phi[s] = state_at(s, params).i;
  return phi;
}

namespace {

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

// Collatz-Wielandt bounds for the Metzler matrix M = A + q diag(phi): for x > 0,
// min (Mx)_s / x_s <= Lambda <= max (Mx)_s / x_s. Entries negligible next to
// the largest one carry no information and are skipped.
Bracket collatz_wielandt(const RateMatrix& m, double q, const std::vector<double>& phi,
                         const std::vector<double>& x, std::vector<double>& mx) {
  m.multiply(x, mx);
  double xmax = 0.0;
  for (double v : x) xmax = std::max(xmax, v);
  const double floor = xmax * 1e-250;
  Bracket b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (std::size_t s = 0; s < m.dim; ++s) {
    mx[s] += q * phi[s] * x[s];
    if (x[s] > floor) {
      const double ratio = mx[s] / x[s];
      b.lo = std::min(b.lo, ratio);
      b.hi = std::max(b.hi, ratio);
    }
  }
  return b;
}

bool converged(const Bracket& b, double tol) {
  return b.width() <= tol * std::max(1.0, std::abs(b.mid()));
}

void normalise(std::vector<double>& x) {
  double xmax = 0.0;
  for (double v : x) xmax = std::max(xmax, v);
  for (double& v : x) v = std::max(v / xmax, 0.0);
}

}  // namespace

double scgf(const RateMatrix& m, double q, const std::vector<double>& phi, const ScgfOptions& opt,
            std::vector<double>* vector) {
  if (!std::isfinite(q)) throw ContractError("tilt q must be finite");
  if (phi.size() != m.dim) throw ContractError("observable size does not match the matrix");
  if (m.dim == 0) throw ContractError("empty rate matrix");
  double phi_abs = 0.0;
  for (double v : phi) phi_abs = std::max(phi_abs, std::abs(v));
  const double c = 1.05 * (m.max_exit_rate() + std::abs(q) * phi_abs) + 1e-12;

  std::vector<double> x(m.dim, 1.0), mx;
  if (vector && vector->size() == m.dim) {
    x = *vector;
    for (double& v : x) {
      if (!(v > 0.0) || !std::isfinite(v)) v = 1e-300;
    }
  }
  auto finish = [&](const Bracket& b) {
    if (vector) *vector = x;
    return b.mid();
  };

  // Power sweeps x <- x + M x / c.
  auto sweep = [&](std::size_t count, Bracket& b) {
    for (std::size_t k = 0; k < count; ++k) {
      b = collatz_wielandt(m, q, phi, x, mx);
      if (converged(b, opt.tol)) return true;
      for (std::size_t s = 0; s < m.dim; ++s) x[s] += mx[s] / c;
      normalise(x);
    }
    return false;
  };

  Bracket b;
  if (sweep(50, b)) return finish(b);

  // Shift-invert steps. With sigma above the upper bound, sigma I - M is a
  // nonsingular M-matrix: its inverse is nonnegative and its dominant
  // eigenvalue is 1 / (sigma - Lambda).
  Eigen::SparseMatrix<double> shifted(static_cast<Eigen::Index>(m.dim), static_cast<Eigen::Index>(m.dim));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.val.size() + m.dim);
  const double sigma = b.hi + std::max(b.width(), 1e-6 * std::max(1.0, std::abs(b.hi)));
  for (std::size_t s = 0; s < m.dim; ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    trip.emplace_back(row, row, sigma - m.diag[s] - q * phi[s]);
    for (std::size_t k = m.row_ptr[s]; k < m.row_ptr[s + 1]; ++k) {
      trip.emplace_back(row, static_cast<Eigen::Index>(m.col[k]), -m.val[k]);
    }
  }
  shifted.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(shifted);
  if (lu.info() == Eigen::Success) {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(m.dim));
    for (int step = 0; step < 60; ++step) {
      for (std::size_t s = 0; s < m.dim; ++s) rhs[static_cast<Eigen::Index>(s)] = x[s];
      const Eigen::VectorXd sol = lu.solve(rhs);
      if (lu.info() != Eigen::Success) break;
      for (std::size_t s = 0; s < m.dim; ++s) x[s] = sol[static_cast<Eigen::Index>(s)];
      normalise(x);
      b = collatz_wielandt(m, q, phi, x, mx);
      if (converged(b, opt.tol)) return finish(b);
    }
  }

  if (sweep(opt.max_iterations, b)) return finish(b);
  throw NumericalError("power iteration did not converge", b.width());
}

std::vector<double> stationary_distribution(const RateMatrix& m, const ScgfOptions& opt) {
  // Transpose, then iterate pi <- pi (I + A / c) until the residual |pi A| is small.
  const std::size_t n = m.dim;
  std::vector<std::size_t> tptr(n + 1, 0);
  for (std::uint32_t j : m.col) ++tptr[j + 1];
  for (std::size_t s = 0; s < n; ++s) tptr[s + 1] += tptr[s];
  std::vector<std::uint32_t> tcol(m.col.size());
  std::vector<double> tval(m.val.size());
  std::vector<std::size_t> fill(tptr.begin(), tptr.end() - 1);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = m.row_ptr[s]; k < m.row_ptr[s + 1]; ++k) {
      const std::size_t pos = fill[m.col[k]]++;
      tcol[pos] = static_cast<std::uint32_t>(s);
      tval[pos] = m.val[k];
    }
  }
  const double c = 1.05 * m.max_exit_rate() + 1e-12;
  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    double residual = 0.0, total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double flow = m.diag[s] * pi[s];
      for (std::size_t k = tptr[s]; k < tptr[s + 1]; ++k) flow += tval[k] * pi[tcol[k]];
      residual = std::max(residual, std::abs(flow));
      next[s] = pi[s] + flow / c;
      total += next[s];
    }
    for (std::size_t s = 0; s < n; ++s) pi[s] = next[s] / total;
    if (residual <= opt.tol * 1e-3) return pi;
  }
  throw NumericalError("stationary distribution did not converge", 0.0);
}

std::vector<SpectrumPoint> SpectrumCurve::finite_points() const {
  std::vector<SpectrumPoint> out;
  for (const auto& p : points) {
    if (std::isfinite(p.f) && std::isfinite(p.alpha)) out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const SpectrumPoint& a, const SpectrumPoint& b) { return a.alpha < b.alpha; });
  return out;
}

std::pair<double, double> SpectrumCurve::support() const {
  const auto pts = finite_points();
  if (pts.empty()) throw InsufficientDataError("spectrum has no finite point");
  return {pts.front().alpha, pts.back().alpha};
}

double SpectrumCurve::f_at(double alpha) const {
  const auto pts = finite_points();
  const double ninf = -std::numeric_limits<double>::infinity();
  if (pts.empty() || alpha < pts.front().alpha || alpha > pts.back().alpha) return ninf;
  auto it = std::lower_bound(pts.begin(), pts.end(), alpha,
                             [](const SpectrumPoint& p, double a) { return p.alpha < a; });
  if (it == pts.begin()) return it->f;
  const auto& b = *it;
  const auto& a = *(it - 1);
  if (b.alpha == a.alpha) return std::max(a.f, b.f);
  const double w = (alpha - a.alpha) / (b.alpha - a.alpha);
  return a.f + w * (b.f - a.f);
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n == 0 || !(hi >= lo)) throw ContractError("invalid grid");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  for (std::size_t k = 0; k < n; ++k) g[k] = lo + (hi - lo) * k / static_cast<double>(n - 1);
  // keep an exact 0 when the grid is symmetric
  for (double& v : g) {
    if (std::abs(v) < 1e-12 * (hi - lo)) v = 0.0;
  }
  return g;
}

std::vector<double> default_q_grid(double scale) {
  if (!(scale > 0.0)) throw ContractError("q grid scale must be > 0");
  return linear_grid(-3.0 / scale, 3.0 / scale, 201);
}

SpectrumCurve theoretical_spectrum(const RateMatrix& m, const std::vector<double>& phi,
                                   const std::vector<double>& q_grid, const ScgfOptions& opt) {
  if (q_grid.size() < 3) throw ContractError("q grid needs at least 3 points");
  std::vector<double> q = q_grid;
  std::sort(q.begin(), q.end());
  if (!(q.front() < 0.0 && q.back() > 0.0)) {
    throw ContractError("q grid must span negative and positive values");
  }
  const std::size_t n = q.size();
  std::vector<double> lam(n);
  // Walk outwards from the point closest to 0, reusing each eigenvector.
  std::size_t z = 0;
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs(q[k]) < std::abs(q[z])) z = k;
  }
  std::vector<double> v0;
  lam[z] = scgf(m, q[z], phi, opt, &v0);
  parallel_for(2, [&](std::size_t side) {
    std::vector<double> v = v0;
    if (side == 0) {
      for (std::size_t k = z; k-- > 0;) lam[k] = scgf(m, q[k], phi, opt, &v);
    } else {
      for (std::size_t k = z + 1; k < n; ++k) lam[k] = scgf(m, q[k], phi, opt, &v);
    }
  });
  SpectrumCurve curve;
  for (std::size_t k = 0; k < n; ++k) {
    double alpha;
    if (k == 0) {
      alpha = (lam[1] - lam[0]) / (q[1] - q[0]);
    } else if (k + 1 == n) {
      alpha = (lam[k] - lam[k - 1]) / (q[k] - q[k - 1]);
    } else {
      alpha = (lam[k + 1] - lam[k - 1]) / (q[k + 1] - q[k - 1]);
    }
    const double f = -(q[k] * alpha - lam[k]);
    curve.points.push_back({q[k], lam[k], alpha, std::min(f, 0.0), 0.0});
  }
  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const SpectrumPoint& a, const SpectrumPoint& b) { return a.alpha < b.alpha; });
  return curve;
}

SpectrumCurve theoretical_spectrum(const ModelParams& params, const std::vector<double>& q_grid,
                                   const ScgfOptions& opt) {
  return theoretical_spectrum(build_rate_matrix(params), observable_i(params), q_grid, opt);
}

std::vector<double> window_integrals(const WorkloadSeries& series, double tau) {
  check_series(series);
  if (!(tau > 0.0)) throw ContractError("tau must be > 0");
  const double ratio = tau / series.dt;
  const auto m = static_cast<std::size_t>(std::llround(ratio));
  if (m == 0 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * ratio) {
    throw ContractError("tau must be a multiple of the series step");
  }
  const std::size_t k = series.size() / m;
  if (k < 2) throw InsufficientDataError("series shorter than two windows of length tau");
  std::vector<double> y(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    long long s = 0;
    for (std::size_t t = j * m; t < (j + 1) * m; ++t) s += series.i[t];
    y[j] = static_cast<double>(s) * series.dt;
  }
  return y;
}

SpectrumCurve empirical_spectrum(const std::vector<double>& y, double tau,
                                 const std::vector<double>& q_grid) {
  if (y.size() < 2) throw InsufficientDataError("need at least two windows");
  if (!(tau > 0.0)) throw ContractError("tau must be > 0");
  const double k = static_cast<double>(y.size());
  std::vector<double> a(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) a[j] = y[j] / tau;
  std::vector<double> sorted = a;
  std::sort(sorted.begin(), sorted.end());

  SpectrumCurve curve;
  curve.tau = tau;
  for (double q : q_grid) {
    double top = -std::numeric_limits<double>::infinity();
    for (double v : y) top = std::max(top, q * v);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double w = std::exp(q * y[j] - top);
      s0 += w;
      s1 += w * a[j];
    }
    const double mean = s1 / s0;
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double w = std::exp(q * y[j] - top);
      s2 += w * (a[j] - mean) * (a[j] - mean);
    }
    SpectrumPoint p;
    p.q = q;
    p.lambda = (top + std::log(s0 / k)) / tau;
    p.alpha = mean;
    // Lambda'' = tau * Var_w(Y / tau), so sqrt(Lambda'' / tau) is the tilted spread.
    p.eps = std::sqrt(std::max(0.0, s2 / s0));
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), p.alpha - p.eps);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), p.alpha + p.eps);
    const auto count = static_cast<double>(hi - lo);
    p.f = count > 0.0 ? std::log(count / k) / tau : -std::numeric_limits<double>::infinity();
    curve.points.push_back(p);
  }
  return curve;
}

SpectrumCurve empirical_spectrum(const WorkloadSeries& series, double tau,
                                 const std::vector<double>& q_grid) {
  return empirical_spectrum(window_integrals(series, tau), tau, q_grid);
}

namespace {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(15);
  os << v;
  return os.str();
}

double parse_number(const std::string& s, std::size_t line) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ParseError("trailing characters in '" + s + "'", line);
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError("not a number: '" + s + "'", line);
  } catch (const std::out_of_range&) {
    throw ParseError("number out of range: '" + s + "'", line);
  }
}

}  // namespace

void write_spectrum_csv(const std::vector<SpectrumCurve>& curves, std::ostream& out) {
  out << "tau,q,lambda,alpha,f,eps,f_log2\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out << format_number(c.tau) << ',' << format_number(p.q) << ',' << format_number(p.lambda)
          << ',' << format_number(p.alpha) << ',' << format_number(p.f) << ','
          << format_number(p.eps) << ',' << format_number(p.f / std::log(2.0)) << '\n';
    }
  }
}

void write_spectrum_csv(const std::vector<SpectrumCurve>& curves, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_spectrum_csv(curves, out);
}

std::vector<SpectrumCurve> read_spectrum_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line.rfind("tau,q,lambda,alpha,f,eps", 0) != 0) {
    throw ParseError("expected header tau,q,lambda,alpha,f,eps", lineno);
  }
  std::vector<SpectrumCurve> curves;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (fields.size() < 6) throw ParseError("expected at least 6 fields", lineno);
    const double tau = parse_number(fields[0], lineno);
    SpectrumPoint p{parse_number(fields[1], lineno), parse_number(fields[2], lineno),
                    parse_number(fields[3], lineno), parse_number(fields[4], lineno),
                    parse_number(fields[5], lineno)};
    if (curves.empty() || curves.back().tau != tau) {
      curves.emplace_back();
      curves.back().tau = tau;
    }
    curves.back().points.push_back(p);
  }
  if (curves.empty()) throw ParseError("spectrum file has no rows", lineno);
  return curves;
}

std::vector<SpectrumCurve> read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_spectrum_csv(in);
}

}  // namespace buzzload

#ifndef BUZZLOAD_SPECTRUM_HPP
#define BUZZLOAD_SPECTRUM_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "buzzload/model.hpp"
#include "buzzload/series.hpp"

namespace buzzload {

// Sparse generator. Off-diagonal rates are stored row-wise (CSR); the diagonal
// holds minus the row sum, so every row sums to zero.
struct RateMatrix {
  std::size_t dim = 0;
  std::vector<std::size_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> val;
  std::vector<double> diag;

  double max_exit_rate() const;
  // y = A x
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
};

// Generator of the (i, r, regime) chain, indexed by state_index. Throws
// ResourceError when the state space exceeds max_states.
RateMatrix build_rate_matrix(const ModelParams& params, std::size_t max_states = 4'000'000);

// From a dense square matrix; the diagonal is recomputed from the off-diagonal rates.
RateMatrix rate_matrix_from_dense(const std::vector<std::vector<double>>& dense);

// Phi(state) = i for every state of the chain.
std::vector<double> observable_i(const ModelParams& params);

struct ScgfOptions {
  // Stop when the Collatz-Wielandt bracket on Lambda is narrower than
  // tol * max(1, |Lambda|).
  double tol = 1e-10;
  std::size_t max_iterations = 5'000'000;
};

// Principal eigenvalue of A + q diag(phi) by power iteration on
// B = I + (A + q diag(phi)) / c. `vector`, when given, seeds the iteration and
// receives the converged eigenvector (useful along a q grid).
double scgf(const RateMatrix& matrix, double q, const std::vector<double>& phi,
            const ScgfOptions& options = {}, std::vector<double>* vector = nullptr);

// Stationary distribution (pi A = 0) by power iteration on the transposed
// uniformised chain.
std::vector<double> stationary_distribution(const RateMatrix& matrix, const ScgfOptions& options = {});

struct SpectrumPoint {
  double q = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  double f = 0.0;  // -infinity marks an empty bin
  double eps = 0.0;
};

struct SpectrumCurve {
  double tau = std::numeric_limits<double>::infinity();  // infinity: theoretical
  std::vector<SpectrumPoint> points;

  bool theoretical() const { return tau == std::numeric_limits<double>::infinity(); }
  // Finite points sorted by alpha.
  std::vector<SpectrumPoint> finite_points() const;
  // [min alpha, max alpha] over finite points.
  std::pair<double, double> support() const;
  // Linear interpolation of f in alpha over the finite points; -infinity outside.
  double f_at(double alpha) const;
};

std::vector<double> linear_grid(double lo, double hi, std::size_t n);
// 201 points on [-3, 3] / scale.
std::vector<double> default_q_grid(double scale);

// f(alpha(q)) = -(q alpha(q) - Lambda(q)) with alpha = Lambda' by centered
// differences on the grid (one-sided at the ends). Sorted by alpha.
SpectrumCurve theoretical_spectrum(const ModelParams& params, const std::vector<double>& q_grid,
                                   const ScgfOptions& options = {});
SpectrumCurve theoretical_spectrum(const RateMatrix& matrix, const std::vector<double>& phi,
                                   const std::vector<double>& q_grid, const ScgfOptions& options = {});

// Y_j = integral of I over consecutive windows of length tau; the trailing
// partial window is dropped. tau must be a multiple of the series step.
std::vector<double> window_integrals(const WorkloadSeries& series, double tau);

// Multi-scale estimate from window integrals: Lambda_tau by log-sum-exp,
// alpha and eps from the tilted moments of Y / tau, f from the fraction of
// windows with Y / tau within alpha +- eps.
SpectrumCurve empirical_spectrum(const std::vector<double>& window_sums, double tau,
                                 const std::vector<double>& q_grid);
SpectrumCurve empirical_spectrum(const WorkloadSeries& series, double tau,
                                 const std::vector<double>& q_grid);

// CSV `tau,q,lambda,alpha,f,eps,f_log2`; tau is `inf` for theoretical curves,
// f is `-inf` for empty bins, f_log2 = f / ln 2.
void write_spectrum_csv(const std::vector<SpectrumCurve>& curves, std::ostream& out);
void write_spectrum_csv(const std::vector<SpectrumCurve>& curves, const std::string& path);
std::vector<SpectrumCurve> read_spectrum_csv(std::istream& in);
std::vector<SpectrumCurve> read_spectrum_csv(const std::string& path);

}  // namespace buzzload

#endif  // BUZZLOAD_SPECTRUM_HPP

#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qilab/kernel.hpp"
#include "qilab/parallel.hpp"

namespace qilab {

enum class PoincareMethod { spectral_p2, ascent, test_function };

const char* to_string(PoincareMethod method);

// Best-constant estimates for ||f - m_f||_p <= C_p * N(f), N either the
// kernel seminorm (spectral_p2, ascent) or the edge-gradient energy
// (test_function). `lower` is always certified by the stored witness:
// re-evaluating its quotient reproduces `lower` within 1e-6.
struct PoincareEstimate {
  double p = 2.0;
  double lower = 0.0;
  std::optional<double> upper;
  PoincareMethod method = PoincareMethod::spectral_p2;
  std::vector<double> witness_re;
  std::vector<double> witness_im;  // empty for real witnesses
};

// Optimal centering: argmin over scalar m of the weighted p-deviation
// [ sum_x w(x) |f(x)-m|^p ]^(1/p). Weighted mean for p=2, weighted median
// for p=1, golden-section search otherwise.
struct LpCenter {
  double center = 0.0;
  double value = 0.0;
};

LpCenter lp_mean_deviation(const Net& net, std::span<const double> f, double p);

// [ sum_x w(x) (re^2+im^2)^(p/2) ]^(1/p)  (no centering).
double lp_norm(const Net& net, std::span<const double> re,
               std::span<const double> im, double p);

// ||f - m_f||_p / N_p(f) for a given trial function; the certification
// formula shared by all estimators. Complex functions use modulus and are
// centered at the complex p=2 mean.
double rayleigh_quotient(const Kernel& k, std::span<const double> re,
                         std::span<const double> im, double p,
                         Exec exec = Exec::parallel);

// Exact p=2 constant: C_2 = 1/sqrt(2*lambda_2) of the generalized problem
// (D - W) f = lambda * M f on mean-zero functions, where W(x,y) =
// psi(x,y)w(x)w(y), D its row sums and M = diag(w). Dense solve up to
// `dense_cap` points (Error(size_cap) beyond), Error(disconnected) when the
// kernel graph is disconnected. lower = upper = C_2, witness eigenfunction.
PoincareEstimate poincare_exact_p2(const Kernel& k, int dense_cap = 2500);

struct AscentOptions {
  int restarts = 8;
  int iters = 500;
  uint64_t seed = 1;
};

// Certified lower bound on C_p: backtracking gradient ascent on the quotient
// ||f - m_f||_p / N_p(f) from deterministic seeds (coordinate modes of the
// net, the p=2 eigenfunction when affordable, the parity mode on covers, and
// seeded random starts). Always valid; at p=2 it recovers the spectral value
// closely.
PoincareEstimate poincare_lower_ascent(const Kernel& k, double p,
                                       const AscentOptions& opt = {},
                                       Exec exec = Exec::parallel);

// Certified C_p lower bound from the explicit parity mode u = e^(i*pi*x_n)
// on a double-cover exponential-metric net (mean-zero by deck symmetry),
// measured against the edge-gradient energy:
//   lower = ||u||_p / gradient_seminorm_discrete(u, p).
// Requires p * mu_n > sum(mu) (Error(pole_or_below) otherwise) and a
// double-cover net (Error(wrong_net)).
PoincareEstimate testfunction_lower_bound(const Net& net, double p);

// Edge-based discrete p-energy of a complex function:
//   [ sum_edges (w(x)+w(y))/2 * |f(x)-f(y)|^p / length^p ]^(1/p).
// The Riemann-sum counterpart of the continuum gradient p-energy.
double gradient_seminorm_discrete(const Net& net,
                                  std::span<const std::complex<double>> f,
                                  double p, Exec exec = Exec::parallel);

// Normalized continuum gradient p-energy of the last-coordinate parity mode:
//   pi * mu_n / (p - sum(mu)/mu_n),
// the scale-free constant used by the lower-bound scaling law. Throws
// Error(pole_or_below) when p <= sum(mu)/mu_n.
double continuum_grad_integral(std::span<const double> mu, double p);

// Closed form of the limit of gradient_seminorm_discrete(u, p)^p as the mesh
// refines, for the parity mode on a double-cover net of exponents mu and
// height R:  2 * pi^p * (1 - e^(-(p*mu_n - sum mu) R)) / (p*mu_n - sum mu).
// Requires p*mu_n > sum(mu).
double mode_energy_closed_form(std::span<const double> mu, double p, double R);

// The parity mode u = e^(i*pi*x_n) on a double-cover net
// (Error(wrong_net) otherwise).
std::vector<std::complex<double>> parity_mode(const Net& net);

}  // namespace qilab

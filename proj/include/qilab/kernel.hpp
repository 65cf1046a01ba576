#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qilab/embed.hpp"
#include "qilab/parallel.hpp"
#include "qilab/space.hpp"

namespace qilab {

// Symmetric nonnegative pair weight of bounded width on a net, stored as CSR
// over point ids. Rows sum to 1 against the net measure:
//   sum_y psi(x,y) w(y) = 1 +- tolerance.
struct Kernel {
  NetPtr net;
  double width = 0.0;  // support radius: psi(x,y) = 0 whenever d(x,y) > width
  bool has_isolated = false;  // some ball contained only its own center
  std::vector<uint64_t> row_offset;
  std::vector<uint32_t> col;
  std::vector<double> value;

  uint64_t nnz() const { return value.size(); }
  double at(uint32_t i, uint32_t j) const;  // 0 when absent

  double sup_value() const;           // max psi
  double max_row_sum_error() const;   // max_x |sum_y psi(x,y) w(y) - 1|
  // Smallest psi over all pairs with d <= radius; 0 if any such pair is
  // outside the support (the positivity margin at that radius).
  double min_margin(double radius, Exec exec = Exec::parallel) const;
};

// Indicator-of-a-ball kernel, symmetrized and rescaled (alternating row/column
// geometric normalization) until every row sums to 1 against the measure
// within 1e-10. Symmetric by construction. A point whose ball contains only
// itself gets self-weight 1/w and sets has_isolated.
Kernel make_ball_kernel(NetPtr net, double width, Exec exec = Exec::parallel);

// Measure-weighted composition (a*b)(x,z) = sum_y a(x,y) w(y) b(y,z).
// Width adds; row normalization is preserved up to accumulated tolerance.
Kernel convolve_kernels(const Kernel& a, const Kernel& b,
                        Exec exec = Exec::parallel);

// m-fold self-composition psi^(*m) (m >= 1).
Kernel self_convolve(const Kernel& k, int m, Exec exec = Exec::parallel);

// Kernel-weighted p-energy seminorm
//   N(f) = [ sum_{x,y} w(x) psi(x,y) w(y) |f(x)-f(y)|^p ]^(1/p)
// over ordered pairs. Complex-valued overload uses |.| on C.
double seminorm(const Kernel& k, std::span<const double> f, double p,
                Exec exec = Exec::parallel);
double seminorm(const Kernel& k, std::span<const double> f_re,
                std::span<const double> f_im, double p,
                Exec exec = Exec::parallel);

// Antisymmetric additive pair function a(x,y) = -a(y,x) with
// a(x,y) + a(y,z) = a(x,z). Stored as a potential (a = g(x) - g(y)) when one
// exists, else as a dense antisymmetric matrix (small nets only).
struct Cocycle {
  NetPtr net;
  bool is_potential = false;
  std::vector<double> potential;  // when is_potential
  std::vector<double> dense;      // n*n row-major otherwise

  double at(uint32_t i, uint32_t j) const;
};

Cocycle make_potential_cocycle(NetPtr net, std::vector<double> g);
// Antisymmetrizes the given matrix; checks additivity on sampled triples and
// throws Error(invalid_params) when it fails beyond 1e-9.
Cocycle make_dense_cocycle(NetPtr net, std::vector<double> matrix);

// N(a) = [ sum_{x,y} w(x) psi(x,y) w(y) |a(x,y)|^p ]^(1/p).
double seminorm(const Kernel& k, const Cocycle& a, double p,
                Exec exec = Exec::parallel);

// Smoothed pullback through a map: h(x) = sum_z g(z) psi(f(x), z) w(z),
// with psi a kernel on the codomain net. Real and complex versions.
std::vector<double> transport_function(const PointMap& map, const Kernel& psi,
                                       std::span<const double> g,
                                       Exec exec = Exec::parallel);
void transport_function(const PointMap& map, const Kernel& psi,
                        std::span<const double> g_re,
                        std::span<const double> g_im,
                        std::vector<double>& out_re,
                        std::vector<double>& out_im,
                        Exec exec = Exec::parallel);

// Smoothed pullback of a pair function:
//   b(x,x') = sum_{z,z'} a(z,z') phi(f(x),z) w(z) phi(f(x'),z') w(z').
// Bilinear, so the result is again additive; a potential input stays a
// potential (of the transported function).
Cocycle transport_cocycle(const Cocycle& a, const Kernel& phi,
                          const PointMap& map, Exec exec = Exec::parallel);

// Provable comparison constant between two kernel seminorms on one net:
//   N_weak(f) <= constant * N_strong(f)  for every f.
// Derived by chaining m steps of `strong` so that the m-fold composition is
// uniformly positive (margin tau) on the support of `weak`:
//   constant = [ sup(weak) * m^p * (1+eta)^(m-1) / tau ]^(1/p),
// with eta the measured row-sum error of `strong`. m grows until tau > 0.
// Throws Error(disconnected) if no m <= max_m works.
struct SeminormComparison {
  double constant = 0.0;
  int m = 0;
  double tau = 0.0;
  double eta = 0.0;
};

SeminormComparison seminorm_comparison(const Kernel& strong, const Kernel& weak,
                                       double p, int max_m = 16,
                                       Exec exec = Exec::parallel);

// Provable constant bounding the pulled-back pair energy: for every additive
// pair function `a` on the codomain of `map`,
//   N_dom(transport_cocycle(a, phi, map)) <= constant * N_tilde(a),
// where `tilde` (returned) is the ball kernel on the codomain of width
//   pair_width = 2*width(phi) + lambda1*width(dom) + c1
// (any pair in dom's support maps into that separation). The constant is
//   [ sup(dom) * sup(phi)^2 * rel_mass^2 / tau ]^(1/p),
// with rel_mass = max_z (domain mass pulled into B(z, width(phi))) and
// tau = tilde's positivity margin at its own width.
struct CocycleComparison {
  double constant = 0.0;
  double pair_width = 0.0;
  double rel_mass = 0.0;
  double tau = 0.0;
  Kernel tilde;
};

CocycleComparison cocycle_comparison(const PointMap& map, const Kernel& dom,
                                     const Kernel& phi, const QieConstants& q,
                                     double p, Exec exec = Exec::parallel);

}  // namespace qilab

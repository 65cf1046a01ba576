#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "qilab/parallel.hpp"
#include "qilab/space.hpp"

namespace qilab {

// A map between two nets, stored as codomain ids indexed by domain id.
struct PointMap {
  NetPtr domain;
  NetPtr codomain;
  std::vector<uint32_t> image;

  void validate() const;  // throws Error(empty_map / net_mismatch)
};

// Affine distance-distortion constants:
//   (1/lambda2)(d(x,y) - c2) <= d(fx,fy) <= lambda1*d(x,y) + c1.
struct QieConstants {
  double lambda1 = 1.0;
  double c1 = 0.0;
  double lambda2 = 1.0;
  double c2 = 0.0;

  double total() const { return lambda1 + c1 + lambda2 + c2; }
};

enum class Objective { sum, max };  // per-side cost: lambda+c or max(lambda,c)

struct WitnessPair {
  uint32_t a = 0;
  uint32_t b = 0;
  double dist_domain = 0.0;
  double dist_image = 0.0;
};

struct DistortionReport {
  QieConstants constants;
  Objective objective = Objective::sum;
  // Pairs at which the optimal upper / lower constraints are tight.
  std::vector<WitnessPair> upper_witnesses;
  std::vector<WitnessPair> lower_witnesses;
  uint64_t pairs_evaluated = 0;
};

// Optimal affine distortion constants of a finite map: for each side the
// exact minimizer of the chosen objective over all valid (lambda >= 1, c >= 0)
// pairs, found on the upper convex hull of the binding distance pairs.
// Deterministic under any thread count. Throws Error(degenerate_domain) if
// the domain has fewer than 2 points.
DistortionReport measure_distortion(const PointMap& map, Objective objective,
                                    Exec exec = Exec::parallel);

struct QieCheck {
  bool ok = true;
  WitnessPair violation;  // smallest-index violating pair when !ok
  double worst_excess = 0.0;
};

// Checks the two-sided inequality for every pair with additive slack.
QieCheck verify_qie(const PointMap& map, const QieConstants& k,
                    double slack = 1e-9, Exec exec = Exec::parallel);

// Tree on generation points of a hyperbolic net: generation k is a greedy
// maximal step-separated subset of the band of net points within `band_tol`
// of radius k*step, step = sqrt(R); each generation-(k+1) point gets the
// nearest generation-k point as parent (ties to the smallest id). The
// returned map sends each unit-edge tree node to its hyperbolic position.
struct SqrtTreeResult {
  NetPtr tree;        // tree-kind net (unit edges, parent/depth arrays)
  NetPtr positions;   // h2-kind net of the selected points (same ids)
  PointMap map;       // tree id -> positions id (identity)
  double step = 0.0;  // sqrt(R), R = largest point radius
  std::vector<uint32_t> generation_offset;  // CSR: size #generations + 1
};

SqrtTreeResult build_sqrt_tree_embedding(NetPtr h2net, double band_tol);

// Regular-tree ball placed into the hyperbolic plane: depth-k vertices sit on
// the circle of radius R_k given by the capacity equation
// e^{sqrt(R_k)}*(d+1)*d^k = e^{R_k}, in angular slots of width
// 2*pi/((d+1)*d^k) (the capacity count the radius equation matches, so
// consecutive same-generation points sit ~sqrt(R_k) apart); each vertex's
// children occupy a centered block of consecutive slots under it. The image
// net carries the exact placed points with the closed-form distance.
struct TreeToH2Result {
  NetPtr tree;
  NetPtr image;   // h2-kind net, one point per tree vertex (same ids)
  PointMap map;   // identity on ids
  std::vector<double> generation_radii;  // R_k, k = 0..R
};

TreeToH2Result build_tree_to_h2(int degree, int R,
                                uint64_t size_cap = 2'000'000);

// Radius of generation k >= 1 from the capacity equation (k = 0 maps to 0).
double generation_radius(int degree, int k);

// Height-preserving extension of a boundary direction map between two
// exponential-metric nets: (t, x) -> nearest codomain grid point to
// (t, theta(x)). `theta_forward` maps domain boundary coordinates to
// codomain boundary coordinates. Throws Error(wrong_net) unless both nets
// are exponential-metric, Error(boundary_map_undefined) on dimension
// mismatch.
PointMap radial_extension(
    NetPtr domain, NetPtr codomain,
    const std::function<void(std::span<const double>, std::span<double>)>&
        theta_forward);

}  // namespace qilab

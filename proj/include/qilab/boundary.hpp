#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qilab/common.hpp"
#include "qilab/parallel.hpp"

namespace qilab {

enum class ThetaKind { identity, zmu_identity, biholder, unipotent };

const char* to_string(ThetaKind kind);

// A boundary homeomorphism together with the visual metrics on both sides.
//   identity:     any dimension; both metrics are the max of circle distances.
//   zmu_identity: identity on coordinates between exponent packs mu -> mu_img;
//                 visual metric max_i dc_i^(1/mu_i) on each side.
//   biholder:     one circle coordinate, s -> sign(s)|s|^gamma with
//                 gamma = (alpha+beta)/2, which is (alpha, beta, c)-bi-Hoelder;
//                 both sides use |s - s'| on the segment [-1/2, 1/2]
//                 (the power map is continuous there but not across the
//                 wrap point, so distances do not wrap).
//   unipotent:    pairs live in the unit square of coordinate differences
//                 (x, y); domain separation max(|x|, |y|), image separation
//                 max(|y|, |x - y log|y||).
struct BoundaryMap {
  ThetaKind kind = ThetaKind::identity;
  std::vector<double> mu_dom;  // zmu_identity
  std::vector<double> mu_img;
  double alpha = 1.0;          // biholder parameters
  double beta = 1.0;
  double holder_c = 1.0;

  int dim() const;
  void forward(std::span<const double> x, std::span<double> out) const;
  void inverse(std::span<const double> y, std::span<double> out) const;
  double domain_visual(std::span<const double> a,
                       std::span<const double> b) const;
  double image_visual(std::span<const double> fa,
                      std::span<const double> fb) const;
};

BoundaryMap make_identity_map(int dim);
BoundaryMap make_zmu_identity_map(std::vector<double> mu_dom,
                                  std::vector<double> mu_img);
BoundaryMap make_biholder_map(double alpha, double beta, double c);
BoundaryMap make_unipotent_map();

// max{|y|, |x - y log|y||}; continuous continuation |x| at y = 0.
double unipotent_visual_distance(double x, double y);

// |log( image_visual(f(a), f(b)) / domain_visual(a, b) )|.
// Throws Error(coincident_points) when either separation vanishes.
double visual_log_ratio(const BoundaryMap& map, std::span<const double> a,
                        std::span<const double> b);

// Scale-R distortion estimate: sup of visual_log_ratio over
//  (a) a deterministic per-coordinate ladder of log-spaced separations
//      (including the exact feasibility endpoints), and
//  (b) `grid_n` seeded random pairs (nested streams: results are monotone
//      nondecreasing in grid_n and in R),
// keeping pairs whose separation is >= e^-R on at least one side.
// A lower bound on the true sup by construction.
struct KEstimate {
  double value = 0.0;
  uint64_t pairs_kept = 0;
  uint64_t pairs_total = 0;
  int ladder_max = 0;  // deepest ladder index used
};

KEstimate estimate_K(const BoundaryMap& map, double R, int grid_n,
                     uint64_t seed, Exec exec = Exec::parallel);

struct AnalyticK {
  double value = 0.0;
  bool is_upper_bound = false;  // exact when false
};

// Closed-form K(R): exact R*max_i |mu_i/mu'_i - 1| for zmu_identity and 0 for
// the identity; upper bound max{1-alpha, beta-1}*R + |log c| for biholder;
// none for the unipotent example.
std::optional<AnalyticK> analytic_K(const BoundaryMap& map, double R);

// Quasi-isometry constants induced by a boundary map of distortion K at
// metric slack c: lambda = 1 + 2K/c, additive = 2K + c.
struct ThetaConstants {
  double lambda = 1.0;
  double additive = 0.0;
};

ThetaConstants theta_constants(double K, double c);

}  // namespace qilab

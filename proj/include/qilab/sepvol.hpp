#pragma once

#include <cstdint>
#include <vector>

#include "qilab/kernel.hpp"
#include "qilab/parallel.hpp"
#include "qilab/space.hpp"

namespace qilab {

// Greedy covering / packing counts at radius a, both from the deterministic
// id-order scan: each first-uncovered point becomes a center, so the centers
// are pairwise > a separated and the two counts coincide by construction.
// The classical sandwich survives across radii:
//   packing(2a) <= covering(a) <= packing(a).
struct CoverReport {
  double a = 0.0;
  uint64_t covering_count = 0;  // balls of radius a covering every point
  uint64_t packing_count = 0;   // maximal set with pairwise distance > a
  std::vector<uint32_t> cover_centers;
};

CoverReport vol_a(const Net& net, double a);

// Upper bound on the a-separation: a two-sided partition balanced against the
// covering count (each side must meet at least covering_count/3 balls of the
// fixed greedy family). The same algorithm runs at every size: sweep cuts on
// the second eigenfunction of the width-a ball kernel (dense eigensolver on
// small nets, certified gradient ascent above ~1200 points), in both sort
// orders plus a ball-split start, then deterministic local improvement
// (single-point moves, and swaps among points touching a crossing ball) to a
// local optimum. The reported value counts balls of the fixed greedy family
// meeting both sides; on tiny instances it is cross-checked against the
// exhaustive minimum by tests rather than delegated to it.
struct SeparationUpper {
  double a = 0.0;
  uint64_t crossing = 0;            // the upper bound
  std::vector<uint8_t> side;        // witness partition (0/1 per point)
  std::vector<uint32_t> family;     // centers of the fixed a-packing family
  uint64_t vol_side0 = 0;           // family balls meeting each side
  uint64_t vol_side1 = 0;
};

SeparationUpper sep_upper(const Net& net, double a, Exec exec = Exec::parallel);

// Conservative lower bound V / (3 * (1 + C1*M*D/tau)) on the crossing count
// of any balanced partition, where V is the covering count, C1 a certified
// 1-Poincare lower estimate (gradient ascent at p = 1, spectral witness among
// the seeds), M and tau the largest and smallest family-ball masses, and D
// the largest number of family balls through one point. Derivation: at least
// V/3 - S non-crossing balls lie inside the smaller side, so its mass is at
// least (V/3 - S)*tau/D; the 1-Poincare inequality bounds that mass by
// C1 * (seminorm of the side indicator) <= C1 * S * M, since every kernel
// pair crossing the partition sits inside a family ball whose widened ball
// meets both sides. Reported in the V / (3 * C1 * s) form with
// s = (1 + C1*M*D/tau) / C1. Documented as far from tight; the sandwich
// value <= sep_upper holds with margin on all tested instances.
struct SeparationLower {
  double value = 0.0;
  double c1 = 0.0;
  double s_factor = 0.0;
};

SeparationLower sep_lower_poincare(const Net& net, double a,
                                   Exec exec = Exec::parallel);

// Exhaustive minimum of the crossing count over all balanced partitions
// (tiny nets only; throws Error(size_cap) above 20 points,
// Error(degenerate_domain) when no balanced partition exists).
uint64_t sep_exhaustive(const Net& net, double a);

// Tree-capacity consistency check: lambda*2a + c >= log_d(S / V_c).
// Returns (holds, slack = LHS - RHS).
struct BoundCheck {
  bool holds = false;
  double slack = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

BoundCheck tree_bound_check(double S, double V_c, int d, double a,
                            double lambda, double c);

// Smallest c >= 0 such that (c/lambda)^alpha * e^(R-2c) <= (2*lambda*R+c)^alpha
// holds for every c' >= c (0 when the inequality holds everywhere). Found as
// the largest root of the log-form constraint by bisection; tends to R/2 for
// large R.
double volume_growth_lower_bound(double alpha, double lambda, double R);

// Affine-embedding consistency for a ball of radius R: R <= 12*lambda2*c1 + 4*c2.
bool connectivity_bound_check(double R, double lambda2, double c1, double c2);

}  // namespace qilab

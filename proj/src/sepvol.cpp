#include "qilab/sepvol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "qilab/common.hpp"
#include "qilab/kernel.hpp"
#include "qilab/poincare.hpp"

namespace qilab {

namespace {

// Non-owning handle so kernel construction can borrow a caller's net.
NetPtr borrow(const Net& net) { return NetPtr(NetPtr{}, &net); }

void check_radius(double a) {
  if (!(a >= 0.0) || !std::isfinite(a))
    throw Error(ErrorKind::invalid_params, "ball radius must be finite and >= 0");
}

// Greedy id-order scan: every first-uncovered point becomes a center, so the
// centers cover the net with radius-a balls and are pairwise > a separated.
std::vector<uint32_t> greedy_centers(const Net& net, double a) {
  const uint32_t n = net.size();
  std::vector<uint32_t> centers;
  std::vector<char> covered(n, 0);
  for (uint32_t i = 0; i < n; ++i) {
    if (covered[i]) continue;
    centers.push_back(i);
    for_each_in_ball(net, i, a, [&](uint32_t j, double) { covered[j] = 1; });
  }
  return centers;
}

// The fixed ball family used by the separation bounds: greedy centers with
// their radius-a balls, member lists, per-point incidence, and masses.
struct Family {
  std::vector<uint32_t> centers;
  std::vector<std::vector<uint32_t>> members;
  std::vector<std::vector<uint32_t>> incident;
  std::vector<double> mass;
};

Family build_family(const Net& net, double a) {
  Family fam;
  fam.centers = greedy_centers(net, a);
  const uint32_t n = net.size();
  fam.members.resize(fam.centers.size());
  fam.mass.assign(fam.centers.size(), 0.0);
  fam.incident.resize(n);
  for (size_t b = 0; b < fam.centers.size(); ++b) {
    for_each_in_ball(net, fam.centers[b], a, [&](uint32_t j, double) {
      fam.members[b].push_back(j);
      fam.mass[b] += net.weight[j];
      fam.incident[j].push_back(static_cast<uint32_t>(b));
    });
    std::sort(fam.members[b].begin(), fam.members[b].end());
  }
  return fam;
}

// Incremental bookkeeping for a two-sided partition against a fixed family:
// per-ball count of side-1 members plus running totals of the balls meeting
// each side and meeting both. A point flip costs O(balls through the point).
struct PartitionState {
  const Family* fam = nullptr;
  std::vector<uint8_t> side;
  std::vector<uint32_t> cnt1;
  uint64_t meets0 = 0, meets1 = 0, crossing = 0;

  void reset(const Family& f, std::vector<uint8_t> s) {
    fam = &f;
    side = std::move(s);
    cnt1.assign(f.members.size(), 0);
    meets0 = meets1 = crossing = 0;
    for (size_t b = 0; b < f.members.size(); ++b)
      for (uint32_t j : f.members[b]) cnt1[b] += side[j];
    for (size_t b = 0; b < f.members.size(); ++b) {
      const uint32_t c1 = cnt1[b];
      const uint32_t sz = static_cast<uint32_t>(f.members[b].size());
      meets1 += c1 > 0;
      meets0 += c1 < sz;
      crossing += c1 > 0 && c1 < sz;
    }
  }

  void flip(uint32_t i) {
    const int delta = side[i] ? -1 : 1;
    for (uint32_t b : fam->incident[i]) {
      const uint32_t sz = static_cast<uint32_t>(fam->members[b].size());
      const uint32_t before = cnt1[b];
      const uint32_t after = before + delta;
      meets1 += (after > 0) - (before > 0);
      meets0 += (after < sz) - (before < sz);
      crossing += (after > 0 && after < sz) - (before > 0 && before < sz);
      cnt1[b] = after;
    }
    side[i] ^= 1;
  }

  bool balanced() const {
    const uint64_t v = fam->members.size();
    return 3 * meets0 >= v && 3 * meets1 >= v;
  }
};

// Best balanced threshold cut along a fixed point order: all points start on
// side 0 and move to side 1 one at a time. Returns the move count of the best
// cut, or 0 when no threshold is balanced.
std::pair<uint64_t, uint32_t> best_sweep_cut(const Family& fam,
                                             const std::vector<uint32_t>& order) {
  PartitionState st;
  st.reset(fam, std::vector<uint8_t>(order.size(), 0));
  uint64_t best = std::numeric_limits<uint64_t>::max();
  uint32_t best_k = 0;
  for (uint32_t k = 0; k + 1 < order.size(); ++k) {
    st.flip(order[k]);
    if (st.balanced() && st.crossing < best) {
      best = st.crossing;
      best_k = k + 1;
    }
  }
  return {best, best_k};
}

std::vector<uint8_t> cut_to_sides(const std::vector<uint32_t>& order,
                                  uint32_t k) {
  std::vector<uint8_t> side(order.size(), 0);
  for (uint32_t i = 0; i < k; ++i) side[order[i]] = 1;
  return side;
}

// Deterministic descent on the crossing count: single-point moves over all
// points, then swaps among points touching a crossing ball, both accepted
// only when the partition stays balanced and the count strictly drops.
void improve_partition(PartitionState& st) {
  const uint32_t n = static_cast<uint32_t>(st.side.size());
  for (int pass = 0; pass < 50; ++pass) {
    bool improved = false;
    for (uint32_t i = 0; i < n; ++i) {
      const uint64_t before = st.crossing;
      st.flip(i);
      if (st.balanced() && st.crossing < before) {
        improved = true;
      } else {
        st.flip(i);
      }
    }
    std::vector<uint32_t> boundary;
    for (uint32_t i = 0; i < n; ++i) {
      for (uint32_t b : st.fam->incident[i]) {
        const uint32_t c1 = st.cnt1[b];
        const uint32_t sz = static_cast<uint32_t>(st.fam->members[b].size());
        if (c1 > 0 && c1 < sz) {
          boundary.push_back(i);
          break;
        }
      }
    }
    for (size_t u = 0; u < boundary.size(); ++u) {
      for (size_t v = u + 1; v < boundary.size(); ++v) {
        const uint32_t i = boundary[u], j = boundary[v];
        if (st.side[i] == st.side[j]) continue;
        const uint64_t before = st.crossing;
        st.flip(i);
        st.flip(j);
        if (st.balanced() && st.crossing < before) {
          improved = true;
        } else {
          st.flip(j);
          st.flip(i);
        }
      }
    }
    if (!improved) break;
  }
}

// Second-eigenfunction witness of the width-a ball kernel: dense spectral
// solve when affordable, certified gradient ascent otherwise.
std::vector<double> spectral_witness(const Net& net, double a, Exec exec) {
  const Kernel k = make_ball_kernel(borrow(net), a, exec);
  if (net.size() <= 1200) return poincare_exact_p2(k).witness_re;
  AscentOptions opt;
  opt.restarts = 2;
  opt.iters = 80;
  return poincare_lower_ascent(k, 2.0, opt, exec).witness_re;
}

}  // namespace

CoverReport vol_a(const Net& net, double a) {
  check_radius(a);
  CoverReport rep;
  rep.a = a;
  rep.cover_centers = greedy_centers(net, a);
  rep.covering_count = rep.cover_centers.size();
  rep.packing_count = rep.cover_centers.size();
  return rep;
}

SeparationUpper sep_upper(const Net& net, double a, Exec exec) {
  check_radius(a);
  const uint32_t n = net.size();
  if (n < 2)
    throw Error(ErrorKind::degenerate_domain,
                "separation needs at least two points");
  const Family fam = build_family(net, a);

  const std::vector<double> f = spectral_witness(net, a, exec);
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](uint32_t x, uint32_t y) {
    return f[x] != f[y] ? f[x] < f[y] : x < y;
  });
  std::vector<uint32_t> reversed(order.rbegin(), order.rend());

  // Candidate balanced starts: best cut of each sweep order, plus a split of
  // the family into low-index and high-index balls.
  std::vector<std::vector<uint8_t>> starts;
  for (const auto& ord : {order, reversed}) {
    const auto [cross, k] = best_sweep_cut(fam, ord);
    if (k > 0) {
      (void)cross;
      starts.push_back(cut_to_sides(ord, k));
    }
  }
  {
    const uint32_t half = static_cast<uint32_t>((fam.centers.size() + 1) / 2);
    std::vector<uint8_t> side(n, 0);
    for (uint32_t i = 0; i < n; ++i)
      if (!fam.incident[i].empty() && fam.incident[i][0] >= half) side[i] = 1;
    starts.push_back(std::move(side));
  }

  PartitionState best;
  bool have = false;
  for (auto& s : starts) {
    PartitionState st;
    st.reset(fam, std::move(s));
    if (!st.balanced()) continue;
    improve_partition(st);
    if (!have || st.crossing < best.crossing) {
      best = std::move(st);
      have = true;
    }
  }
  if (!have)
    throw Error(ErrorKind::degenerate_domain, "no balanced partition found");

  SeparationUpper rep;
  rep.a = a;
  rep.crossing = best.crossing;
  rep.side = std::move(best.side);
  rep.family = fam.centers;
  rep.vol_side0 = best.meets0;
  rep.vol_side1 = best.meets1;
  return rep;
}

uint64_t sep_exhaustive(const Net& net, double a) {
  check_radius(a);
  const uint32_t n = net.size();
  if (n > 20)
    throw Error(ErrorKind::size_cap,
                "exhaustive balanced partitions limited to 20 points");
  if (n < 2)
    throw Error(ErrorKind::degenerate_domain,
                "separation needs at least two points");
  const Family fam = build_family(net, a);
  const uint64_t v = fam.centers.size();
  std::vector<uint32_t> ball_mask(v, 0);
  for (size_t b = 0; b < v; ++b)
    for (uint32_t j : fam.members[b]) ball_mask[b] |= 1u << j;

  uint64_t best = std::numeric_limits<uint64_t>::max();
  const uint32_t full = (n == 32 ? ~0u : (1u << n) - 1);
  // Point 0 stays on side 0; complements are equivalent.
  for (uint32_t m = 1; m < (1u << (n - 1)); ++m) {
    const uint32_t side1 = m << 1;
    uint64_t meets0 = 0, meets1 = 0, crossing = 0;
    for (size_t b = 0; b < v; ++b) {
      const bool s1 = (ball_mask[b] & side1) != 0;
      const bool s0 = (ball_mask[b] & full & ~side1) != 0;
      meets0 += s0;
      meets1 += s1;
      crossing += s0 && s1;
    }
    if (3 * meets0 >= v && 3 * meets1 >= v) best = std::min(best, crossing);
  }
  if (best == std::numeric_limits<uint64_t>::max())
    throw Error(ErrorKind::degenerate_domain, "no balanced partition exists");
  return best;
}

SeparationLower sep_lower_poincare(const Net& net, double a, Exec exec) {
  check_radius(a);
  const Family fam = build_family(net, a);
  const double v = static_cast<double>(fam.centers.size());
  double tau = std::numeric_limits<double>::infinity();
  double big = 0.0;
  for (double m : fam.mass) {
    tau = std::min(tau, m);
    big = std::max(big, m);
  }
  size_t mult = 0;
  for (const auto& inc : fam.incident) mult = std::max(mult, inc.size());

  double c1 = 0.0;
  try {
    const Kernel k = make_ball_kernel(borrow(net), a, exec);
    c1 = poincare_lower_ascent(k, 1.0, {}, exec).lower;
  } catch (const Error& e) {
    throw Error(ErrorKind::no_c1_estimate, e.what());
  }
  if (!(c1 > 0.0) || !std::isfinite(c1))
    throw Error(ErrorKind::no_c1_estimate, "ascent produced no usable value");

  SeparationLower out;
  out.c1 = c1;
  out.s_factor = (1.0 + c1 * big * static_cast<double>(mult) / tau) / c1;
  out.value = v / (3.0 * c1 * out.s_factor);
  return out;
}

BoundCheck tree_bound_check(double S, double V_c, int d, double a,
                            double lambda, double c) {
  if (!(S > 0.0) || !(V_c > 0.0) || !(a > 0.0) || !(lambda > 0.0) ||
      !(c > 0.0) || d < 2)
    throw Error(ErrorKind::invalid_params,
                "tree bound needs positive inputs and degree >= 2");
  BoundCheck out;
  out.lhs = lambda * 2.0 * a + c;
  out.rhs = std::log(S / V_c) / std::log(static_cast<double>(d));
  out.slack = out.lhs - out.rhs;
  out.holds = out.slack >= 0.0;
  return out;
}

double volume_growth_lower_bound(double alpha, double lambda, double R) {
  if (!(alpha > 0.0) || !(lambda >= 1.0) || !(R > 0.0))
    throw Error(ErrorKind::invalid_params,
                "growth bound needs alpha > 0, lambda >= 1, R > 0");
  const auto g = [&](double c) {
    return alpha * std::log(c / lambda) + R - 2.0 * c -
           alpha * std::log(2.0 * lambda * R + c);
  };
  // g rises from -inf at 0+ to a single interior peak, then falls; the
  // threshold is the root on the falling branch.
  const double peak =
      lambda * R * (std::sqrt(1.0 + alpha / (lambda * R)) - 1.0);
  if (!(g(peak) > 0.0)) return 0.0;
  double lo = peak;
  double hi = std::max(2.0 * peak, R);
  while (g(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool connectivity_bound_check(double R, double lambda2, double c1, double c2) {
  if (!(R >= 0.0) || !(lambda2 >= 0.0) || !(c1 >= 0.0) || !(c2 >= 0.0))
    throw Error(ErrorKind::invalid_params,
                "connectivity bound needs nonnegative inputs");
  return R <= 12.0 * lambda2 * c1 + 4.0 * c2;
}

}  // namespace qilab

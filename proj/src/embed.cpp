#include "qilab/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "qilab/common.hpp"

namespace qilab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// One unordered pair of distances together with its point ids. For the upper
// constraint `a` is the domain distance and `b` the image distance; the lower
// constraint reuses the same machinery with the roles swapped.
struct BindingPoint {
  double a = 0.0;
  double b = 0.0;
  uint32_t i = 0;
  uint32_t j = 0;
};

// Drop every point (a, b) for which some other point has a' <= a and b' >= b:
// only the survivors can maximize b - lambda * a for some lambda >= 0. The
// result is strictly increasing in both coordinates; equal survivors keep the
// smallest (i, j).
void prune_binding(std::vector<BindingPoint>& pts) {
  std::sort(pts.begin(), pts.end(), [](const BindingPoint& x,
                                       const BindingPoint& y) {
    if (x.a != y.a) return x.a < y.a;
    if (x.b != y.b) return x.b > y.b;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<BindingPoint> kept;
  for (const BindingPoint& p : pts)
    if (kept.empty() || p.b > kept.back().b) kept.push_back(p);
  pts = std::move(kept);
}

// Upper concave chain of an a-increasing, b-increasing point list: the
// vertices attaining max(b - lambda * a) as lambda sweeps [0, inf).
std::vector<BindingPoint> upper_chain(const std::vector<BindingPoint>& pts) {
  std::vector<BindingPoint> hull;
  for (const BindingPoint& p : pts) {
    while (hull.size() >= 2) {
      const BindingPoint& u = hull[hull.size() - 2];
      const BindingPoint& v = hull.back();
      // Pop v unless the slope strictly decreases from (u,v) to (v,p).
      if ((v.b - u.b) * (p.a - v.a) <= (p.b - v.b) * (v.a - u.a))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  return hull;
}

struct SideSolution {
  double lam = 1.0;
  double c = 0.0;
  std::vector<BindingPoint> witnesses;
};

double additive_for(const std::vector<BindingPoint>& hull, double lam) {
  double need = 0.0;
  for (const BindingPoint& p : hull) need = std::max(need, p.b - lam * p.a);
  return std::max(0.0, need);
}

// Exact minimizer of the per-side cost over lambda >= 1, c >= 0 subject to
// b <= lambda * a + c for every binding point. The cost is piecewise linear
// in lambda, so the minimum sits at lambda = 1, at a chain slope, or at a
// kink of max(0, .) / of max(lambda, c); all of those are enumerated.
SideSolution solve_side(const std::vector<BindingPoint>& frontier,
                        Objective obj) {
  const std::vector<BindingPoint> hull = upper_chain(frontier);
  std::vector<double> cands = {1.0};
  for (size_t k = 1; k < hull.size(); ++k) {
    const double slope =
        (hull[k].b - hull[k - 1].b) / (hull[k].a - hull[k - 1].a);
    if (slope > 1.0) cands.push_back(slope);
  }
  for (const BindingPoint& p : hull) {
    if (p.a > 0.0 && p.b > p.a) cands.push_back(p.b / p.a);
    if (obj == Objective::max) {
      const double lam = p.b / (1.0 + p.a);
      if (lam > 1.0) cands.push_back(lam);
    }
  }

  SideSolution best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (const double lam : cands) {
    const double c = additive_for(hull, lam);
    const double cost = obj == Objective::sum ? lam + c : std::max(lam, c);
    if (cost < best_cost || (cost == best_cost && lam < best.lam)) {
      best_cost = cost;
      best.lam = lam;
      best.c = c;
    }
  }

  // Witnesses: the pairs attaining max(b - lambda * a). They are tight
  // against (lam, c) whenever c was not clamped at zero.
  double peak = -std::numeric_limits<double>::infinity();
  for (const BindingPoint& p : frontier)
    peak = std::max(peak, p.b - best.lam * p.a);
  const double tol = 1e-9 * std::max(1.0, std::abs(peak));
  for (const BindingPoint& p : frontier)
    if (p.b - best.lam * p.a >= peak - tol) best.witnesses.push_back(p);
  std::sort(best.witnesses.begin(), best.witnesses.end(),
            [](const BindingPoint& x, const BindingPoint& y) {
              if (x.i != y.i) return x.i < y.i;
              return x.j < y.j;
            });
  if (best.witnesses.size() > 8) best.witnesses.resize(8);
  return best;
}

int64_t pair_chunk_rows(uint32_t n) {
  // Aim for ~64k pairs per chunk so chunk merges stay cheap.
  const int64_t rows = (1 << 17) / std::max<uint32_t>(n, 1);
  return std::max<int64_t>(1, rows);
}

}  // namespace

void PointMap::validate() const {
  if (!domain || !codomain || domain->size() == 0)
    throw Error(ErrorKind::empty_map, "point map has no domain points");
  if (image.size() != domain->size())
    throw Error(ErrorKind::net_mismatch,
                "assignment size does not match the domain");
  for (const uint32_t v : image)
    if (v >= codomain->size())
      throw Error(ErrorKind::net_mismatch,
                  "assignment refers to a point outside the codomain");
}

DistortionReport measure_distortion(const PointMap& map, Objective objective,
                                    Exec exec) {
  map.validate();
  const Net& dom = *map.domain;
  const Net& img = *map.codomain;
  const uint32_t n = dom.size();
  if (n < 2)
    throw Error(ErrorKind::degenerate_domain,
                "need at least two domain points");

  struct Local {
    std::vector<BindingPoint> up, lo;
    double max_a = 0.0;
    bool bad = false;
  };
  const int64_t chunk = pair_chunk_rows(n);
  const int64_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<Local> locals(static_cast<size_t>(n_chunks));

  parallel_chunks(exec, n, chunk, [&](int64_t c, int64_t lo, int64_t hi) {
    Local& acc = locals[static_cast<size_t>(c)];
    for (int64_t i = lo; i < hi; ++i) {
      for (uint32_t j = static_cast<uint32_t>(i) + 1; j < n; ++j) {
        const uint32_t ii = static_cast<uint32_t>(i);
        const double a = dom.distance(ii, j);
        const double b = img.distance(map.image[ii], map.image[j]);
        if (!std::isfinite(a) || !std::isfinite(b)) {
          acc.bad = true;
          continue;
        }
        acc.max_a = std::max(acc.max_a, a);
        acc.up.push_back({a, b, ii, j});
        acc.lo.push_back({b, a, ii, j});
        if (acc.up.size() >= 16384) prune_binding(acc.up);
        if (acc.lo.size() >= 16384) prune_binding(acc.lo);
      }
    }
    prune_binding(acc.up);
    prune_binding(acc.lo);
  });

  std::vector<BindingPoint> up, lo;
  double max_a = 0.0;
  bool bad = false;
  for (const Local& acc : locals) {
    up.insert(up.end(), acc.up.begin(), acc.up.end());
    lo.insert(lo.end(), acc.lo.begin(), acc.lo.end());
    max_a = std::max(max_a, acc.max_a);
    bad = bad || acc.bad;
  }
  if (bad)
    throw Error(ErrorKind::disconnected,
                "infinite distance between mapped points");
  if (max_a == 0.0)
    throw Error(ErrorKind::degenerate_domain,
                "all domain distances are zero");
  prune_binding(up);
  prune_binding(lo);

  const SideSolution upper = solve_side(up, objective);
  const SideSolution lower = solve_side(lo, objective);

  DistortionReport rep;
  rep.objective = objective;
  rep.constants.lambda1 = upper.lam;
  rep.constants.c1 = upper.c;
  rep.constants.lambda2 = lower.lam;
  rep.constants.c2 = lower.c;
  rep.pairs_evaluated = static_cast<uint64_t>(n) * (n - 1) / 2;
  for (const BindingPoint& p : upper.witnesses)
    rep.upper_witnesses.push_back({p.i, p.j, p.a, p.b});
  for (const BindingPoint& p : lower.witnesses)
    rep.lower_witnesses.push_back({p.i, p.j, p.b, p.a});
  return rep;
}

QieCheck verify_qie(const PointMap& map, const QieConstants& k, double slack,
                    Exec exec) {
  map.validate();
  if (k.lambda1 < 1.0 || k.lambda2 < 1.0 || k.c1 < 0.0 || k.c2 < 0.0)
    throw Error(ErrorKind::invalid_params,
                "need lambda >= 1 and additive constants >= 0");
  const Net& dom = *map.domain;
  const Net& img = *map.codomain;
  const uint32_t n = dom.size();

  struct Worst {
    double excess = -std::numeric_limits<double>::infinity();
    WitnessPair pair;
    bool bad = false;
    bool any = false;
  };
  const int64_t chunk = pair_chunk_rows(n);
  const int64_t n_chunks = n == 0 ? 0 : (n + chunk - 1) / chunk;
  std::vector<Worst> locals(static_cast<size_t>(n_chunks));

  parallel_chunks(exec, n, chunk, [&](int64_t c, int64_t lo, int64_t hi) {
    Worst& acc = locals[static_cast<size_t>(c)];
    for (int64_t i = lo; i < hi; ++i) {
      for (uint32_t j = static_cast<uint32_t>(i) + 1; j < n; ++j) {
        const uint32_t ii = static_cast<uint32_t>(i);
        const double a = dom.distance(ii, j);
        const double b = img.distance(map.image[ii], map.image[j]);
        if (!std::isfinite(a) || !std::isfinite(b)) {
          acc.bad = true;
          continue;
        }
        const double over = b - (k.lambda1 * a + k.c1);
        const double under = (a - k.c2) / k.lambda2 - b;
        const double excess = std::max(over, under);
        if (!acc.any || excess > acc.excess) {
          acc.any = true;
          acc.excess = excess;
          acc.pair = {ii, j, a, b};
        }
      }
    }
  });

  QieCheck out;
  bool bad = false;
  bool any = false;
  for (const Worst& acc : locals) {
    bad = bad || acc.bad;
    if (!acc.any) continue;
    if (!any || acc.excess > out.worst_excess) {
      any = true;
      out.worst_excess = acc.excess;
      out.violation = acc.pair;
    }
  }
  if (bad)
    throw Error(ErrorKind::disconnected,
                "infinite distance between mapped points");
  if (!any) out.worst_excess = 0.0;
  out.ok = out.worst_excess <= slack;
  return out;
}

namespace {

struct BandPoint {
  double theta = 0.0;
  double r = 0.0;
  uint32_t id = 0;
};

// Visit entries of a theta-sorted list whose angle lies within `half` of
// `center` on the circle. The callback receives the entry index.
template <class F>
void for_angular_window(const std::vector<BandPoint>& pts, double center,
                        double half, F&& fn) {
  if (half >= kPi) {
    for (size_t idx = 0; idx < pts.size(); ++idx) fn(idx);
    return;
  }
  const auto scan = [&](double lo, double hi) {
    auto first = std::lower_bound(
        pts.begin(), pts.end(), lo,
        [](const BandPoint& p, double v) { return p.theta < v; });
    for (auto it = first; it != pts.end() && it->theta <= hi; ++it)
      fn(static_cast<size_t>(it - pts.begin()));
  };
  double lo = center - half, hi = center + half;
  if (lo < 0.0) {
    scan(0.0, hi);
    scan(lo + kTwoPi, kTwoPi);
  } else if (hi > kTwoPi) {
    scan(lo, kTwoPi);
    scan(0.0, hi - kTwoPi);
  } else {
    scan(lo, hi);
  }
}

// Any pair with angular gap above the returned half-window is farther apart
// than `dist` (both radii >= r_floor).
double capture_half_window(double dist, double r_floor) {
  if (r_floor <= 1e-12) return kPi;
  const double s = std::sinh(0.5 * dist) / std::sinh(r_floor);
  if (s >= 1.0) return kPi;
  return 2.0 * std::asin(s);
}

}  // namespace

SqrtTreeResult build_sqrt_tree_embedding(NetPtr h2net, double band_tol) {
  if (!h2net || h2net->kind != SpaceKind::h2)
    throw Error(ErrorKind::wrong_net,
                "generation tree needs a hyperbolic net");
  if (!(band_tol > 0.0))
    throw Error(ErrorKind::invalid_params, "band tolerance must be positive");
  const Net& net = *h2net;

  double R = 0.0;
  for (uint32_t i = 0; i < net.size(); ++i)
    R = std::max(R, net.point(i)[0]);
  if (R <= 0.0)
    throw Error(ErrorKind::invalid_params,
                "net radius is zero; nothing to embed");
  const double step = std::sqrt(R);
  const int generations = static_cast<int>(std::floor(step + 1e-9));

  SqrtTreeResult res;
  res.step = step;
  res.generation_offset = {0};

  std::vector<uint32_t> picked_ids;     // net ids in tree order
  std::vector<int32_t> parent, depth;
  std::vector<BandPoint> prev_sel;      // previous generation, theta-sorted
  std::vector<uint32_t> prev_tree_id;   // tree ids matching prev_sel order

  for (int k = 0; k <= generations; ++k) {
    const double target = k * step;
    std::vector<BandPoint> band;
    double band_r_floor = std::numeric_limits<double>::infinity();
    for (uint32_t i = 0; i < net.size(); ++i) {
      const double r = net.point(i)[0];
      if (std::abs(r - target) > band_tol) continue;
      band.push_back({net.point(i)[1], r, i});
      band_r_floor = std::min(band_r_floor, r);
    }
    if (band.empty())
      throw Error(ErrorKind::empty_generation,
                  "no net points within tolerance of sphere " +
                      std::to_string(k));
    std::sort(band.begin(), band.end(),
              [](const BandPoint& x, const BandPoint& y) {
                if (x.theta != y.theta) return x.theta < y.theta;
                if (x.r != y.r) return x.r < y.r;
                return x.id < y.id;
              });

    // Greedy maximal step-separated subset, scanned in angle order.
    const double greedy_half = capture_half_window(step, band_r_floor);
    std::vector<BandPoint> sel;
    for (const BandPoint& p : band) {
      bool blocked = false;
      for_angular_window(sel, p.theta, greedy_half, [&](size_t at) {
        const BandPoint& s = sel[at];
        if (!blocked && h2_distance({p.r, p.theta}, {s.r, s.theta}) < step)
          blocked = true;
      });
      if (!blocked) sel.push_back(p);
    }

    // Attach parents: nearest previous-generation point, ties to the
    // smallest id. Extra generation-0 points attach to the first.
    const uint32_t base = static_cast<uint32_t>(picked_ids.size());
    for (size_t s = 0; s < sel.size(); ++s) {
      picked_ids.push_back(sel[s].id);
      if (k == 0) {
        parent.push_back(s == 0 ? -1 : 0);
        depth.push_back(s == 0 ? 0 : 1);
        continue;
      }
      double prev_floor = std::numeric_limits<double>::infinity();
      for (const BandPoint& q : prev_sel) prev_floor = std::min(prev_floor, q.r);
      double best = std::numeric_limits<double>::infinity();
      uint32_t best_tree = 0;
      bool found = false;
      double half = kPi / 16.0;
      while (true) {
        best = std::numeric_limits<double>::infinity();
        found = false;
        for_angular_window(prev_sel, sel[s].theta, half, [&](size_t at) {
          const BandPoint& q = prev_sel[at];
          const double d =
              h2_distance({sel[s].r, sel[s].theta}, {q.r, q.theta});
          const uint32_t tid = prev_tree_id[at];
          if (!found || d < best || (d == best && tid < best_tree)) {
            found = true;
            best = d;
            best_tree = tid;
          }
        });
        const bool full = half >= kPi;
        if (found && !full) {
          const double floor_out =
              2.0 * std::asinh(std::sin(std::min(half, kPi) / 2.0) *
                               std::sinh(std::max(prev_floor, 0.0)));
          if (floor_out > best) break;
        }
        if (full) break;
        half = std::min(kPi, half * 2.0);
      }
      parent.push_back(static_cast<int32_t>(best_tree));
      depth.push_back(depth[best_tree] + 1);
    }
    res.generation_offset.push_back(static_cast<uint32_t>(picked_ids.size()));

    prev_sel = std::move(sel);
    prev_tree_id.resize(prev_sel.size());
    for (size_t s = 0; s < prev_sel.size(); ++s)
      prev_tree_id[s] = base + static_cast<uint32_t>(s);
  }

  const uint32_t m = static_cast<uint32_t>(picked_ids.size());
  auto tree = std::make_shared<Net>();
  tree->kind = SpaceKind::tree;
  tree->oracle = OracleKind::closed_form;
  tree->params.R = static_cast<double>(generations);
  tree->n_points = m;
  tree->coord_dim = 0;
  tree->weight.assign(m, 1.0);
  tree->tree_parent = std::move(parent);
  tree->tree_depth = std::move(depth);
  for (uint32_t i = 0; i < m; ++i)
    if (tree->tree_parent[i] >= 0)
      tree->edges.push_back(
          {static_cast<uint32_t>(tree->tree_parent[i]), i, 1.0});
  tree->build_adjacency();

  res.tree = tree;
  res.positions = make_h2_subnet(net, picked_ids);
  res.map.domain = res.tree;
  res.map.codomain = res.positions;
  res.map.image.resize(m);
  for (uint32_t i = 0; i < m; ++i) res.map.image[i] = i;
  return res;
}

double generation_radius(int degree, int k) {
  if (degree < 3)
    throw Error(ErrorKind::invalid_params, "degree must be at least 3");
  if (k <= 0) return 0.0;
  const double load =
      std::log(degree + 1.0) + k * std::log(static_cast<double>(degree));
  const double s = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * load));
  return s * s;
}

TreeToH2Result build_tree_to_h2(int degree, int R, uint64_t size_cap) {
  TreeToH2Result res;
  res.tree = build_tree_ball(degree, R, size_cap);
  const Net& tree = *res.tree;
  const uint32_t n = tree.size();

  res.generation_radii.resize(static_cast<size_t>(R) + 1);
  for (int k = 0; k <= R; ++k)
    res.generation_radii[static_cast<size_t>(k)] = generation_radius(degree, k);

  // Capacity-slot placement: the circle at radius R_k holds (d+1)*d^k
  // angular slots (that count is what the radius equation matches), so the
  // slot width shrinks by the degree each generation. Children occupy a
  // centered block of consecutive slots under their parent, keeping every
  // subtree angularly contiguous while consecutive same-generation points
  // stay ~sqrt(R_k) apart instead of drifting to circle-diameter scale.
  std::vector<double> center(n, 0.0);
  center[0] = kPi;
  std::vector<uint32_t> child_count(n, 0);
  for (uint32_t i = 1; i < n; ++i)
    ++child_count[static_cast<uint32_t>(tree.tree_parent[i])];
  std::vector<uint32_t> next_slot(n, 0);
  for (uint32_t i = 1; i < n; ++i) {
    const uint32_t p = static_cast<uint32_t>(tree.tree_parent[i]);
    const int32_t k = tree.tree_depth[i];
    const double slot =
        kTwoPi / ((degree + 1) * std::pow(static_cast<double>(degree), k));
    const double block = 0.5 * (child_count[p] - 1.0);
    center[i] = center[p] + (next_slot[p] - block) * slot;
    ++next_slot[p];
  }

  auto image = std::make_shared<Net>();
  image->kind = SpaceKind::h2;
  image->oracle = OracleKind::closed_form;
  image->params.R = res.generation_radii.back();
  image->n_points = n;
  image->coord_dim = 2;
  image->coords.resize(static_cast<size_t>(n) * 2);
  image->weight.assign(n, 1.0);
  for (uint32_t i = 0; i < n; ++i) {
    const int32_t d = tree.tree_depth[i];
    image->coords[2 * i] = res.generation_radii[static_cast<size_t>(d)];
    image->coords[2 * i + 1] = i == 0 ? 0.0 : center[i];
  }

  res.image = image;
  res.map.domain = res.tree;
  res.map.codomain = res.image;
  res.map.image.resize(n);
  for (uint32_t i = 0; i < n; ++i) res.map.image[i] = i;
  return res;
}

PointMap radial_extension(
    NetPtr domain, NetPtr codomain,
    const std::function<void(std::span<const double>, std::span<double>)>&
        theta_forward) {
  if (!domain || !codomain)
    throw Error(ErrorKind::empty_map, "radial extension needs both nets");
  const Net& dom = *domain;
  const Net& cod = *codomain;
  if (dom.kind != cod.kind ||
      (dom.kind != SpaceKind::zmu && dom.kind != SpaceKind::h2))
    throw Error(ErrorKind::wrong_net,
                "radial extension needs two exponential or two hyperbolic nets");

  PointMap out;
  out.domain = domain;
  out.codomain = codomain;
  out.image.resize(dom.size());

  if (dom.kind == SpaceKind::zmu) {
    if (dom.params.mu.size() != cod.params.mu.size() ||
        dom.params.cover != cod.params.cover)
      throw Error(ErrorKind::boundary_map_undefined,
                  "boundary tori of the two nets do not match");
    std::vector<double> mapped(cod.params.mu.size());
    for (uint32_t i = 0; i < dom.size(); ++i) {
      const auto p = dom.point(i);
      theta_forward(p.subspan(1), mapped);
      for (const double v : mapped)
        if (!std::isfinite(v))
          throw Error(ErrorKind::boundary_map_undefined,
                      "direction map produced a non-finite coordinate");
      out.image[i] = zmu_snap(cod, p[0], mapped);
    }
    return out;
  }

  // Hyperbolic case: one boundary coordinate, the angle.
  if (cod.h2_circles.size() < 1)
    throw Error(ErrorKind::wrong_net,
                "codomain lacks the circle structure needed for snapping");
  const double eps =
      cod.h2_circles.size() > 1 ? cod.h2_circles[1].r : cod.params.R + 1.0;
  double angle_out = 0.0;
  for (uint32_t i = 0; i < dom.size(); ++i) {
    const auto p = dom.point(i);
    std::span<double> ospan(&angle_out, 1);
    theta_forward(p.subspan(1), ospan);
    if (!std::isfinite(angle_out))
      throw Error(ErrorKind::boundary_map_undefined,
                  "direction map produced a non-finite angle");
    size_t circle = static_cast<size_t>(
        std::clamp<long long>(std::llround(p[0] / eps), 0,
                              static_cast<long long>(cod.h2_circles.size()) - 1));
    const H2Circle& c = cod.h2_circles[circle];
    if (c.count == 1) {
      out.image[i] = c.offset;
      continue;
    }
    long long j = std::llround(angle_out / c.dtheta);
    j %= static_cast<long long>(c.count);
    if (j < 0) j += c.count;
    out.image[i] = c.offset + static_cast<uint32_t>(j);
  }
  return out;
}

}  // namespace qilab

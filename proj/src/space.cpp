#include "qilab/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace qilab {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest k >= 0 with 2^k * unit >= y/unit... exact integer adjustment after
// a floating first guess.
int ceil_log2_ratio(double y) {
  if (y <= 1.0) return 0;
  int k = static_cast<int>(std::ceil(std::log2(y)));
  while (std::ldexp(1.0, k) < y) ++k;
  while (k > 0 && std::ldexp(1.0, k - 1) >= y) --k;
  return k;
}

}  // namespace

const char* to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::h2: return "h2";
    case SpaceKind::tree: return "tree";
    case SpaceKind::zmu: return "zmu";
    case SpaceKind::graph: return "graph";
  }
  return "unknown";
}

void SpaceParams::validate_zmu() const {
  if (mu.empty())
    throw Error(ErrorKind::invalid_params, "exponent vector is empty");
  for (size_t i = 0; i < mu.size(); ++i) {
    if (!(mu[i] > 0.0))
      throw Error(ErrorKind::invalid_params, "exponents must be positive");
    if (i > 0 && mu[i] < mu[i - 1])
      throw Error(ErrorKind::invalid_params, "exponents must be ascending");
  }
  if (!(mesh > 0.0)) throw Error(ErrorKind::invalid_params, "mesh must be positive");
  if (!(R >= 0.0)) throw Error(ErrorKind::invalid_params, "radius must be nonnegative");
  if (!(delta >= 0.0)) throw Error(ErrorKind::invalid_params, "delta must be nonnegative");
}

double h2_distance(const PointH2& p, const PointH2& q) {
  const double dtheta = circle_distance(p.theta, q.theta, kTwoPi);
  const double sh_half_dr = std::sinh(0.5 * (p.r - q.r));
  const double s = std::sin(0.5 * dtheta);
  const double inside = sh_half_dr * sh_half_dr +
                        std::sinh(p.r) * std::sinh(q.r) * s * s;
  return 2.0 * std::asinh(std::sqrt(std::max(0.0, inside)));
}

double circle_distance(double a, double b, double period) {
  double d = std::fmod(std::fabs(a - b), period);
  return std::min(d, period - d);
}

double zmu_visual_distance(std::span<const double> a, std::span<const double> b,
                           std::span<const double> mu, double period_last) {
  double best = 0.0;
  for (size_t i = 0; i < mu.size(); ++i) {
    const double period = (i + 1 == mu.size()) ? period_last : 1.0;
    const double dc = circle_distance(a[i], b[i], period);
    const double v = dc > 0.0 ? std::pow(dc, 1.0 / mu[i]) : 0.0;
    best = std::max(best, v);
  }
  return best;
}

double radial_distance_formula(double t1, double t2, double t_inf) {
  const double m = std::min(std::min(t1, t2), t_inf);
  return t1 + t2 - 2.0 * m;
}

double zmu_distance(const PointZ& p, const PointZ& q, std::span<const double> mu,
                    double period_last) {
  const double vis = zmu_visual_distance(p.x, q.x, mu, period_last);
  const double t_inf = vis > 0.0 ? -std::log(vis) : kInf;
  return radial_distance_formula(p.t, q.t, t_inf);
}

double Net::total_measure() const {
  double s = 0.0;
  for (double w : weight) s += w;
  return s;
}

namespace {

double tree_distance(const Net& net, uint32_t i, uint32_t j) {
  int32_t a = static_cast<int32_t>(i), b = static_cast<int32_t>(j);
  int32_t da = net.tree_depth[a], db = net.tree_depth[b];
  double d = 0.0;
  while (da > db) { a = net.tree_parent[a]; --da; d += 1.0; }
  while (db > da) { b = net.tree_parent[b]; --db; d += 1.0; }
  while (a != b) {
    a = net.tree_parent[a];
    b = net.tree_parent[b];
    d += 2.0;
  }
  return d;
}

}  // namespace

double Net::distance(uint32_t i, uint32_t j) const {
  if (i == j) return 0.0;
  switch (oracle) {
    case OracleKind::closed_form: {
      if (kind == SpaceKind::h2) {
        const auto p = point(i), q = point(j);
        return h2_distance({p[0], p[1]}, {q[0], q[1]});
      }
      return tree_distance(*this, i, j);
    }
    case OracleKind::radial_formula: {
      const auto p = point(i), q = point(j);
      const std::span<const double> mu(params.mu);
      const std::span<const double> px(p.data() + 1, mu.size());
      const std::span<const double> qx(q.data() + 1, mu.size());
      const double vis = zmu_visual_distance(px, qx, mu, period_last());
      const double t_inf = vis > 0.0 ? -std::log(vis) : kInf;
      return radial_distance_formula(p[0], q[0], t_inf);
    }
    case OracleKind::graph_shortest_path:
      return graph_dist[static_cast<size_t>(i) * n_points + j];
  }
  return 0.0;
}

void Net::build_adjacency() {
  adj_offset.assign(n_points + 1, 0);
  for (const Edge& e : edges) {
    ++adj_offset[e.src + 1];
    ++adj_offset[e.dst + 1];
  }
  for (uint32_t i = 0; i < n_points; ++i) adj_offset[i + 1] += adj_offset[i];
  adj_neighbor.assign(adj_offset.back(), 0);
  adj_length.assign(adj_offset.back(), 0.0);
  std::vector<uint64_t> cursor(adj_offset.begin(), adj_offset.end() - 1);
  for (const Edge& e : edges) {
    adj_neighbor[cursor[e.src]] = e.dst;
    adj_length[cursor[e.src]++] = e.length;
    adj_neighbor[cursor[e.dst]] = e.src;
    adj_length[cursor[e.dst]++] = e.length;
  }
  // Sort each neighbor list for deterministic iteration order.
  for (uint32_t i = 0; i < n_points; ++i) {
    const uint64_t lo = adj_offset[i], hi = adj_offset[i + 1];
    std::vector<std::pair<uint32_t, double>> nbrs;
    nbrs.reserve(hi - lo);
    for (uint64_t k = lo; k < hi; ++k) nbrs.emplace_back(adj_neighbor[k], adj_length[k]);
    std::sort(nbrs.begin(), nbrs.end());
    for (uint64_t k = lo; k < hi; ++k) {
      adj_neighbor[k] = nbrs[k - lo].first;
      adj_length[k] = nbrs[k - lo].second;
    }
  }
}

// ---------------------------------------------------------------------------
// Hyperbolic-plane net
// ---------------------------------------------------------------------------

namespace {

// Angular step realizing chord `eps` on the circle of radius r (r > 0).
double h2_angular_step(double r, double eps) {
  const double x = std::sinh(0.5 * eps) / std::sinh(r);
  if (x >= 1.0) return kTwoPi;  // circle too small for two separated points
  return 2.0 * std::asin(x);
}

struct H2Plan {
  std::vector<H2Circle> circles;
  uint64_t total = 0;
};

H2Plan plan_h2_net(double R, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::invalid_params, "eps must be positive");
  if (!(R >= 0.0)) throw Error(ErrorKind::invalid_params, "R must be nonnegative");
  H2Plan plan;
  const int K = static_cast<int>(std::floor(R / eps + 1e-9));
  uint32_t offset = 0;
  for (int k = 0; k <= K; ++k) {
    const double r = k * eps;
    uint32_t count = 1;
    double dtheta = kTwoPi;
    if (k > 0) {
      const double step = h2_angular_step(r, eps);
      if (step < kTwoPi) {
        count = std::max<uint32_t>(1, static_cast<uint32_t>(std::floor(kTwoPi / step)));
        dtheta = kTwoPi / count;
      }
    }
    plan.circles.push_back({r, offset, count, dtheta});
    offset += count;
    plan.total += count;
  }
  return plan;
}

}  // namespace

uint64_t predict_h2_net_size(double R, double eps) { return plan_h2_net(R, eps).total; }

NetPtr build_h2_net(double R, double eps, uint64_t size_cap) {
  H2Plan plan = plan_h2_net(R, eps);
  if (plan.total > size_cap) {
    std::ostringstream msg;
    msg << "hyperbolic net at R=" << R << ", eps=" << eps << " needs "
        << plan.total << " points, cap " << size_cap << " (mesh too fine)";
    throw Error(ErrorKind::size_cap, msg.str());
  }
  auto net = std::make_shared<Net>();
  net->kind = SpaceKind::h2;
  net->oracle = OracleKind::closed_form;
  net->params.R = R;
  net->params.mesh = eps;
  net->params.size_cap = size_cap;
  net->h2_circles = plan.circles;
  net->n_points = static_cast<uint32_t>(plan.total);
  net->coord_dim = 2;
  net->coords.resize(plan.total * 2);
  net->weight.resize(plan.total);

  for (const H2Circle& c : net->h2_circles) {
    const double lo = std::max(0.0, c.r - 0.5 * eps);
    const double hi = std::min(R, c.r + 0.5 * eps);
    const double ring_area = kTwoPi * (std::cosh(hi) - std::cosh(lo));
    const double w = std::max(ring_area / c.count, 1e-300);
    for (uint32_t j = 0; j < c.count; ++j) {
      net->coords[(c.offset + j) * 2] = c.r;
      net->coords[(c.offset + j) * 2 + 1] = j * c.dtheta;
      net->weight[c.offset + j] = w;
    }
  }

  // Adjacency: all pairs within 3*eps, found via angular windows.
  const double w_adj = 3.0 * eps;
  for (size_t ci = 0; ci < net->h2_circles.size(); ++ci) {
    const H2Circle& a = net->h2_circles[ci];
    for (uint32_t j = 0; j < a.count; ++j) {
      const uint32_t id_a = a.offset + j;
      const PointH2 pa{a.r, j * a.dtheta};
      for (size_t cj = ci; cj < net->h2_circles.size(); ++cj) {
        const H2Circle& b = net->h2_circles[cj];
        if (b.r - a.r > w_adj + 1e-12) break;
        if (b.count == 1) {
          const uint32_t id_b = b.offset;
          if (id_b > id_a) {
            const double d = h2_distance(pa, {b.r, 0.0});
            if (d <= w_adj + 1e-12) net->edges.push_back({id_a, id_b, d});
          }
          continue;
        }
        const double sh2 = std::sinh(0.5 * w_adj) * std::sinh(0.5 * w_adj) -
                           std::sinh(0.5 * (b.r - a.r)) * std::sinh(0.5 * (b.r - a.r));
        if (sh2 < 0.0) continue;
        double sin2 = sh2 / (std::sinh(a.r > 0 ? a.r : 1.0) * std::sinh(b.r));
        if (a.r == 0.0) sin2 = 1.0;  // center connects to whole small circles
        double dtheta_max = sin2 >= 1.0 ? M_PI : 2.0 * std::asin(std::sqrt(sin2));
        const int64_t lo = static_cast<int64_t>(
            std::floor((pa.theta - dtheta_max) / b.dtheta));
        const int64_t hi = static_cast<int64_t>(
            std::ceil((pa.theta + dtheta_max) / b.dtheta));
        const int64_t span = hi - lo + 1;
        const int64_t count = std::min<int64_t>(span, b.count);
        for (int64_t s = 0; s < count; ++s) {
          int64_t jj = (lo + s) % static_cast<int64_t>(b.count);
          if (jj < 0) jj += b.count;
          const uint32_t id_b = b.offset + static_cast<uint32_t>(jj);
          if (id_b <= id_a) continue;
          const double d = h2_distance(pa, {b.r, jj * b.dtheta});
          if (d <= w_adj + 1e-12) net->edges.push_back({id_a, id_b, d});
        }
      }
    }
  }
  std::sort(net->edges.begin(), net->edges.end(), [](const Edge& x, const Edge& y) {
    return std::pair(x.src, x.dst) < std::pair(y.src, y.dst);
  });
  net->edges.erase(std::unique(net->edges.begin(), net->edges.end(),
                               [](const Edge& x, const Edge& y) {
                                 return x.src == y.src && x.dst == y.dst;
                               }),
                   net->edges.end());
  net->build_adjacency();

  // Distance to the nearest ray through an outermost-circle direction.
  const H2Circle& outer = net->h2_circles.back();
  double gap = 0.0;
  for (uint32_t i = 0; i < net->n_points; ++i) {
    const double r = net->coords[i * 2];
    if (r == 0.0) continue;
    const double theta = net->coords[i * 2 + 1];
    double dth;
    if (outer.count == 1) {
      dth = circle_distance(theta, 0.0, kTwoPi);
    } else {
      const double rel = theta / outer.dtheta;
      const double frac = rel - std::floor(rel);
      dth = std::min(frac, 1.0 - frac) * outer.dtheta;
    }
    const double d = std::asinh(std::sinh(r) * std::sin(std::min(dth, 0.5 * M_PI)));
    gap = std::max(gap, d);
  }
  net->ray_gap = gap;
  return net;
}

// ---------------------------------------------------------------------------
// Regular-tree ball
// ---------------------------------------------------------------------------

uint64_t tree_ball_count(int degree, int R) {
  if (degree < 3) throw Error(ErrorKind::invalid_params, "tree degree must be >= 3");
  if (R < 0) throw Error(ErrorKind::invalid_params, "tree radius must be >= 0");
  // 1 + d * ((d-1)^R - 1)/(d-2), guarded against overflow.
  const double approx = 1.0 + degree * (std::pow(degree - 1.0, R) - 1.0) / (degree - 2.0);
  if (approx > 4e18) return UINT64_MAX;
  uint64_t pw = 1;
  for (int i = 0; i < R; ++i) pw *= static_cast<uint64_t>(degree - 1);
  return 1 + static_cast<uint64_t>(degree) * (pw - 1) / static_cast<uint64_t>(degree - 2);
}

NetPtr build_tree_ball(int degree, int R, uint64_t size_cap) {
  const uint64_t count = tree_ball_count(degree, R);
  if (count > size_cap) {
    std::ostringstream msg;
    msg << "tree ball of degree " << degree << ", radius " << R << " needs "
        << count << " points, cap " << size_cap;
    throw Error(ErrorKind::size_cap, msg.str());
  }
  auto net = std::make_shared<Net>();
  net->kind = SpaceKind::tree;
  net->oracle = OracleKind::closed_form;
  net->params.R = R;
  net->params.degree = degree;
  net->params.size_cap = size_cap;
  net->n_points = static_cast<uint32_t>(count);
  net->coord_dim = 0;
  net->weight.assign(count, 1.0);
  net->tree_parent.reserve(count);
  net->tree_depth.reserve(count);
  net->tree_parent.push_back(-1);
  net->tree_depth.push_back(0);
  // Breadth-first ids: children of node i are contiguous.
  uint32_t next = 1;
  for (uint32_t i = 0; i < count && next < count; ++i) {
    const int n_children = net->tree_depth[i] == 0 ? degree : degree - 1;
    for (int c = 0; c < n_children && next < count; ++c) {
      if (net->tree_depth[i] >= R) break;
      net->tree_parent.push_back(static_cast<int32_t>(i));
      net->tree_depth.push_back(net->tree_depth[i] + 1);
      net->edges.push_back({i, next, 1.0});
      ++next;
    }
  }
  net->build_adjacency();
  return net;
}

// ---------------------------------------------------------------------------
// Exponential-metric net
// ---------------------------------------------------------------------------

namespace {

struct ZmuPlan {
  std::vector<ZmuLevel> levels;
  uint64_t total = 0;
};

ZmuPlan plan_zmu_net(const SpaceParams& params) {
  params.validate_zmu();
  ZmuPlan plan;
  const size_t n = params.mu.size();
  const int K = static_cast<int>(std::floor(params.R / params.mesh + 1e-9));
  uint32_t offset = 0;
  for (int k = 0; k <= K; ++k) {
    const double t = k * params.mesh;
    ZmuLevel level;
    level.t = t;
    level.offset = offset;
    level.counts.resize(n);
    level.spacing.resize(n);
    uint64_t level_count = 1;
    for (size_t i = 0; i < n; ++i) {
      const double target = std::exp(params.mu[i] * t) / params.mesh;
      const int b = ceil_log2_ratio(target);
      const uint64_t per_unit = static_cast<uint64_t>(1) << b;
      const double period = (i + 1 == n) ? (params.cover ? 2.0 : 1.0) : 1.0;
      const uint64_t cnt = static_cast<uint64_t>(period) * per_unit;
      level.counts[i] = static_cast<uint32_t>(cnt);
      level.spacing[i] = 1.0 / static_cast<double>(per_unit);
      level_count *= cnt;
      if (level_count > (uint64_t(1) << 62)) throw Error(ErrorKind::size_cap, "level overflow");
    }
    plan.total += level_count;
    if (plan.total > (uint64_t(1) << 62)) throw Error(ErrorKind::size_cap, "net overflow");
    offset = static_cast<uint32_t>(std::min<uint64_t>(plan.total, UINT32_MAX));
    plan.levels.push_back(std::move(level));
  }
  return plan;
}

uint64_t level_size(const ZmuLevel& level) {
  uint64_t s = 1;
  for (uint32_t c : level.counts) s *= c;
  return s;
}

}  // namespace

uint64_t predict_zmu_net_size(const SpaceParams& params) {
  return plan_zmu_net(params).total;
}

namespace {

constexpr double kBallTol = 1e-12;

void ball_scan_h2(const Net& net, uint32_t center, double radius,
                  const std::function<void(uint32_t, double)>& fn) {
  const double r_a = net.coords[center * 2];
  const double theta = net.coords[center * 2 + 1];
  const PointH2 pa{r_a, theta};
  for (const H2Circle& b : net.h2_circles) {
    if (std::abs(b.r - r_a) > radius + kBallTol) continue;
    const auto emit = [&](uint32_t id, const PointH2& pb) {
      const double d = id == center ? 0.0 : h2_distance(pa, pb);
      if (d <= radius + kBallTol) fn(id, d);
    };
    if (b.count == 1 || r_a == 0.0) {
      for (uint32_t j = 0; j < b.count; ++j)
        emit(b.offset + j, {b.r, j * b.dtheta});
      continue;
    }
    // Angular half-window capturing all points within `radius` (padded, then
    // filtered exactly).
    const double pad = radius + 1e-9;
    const double sh2 = std::sinh(0.5 * pad) * std::sinh(0.5 * pad) -
                       std::sinh(0.5 * (b.r - r_a)) * std::sinh(0.5 * (b.r - r_a));
    if (sh2 < 0.0) continue;
    const double sin2 = b.r > 0.0 ? sh2 / (std::sinh(r_a) * std::sinh(b.r)) : 1.0;
    const double half = sin2 >= 1.0 ? M_PI : 2.0 * std::asin(std::sqrt(sin2));
    const int64_t lo = static_cast<int64_t>(std::floor((theta - half) / b.dtheta));
    const int64_t hi = static_cast<int64_t>(std::ceil((theta + half) / b.dtheta));
    const int64_t span = std::min<int64_t>(hi - lo + 1, b.count);
    for (int64_t s = 0; s < span; ++s) {
      int64_t j = (lo + s) % static_cast<int64_t>(b.count);
      if (j < 0) j += b.count;
      emit(b.offset + static_cast<uint32_t>(j), {b.r, j * b.dtheta});
    }
  }
}

void ball_scan_zmu(const Net& net, uint32_t center, double radius,
                   const std::function<void(uint32_t, double)>& fn) {
  const auto p = net.point(center);
  const double t1 = p[0];
  const size_t n = net.params.mu.size();
  for (uint32_t k = 0; k < net.zmu_levels.size(); ++k) {
    const ZmuLevel& lv = net.zmu_levels[k];
    if (std::abs(lv.t - t1) > radius + kBallTol) continue;
    // Pairs meet no lower than tau; directions must separate by < e^-tau.
    const double tau = 0.5 * (t1 + lv.t - radius) - 1e-9;
    std::vector<int64_t> lo(n), len(n);
    std::vector<uint32_t> idx(n);
    uint64_t total = 1;
    for (size_t i = 0; i < n; ++i) {
      const int64_t cnt = lv.counts[i];
      const double period = (i + 1 == n) ? net.period_last() : 1.0;
      const double bound = tau <= 0.0 ? period : std::exp(-net.params.mu[i] * tau);
      if (bound >= 0.5 * period) {
        lo[i] = 0;
        len[i] = cnt;
      } else {
        const int64_t a = static_cast<int64_t>(std::floor((p[1 + i] - bound) / lv.spacing[i]));
        const int64_t b = static_cast<int64_t>(std::ceil((p[1 + i] + bound) / lv.spacing[i]));
        lo[i] = a;
        len[i] = std::min<int64_t>(b - a + 1, cnt);
      }
      total *= static_cast<uint64_t>(len[i]);
    }
    std::vector<int64_t> step(n, 0);
    for (uint64_t c = 0; c < total; ++c) {
      for (size_t i = 0; i < n; ++i) {
        int64_t j = (lo[i] + step[i]) % static_cast<int64_t>(lv.counts[i]);
        if (j < 0) j += lv.counts[i];
        idx[i] = static_cast<uint32_t>(j);
      }
      const uint32_t id = zmu_point_id(net, k, idx);
      const double d = id == center ? 0.0 : net.distance(center, id);
      if (d <= radius + kBallTol) fn(id, d);
      for (size_t i = n; i-- > 0;) {
        if (++step[i] < len[i]) break;
        step[i] = 0;
      }
    }
  }
}

void ball_scan_bfs(const Net& net, uint32_t center, double radius,
                   const std::function<void(uint32_t, double)>& fn) {
  // Unit-edge breadth-first search (tree nets).
  const int max_depth = static_cast<int>(std::floor(radius + kBallTol));
  if (max_depth < 0) return;
  std::vector<uint32_t> frontier = {center};
  std::vector<int8_t> seen(net.n_points, 0);
  seen[center] = 1;
  fn(center, 0.0);
  for (int depth = 1; depth <= max_depth && !frontier.empty(); ++depth) {
    std::vector<uint32_t> next;
    for (uint32_t u : frontier) {
      for (uint64_t e = net.adj_offset[u]; e < net.adj_offset[u + 1]; ++e) {
        const uint32_t v = net.adj_neighbor[e];
        if (seen[v]) continue;
        seen[v] = 1;
        fn(v, static_cast<double>(depth));
        next.push_back(v);
      }
    }
    frontier = std::move(next);
  }
}

}  // namespace

void for_each_in_ball(const Net& net, uint32_t center, double radius,
                      const std::function<void(uint32_t, double)>& fn) {
  if (center >= net.n_points)
    throw Error(ErrorKind::invalid_params, "ball center out of range");
  if (net.kind == SpaceKind::h2 && !net.h2_circles.empty()) {
    ball_scan_h2(net, center, radius, fn);
    return;
  }
  if (net.kind == SpaceKind::zmu && !net.zmu_levels.empty()) {
    ball_scan_zmu(net, center, radius, fn);
    return;
  }
  if (net.kind == SpaceKind::tree) {
    ball_scan_bfs(net, center, radius, fn);
    return;
  }
  if (net.oracle == OracleKind::graph_shortest_path && !net.graph_dist.empty()) {
    const double* row = net.graph_dist.data() + static_cast<size_t>(center) * net.n_points;
    for (uint32_t j = 0; j < net.n_points; ++j)
      if (row[j] <= radius + kBallTol) fn(j, row[j]);
    return;
  }
  for (uint32_t j = 0; j < net.n_points; ++j) {
    const double d = net.distance(center, j);
    if (d <= radius + kBallTol) fn(j, d);
  }
}

uint32_t zmu_point_id(const Net& net, uint32_t level, std::span<const uint32_t> index) {
  const ZmuLevel& lv = net.zmu_levels[level];
  uint64_t id = 0;
  for (size_t i = 0; i < lv.counts.size(); ++i) id = id * lv.counts[i] + index[i];
  return lv.offset + static_cast<uint32_t>(id);
}

NetPtr build_zmu_net(const SpaceParams& params) {
  ZmuPlan plan = plan_zmu_net(params);
  if (plan.total > params.size_cap) {
    std::ostringstream msg;
    msg << "exponential-metric net (R=" << params.R << ", mesh=" << params.mesh
        << ", n=" << params.mu.size() << (params.cover ? ", cover" : "")
        << ") needs " << plan.total << " points, cap " << params.size_cap;
    throw Error(ErrorKind::size_cap, msg.str());
  }
  auto net = std::make_shared<Net>();
  net->kind = SpaceKind::zmu;
  net->oracle = OracleKind::radial_formula;
  net->params = params;
  net->zmu_levels = plan.levels;
  net->n_points = static_cast<uint32_t>(plan.total);
  const size_t n = params.mu.size();
  net->coord_dim = static_cast<int>(n) + 1;
  net->coords.resize(plan.total * net->coord_dim);
  net->weight.resize(plan.total);

  double mu_sum = 0.0;
  for (double m : params.mu) mu_sum += m;

  double raw_total = 0.0;
  std::vector<uint32_t> idx(n);
  for (const ZmuLevel& lv : net->zmu_levels) {
    const uint64_t sz = level_size(lv);
    std::fill(idx.begin(), idx.end(), 0);
    double cell = params.mesh * std::exp(mu_sum * lv.t);
    for (size_t i = 0; i < n; ++i) cell *= lv.spacing[i];
    for (uint64_t p = 0; p < sz; ++p) {
      const uint32_t id = lv.offset + static_cast<uint32_t>(p);
      double* row = net->coords.data() + static_cast<size_t>(id) * net->coord_dim;
      row[0] = lv.t;
      for (size_t i = 0; i < n; ++i) row[1 + i] = idx[i] * lv.spacing[i];
      net->weight[id] = cell;
      raw_total += cell;
      // Advance the product index (last coordinate fastest).
      for (size_t i = n; i-- > 0;) {
        if (++idx[i] < lv.counts[i]) break;
        idx[i] = 0;
      }
    }
  }

  if (params.counting_measure) {
    std::fill(net->weight.begin(), net->weight.end(), 1.0);
  } else if (params.R > 0.0 && raw_total > 0.0) {
    const double torus_vol = params.cover ? 2.0 : 1.0;
    const double cont = torus_vol * (std::exp(mu_sum * params.R) - 1.0) / mu_sum;
    if (cont > 0.0) {
      const double f = cont / raw_total;
      for (double& w : net->weight) w *= f;
    }
  }

  // Vertical edges: each point of level k+1 to the nearest grid point of
  // level k (the coarser grid divides the finer one, so snapping is exact
  // halving; ties round up deterministically).
  for (size_t k = 1; k < net->zmu_levels.size(); ++k) {
    const ZmuLevel& fine = net->zmu_levels[k];
    const ZmuLevel& coarse = net->zmu_levels[k - 1];
    const uint64_t sz = level_size(fine);
    std::vector<uint32_t> shift(n), pidx(n);
    for (size_t i = 0; i < n; ++i) {
      const uint32_t ratio = static_cast<uint32_t>(
          std::lround(coarse.spacing[i] / fine.spacing[i]));
      shift[i] = ratio;  // power of two
    }
    std::fill(idx.begin(), idx.end(), 0);
    for (uint64_t p = 0; p < sz; ++p) {
      for (size_t i = 0; i < n; ++i) {
        const uint32_t ratio = shift[i];
        const uint32_t a = idx[i];
        uint32_t ap = (a + ratio / 2) / ratio;  // round half up
        if (ap >= coarse.counts[i]) ap = 0;     // wrap
        pidx[i] = ap;
      }
      const uint32_t child = fine.offset + static_cast<uint32_t>(p);
      const uint32_t parent = zmu_point_id(*net, static_cast<uint32_t>(k - 1), pidx);
      net->edges.push_back({parent, child, params.mesh});
      for (size_t i = n; i-- > 0;) {
        if (++idx[i] < fine.counts[i]) break;
        idx[i] = 0;
      }
    }
  }

  // Horizontal edges: +1 grid step per coordinate within each level (wrapping),
  // with the length measured in the level metric e^(mu_i t) dx.
  for (size_t k = 0; k < net->zmu_levels.size(); ++k) {
    const ZmuLevel& lv = net->zmu_levels[k];
    const uint64_t sz = level_size(lv);
    std::fill(idx.begin(), idx.end(), 0);
    std::vector<uint32_t> nidx(n);
    for (uint64_t p = 0; p < sz; ++p) {
      const uint32_t a = lv.offset + static_cast<uint32_t>(p);
      for (size_t i = 0; i < n; ++i) {
        if (lv.counts[i] < 2) continue;
        if (lv.counts[i] == 2 && idx[i] == 1) continue;  // single wrap edge
        std::copy(idx.begin(), idx.end(), nidx.begin());
        nidx[i] = (idx[i] + 1) % lv.counts[i];
        const uint32_t b = zmu_point_id(*net, static_cast<uint32_t>(k), nidx);
        const double len = std::exp(params.mu[i] * lv.t) * lv.spacing[i];
        net->edges.push_back({std::min(a, b), std::max(a, b), len});
      }
      for (size_t i = n; i-- > 0;) {
        if (++idx[i] < lv.counts[i]) break;
        idx[i] = 0;
      }
    }
  }
  net->build_adjacency();

  // Distance to the nearest vertical ray through a top-level direction: the
  // nested grids make every point lie on such a ray, but measure honestly.
  double gap = 0.0;
  for (uint32_t i = 0; i < net->n_points; ++i) gap = std::max(gap, zmu_ray_distance(*net, i));
  net->ray_gap = gap;
  return net;
}

uint32_t zmu_snap(const Net& net, double t, std::span<const double> x) {
  const int K = static_cast<int>(net.zmu_levels.size()) - 1;
  int k = static_cast<int>(std::lround(t / net.params.mesh));
  k = std::clamp(k, 0, K);
  const ZmuLevel& lv = net.zmu_levels[k];
  const size_t n = lv.counts.size();
  std::vector<uint32_t> idx(n);
  for (size_t i = 0; i < n; ++i) {
    const double period = (i + 1 == n) ? net.period_last() : 1.0;
    double xi = std::fmod(x[i], period);
    if (xi < 0) xi += period;
    int64_t a = std::llround(xi / lv.spacing[i]);
    const int64_t cnt = lv.counts[i];
    a %= cnt;
    if (a < 0) a += cnt;
    idx[i] = static_cast<uint32_t>(a);
  }
  return zmu_point_id(net, static_cast<uint32_t>(k), idx);
}

double zmu_ray_distance(const Net& net, uint32_t i) {
  const ZmuLevel& top = net.zmu_levels.back();
  const auto p = net.point(i);
  const size_t n = net.params.mu.size();
  // Snap the direction to the top-level grid, then the vertical distance to
  // that ray at the same height is 2*max(0, t - t_inf).
  std::vector<double> snapped(n);
  for (size_t j = 0; j < n; ++j) {
    const double period = (j + 1 == n) ? net.period_last() : 1.0;
    double xj = p[1 + j];
    int64_t a = std::llround(xj / top.spacing[j]);
    const int64_t cnt = top.counts[j];
    a %= cnt;
    if (a < 0) a += cnt;
    snapped[j] = std::fmod(a * top.spacing[j], period);
  }
  const std::span<const double> px(p.data() + 1, n);
  const double vis =
      zmu_visual_distance(px, snapped, net.params.mu, net.period_last());
  if (vis <= 0.0) return 0.0;
  const double t_inf = -std::log(vis);
  return 2.0 * std::max(0.0, p[0] - t_inf);
}

// ---------------------------------------------------------------------------
// Generic graph net
// ---------------------------------------------------------------------------

NetPtr build_graph_net(uint32_t n, std::vector<Edge> edges,
                       std::vector<double> weights) {
  if (n == 0) throw Error(ErrorKind::invalid_params, "graph net needs >= 1 point");
  if (n > 2048)
    throw Error(ErrorKind::size_cap,
                "graph nets cache all-pairs distances; limited to 2048 points");
  for (const Edge& e : edges) {
    if (e.src >= n || e.dst >= n)
      throw Error(ErrorKind::invalid_params, "edge endpoint out of range");
    if (!(e.length > 0.0))
      throw Error(ErrorKind::invalid_params, "edge lengths must be positive");
  }
  auto net = std::make_shared<Net>();
  net->kind = SpaceKind::graph;
  net->oracle = OracleKind::graph_shortest_path;
  net->n_points = n;
  net->coord_dim = 0;
  net->edges = std::move(edges);
  if (weights.empty()) weights.assign(n, 1.0);
  if (weights.size() != n)
    throw Error(ErrorKind::invalid_params, "weight count mismatch");
  for (double w : weights)
    if (!(w > 0.0)) throw Error(ErrorKind::invalid_params, "weights must be positive");
  net->weight = std::move(weights);
  net->build_adjacency();

  // All-pairs shortest paths by Dijkstra from every source.
  net->graph_dist.assign(static_cast<size_t>(n) * n, kInf);
  using Item = std::pair<double, uint32_t>;
  for (uint32_t s = 0; s < n; ++s) {
    double* dist = net->graph_dist.data() + static_cast<size_t>(s) * n;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[s] = 0.0;
    pq.push({0.0, s});
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (uint64_t k = net->adj_offset[u]; k < net->adj_offset[u + 1]; ++k) {
        const uint32_t v = net->adj_neighbor[k];
        const double nd = d + net->adj_length[k];
        if (nd < dist[v]) {
          dist[v] = nd;
          pq.push({nd, v});
        }
      }
    }
  }
  return net;
}

NetPtr make_h2_subnet(const Net& net, const std::vector<uint32_t>& ids) {
  if (net.kind != SpaceKind::h2)
    throw Error(ErrorKind::wrong_net, "subnet extraction is for h2 nets");
  auto sub = std::make_shared<Net>();
  sub->kind = SpaceKind::h2;
  sub->oracle = OracleKind::closed_form;
  sub->params = net.params;
  sub->n_points = static_cast<uint32_t>(ids.size());
  sub->coord_dim = 2;
  sub->coords.resize(ids.size() * 2);
  sub->weight.assign(ids.size(), 1.0);
  for (size_t i = 0; i < ids.size(); ++i) {
    sub->coords[i * 2] = net.coords[ids[i] * 2];
    sub->coords[i * 2 + 1] = net.coords[ids[i] * 2 + 1];
  }
  sub->build_adjacency();
  return sub;
}

}  // namespace qilab

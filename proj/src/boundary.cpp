#include "qilab/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "qilab/space.hpp"

namespace qilab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Log-depth horizon for randomly drawn separations. Fixed (independent of R)
// so that enlarging R only relaxes the keep filter and never changes the
// candidate pairs themselves.
constexpr double kHorizon = 128.0;

// Representative of a circle coordinate in [-1/2, 1/2].
double wrap_rep(double x) { return x - std::round(x); }

void check_mu(const std::vector<double>& mu) {
  if (mu.empty()) throw Error(ErrorKind::invalid_params, "empty exponent pack");
  for (double m : mu)
    if (!(m > 0.0))
      throw Error(ErrorKind::invalid_params, "exponents must be positive");
}

}  // namespace

const char* to_string(ThetaKind kind) {
  switch (kind) {
    case ThetaKind::identity: return "identity";
    case ThetaKind::zmu_identity: return "zmu_identity";
    case ThetaKind::biholder: return "biholder";
    case ThetaKind::unipotent: return "unipotent";
  }
  return "?";
}

int BoundaryMap::dim() const {
  switch (kind) {
    case ThetaKind::identity:
    case ThetaKind::zmu_identity: return static_cast<int>(mu_dom.size());
    case ThetaKind::biholder: return 1;
    case ThetaKind::unipotent: return 2;
  }
  return 0;
}

void BoundaryMap::forward(std::span<const double> x,
                          std::span<double> out) const {
  switch (kind) {
    case ThetaKind::identity:
    case ThetaKind::zmu_identity:
      std::copy(x.begin(), x.end(), out.begin());
      return;
    case ThetaKind::biholder: {
      const double s = wrap_rep(x[0]);
      const double gamma = 0.5 * (alpha + beta);
      out[0] = s == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(s), gamma), s);
      return;
    }
    case ThetaKind::unipotent: {
      const double px = x[0];
      const double py = x[1];
      out[0] = py == 0.0 ? px : px - py * std::log(std::abs(py));
      out[1] = py;
      return;
    }
  }
}

void BoundaryMap::inverse(std::span<const double> y,
                          std::span<double> out) const {
  switch (kind) {
    case ThetaKind::identity:
    case ThetaKind::zmu_identity:
      std::copy(y.begin(), y.end(), out.begin());
      return;
    case ThetaKind::biholder: {
      const double s = wrap_rep(y[0]);
      const double gamma = 0.5 * (alpha + beta);
      out[0] =
          s == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(s), 1.0 / gamma), s);
      return;
    }
    case ThetaKind::unipotent: {
      const double px = y[0];
      const double py = y[1];
      out[0] = py == 0.0 ? px : px + py * std::log(std::abs(py));
      out[1] = py;
      return;
    }
  }
}

double BoundaryMap::domain_visual(std::span<const double> a,
                                  std::span<const double> b) const {
  switch (kind) {
    case ThetaKind::identity:
    case ThetaKind::zmu_identity:
      return zmu_visual_distance(a, b, mu_dom, 1.0);
    case ThetaKind::biholder:
      // One coordinate viewed on the segment [-1/2, 1/2]; the power map is
      // continuous there, but not across the wrap point, so distances do not
      // wrap.
      return std::abs(wrap_rep(a[0]) - wrap_rep(b[0]));
    case ThetaKind::unipotent:
      // Pairs live in the unit square of coordinate differences.
      return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
  }
  return 0.0;
}

double BoundaryMap::image_visual(std::span<const double> fa,
                                 std::span<const double> fb) const {
  switch (kind) {
    case ThetaKind::identity:
    case ThetaKind::zmu_identity:
      return zmu_visual_distance(fa, fb, mu_img, 1.0);
    case ThetaKind::biholder:
      return std::abs(wrap_rep(fa[0]) - wrap_rep(fb[0]));
    case ThetaKind::unipotent:
      return std::max(std::abs(fa[0] - fb[0]), std::abs(fa[1] - fb[1]));
  }
  return 0.0;
}

BoundaryMap make_identity_map(int dim) {
  if (dim < 1)
    throw Error(ErrorKind::invalid_params, "dimension must be at least 1");
  BoundaryMap m;
  m.kind = ThetaKind::identity;
  m.mu_dom.assign(static_cast<size_t>(dim), 1.0);
  m.mu_img = m.mu_dom;
  return m;
}

BoundaryMap make_zmu_identity_map(std::vector<double> mu_dom,
                                  std::vector<double> mu_img) {
  check_mu(mu_dom);
  check_mu(mu_img);
  if (mu_dom.size() != mu_img.size())
    throw Error(ErrorKind::invalid_params, "exponent packs differ in length");
  BoundaryMap m;
  m.kind = ThetaKind::zmu_identity;
  m.mu_dom = std::move(mu_dom);
  m.mu_img = std::move(mu_img);
  return m;
}

BoundaryMap make_biholder_map(double alpha, double beta, double c) {
  if (!(alpha > 0.0) || !(alpha <= 1.0) || !(beta >= 1.0))
    throw Error(ErrorKind::invalid_params,
                "need 0 < alpha <= 1 <= beta for the power map");
  if (!(c > 0.0))
    throw Error(ErrorKind::nonpositive_c, "Hoelder constant must be positive");
  BoundaryMap m;
  m.kind = ThetaKind::biholder;
  m.alpha = alpha;
  m.beta = beta;
  m.holder_c = c;
  return m;
}

BoundaryMap make_unipotent_map() {
  BoundaryMap m;
  m.kind = ThetaKind::unipotent;
  return m;
}

double unipotent_visual_distance(double x, double y) {
  const double shear = y == 0.0 ? x : x - y * std::log(std::abs(y));
  return std::max(std::abs(y), std::abs(shear));
}

double visual_log_ratio(const BoundaryMap& map, std::span<const double> a,
                        std::span<const double> b) {
  const size_t d = static_cast<size_t>(map.dim());
  if (a.size() != d || b.size() != d)
    throw Error(ErrorKind::invalid_params, "point dimension mismatch");
  const double dom = map.domain_visual(a, b);
  std::vector<double> fa(d), fb(d);
  map.forward(a, fa);
  map.forward(b, fb);
  const double img = map.image_visual(fa, fb);
  if (!(dom > 0.0) || !(img > 0.0))
    throw Error(ErrorKind::coincident_points,
                "visual separation vanishes on one side");
  return std::abs(std::log(img / dom));
}

namespace {

struct SupAccum {
  double best = 0.0;
  uint64_t kept = 0;
};

// Chunk-deterministic sup over candidate pairs: per-chunk partials are merged
// in chunk order (max and sum are order-independent anyway, so results match
// the serial path bit for bit).
template <typename Eval>
SupAccum sup_over(Exec exec, size_t n, const Eval& eval) {
  const size_t chunk = 1024;
  const size_t n_chunks = n == 0 ? 0 : (n - 1) / chunk + 1;
  std::vector<SupAccum> partial(n_chunks);
  parallel_chunks(exec, n, chunk, [&](size_t c, size_t lo, size_t hi) {
    SupAccum acc;
    for (size_t k = lo; k < hi; ++k) {
      double ratio = 0.0;
      if (eval(k, ratio)) {
        ++acc.kept;
        acc.best = std::max(acc.best, ratio);
      }
    }
    partial[c] = acc;
  });
  SupAccum total;
  for (const SupAccum& p : partial) {
    total.best = std::max(total.best, p.best);
    total.kept += p.kept;
  }
  return total;
}

// Exponent-pack kinds: candidates are per-coordinate log-separations
// L_i = -log dc_i (infinite when the coordinate does not separate), so the
// visual logs max_i(-L_i / mu_i) and the keep test against -R are computed
// without ever forming e^-L. Divisions by the test exponents are exact in
// floating point whenever mu is a power of two, which makes the estimate
// provably never exceed the closed-form supremum for those packs.
KEstimate estimate_log_space(const BoundaryMap& map, double R, int grid_n,
                             uint64_t seed, Exec exec) {
  const size_t dim = static_cast<size_t>(map.dim());
  double mu_max = 0.0;
  for (double m : map.mu_dom) mu_max = std::max(mu_max, m);
  for (double m : map.mu_img) mu_max = std::max(mu_max, m);
  const int j_max = static_cast<int>(std::ceil(R * mu_max));

  std::vector<double> cand;  // rows of dim entries
  const auto push_single = [&](size_t coord, double L) {
    const size_t base = cand.size();
    cand.resize(base + dim, kInf);
    cand[base + coord] = L;
  };
  for (int j = 0; j <= j_max; ++j)
    for (size_t i = 0; i < dim; ++i) push_single(i, static_cast<double>(j));
  for (size_t i = 0; i < dim; ++i) {
    push_single(i, R * map.mu_dom[i]);
    push_single(i, R * map.mu_img[i]);
  }
  const Rng root(seed);
  for (int k = 0; k < grid_n; ++k) {
    Rng r = root.derive(static_cast<uint64_t>(k));
    const size_t base = cand.size();
    cand.resize(base + dim, kInf);
    for (size_t i = 0; i < dim; ++i) {
      const double gate = r.uniform();
      const double depth = r.uniform();
      if (gate >= 0.5) cand[base + i] = depth * kHorizon;
    }
  }

  const size_t n = cand.size() / dim;
  const SupAccum acc = sup_over(exec, n, [&](size_t k, double& ratio) {
    const double* L = cand.data() + k * dim;
    double dom = -kInf;
    double img = -kInf;
    for (size_t i = 0; i < dim; ++i) {
      if (!std::isfinite(L[i])) continue;
      dom = std::max(dom, -L[i] / map.mu_dom[i]);
      img = std::max(img, -L[i] / map.mu_img[i]);
    }
    if (!(dom >= -R) && !(img >= -R)) return false;
    ratio = std::abs(dom - img);
    return true;
  });

  KEstimate out;
  out.value = acc.best;
  out.pairs_kept = acc.kept;
  out.pairs_total = n;
  out.ladder_max = j_max;
  return out;
}

// Point-based kinds (power map, shear map): candidates are explicit pairs of
// boundary points; the ratio is evaluated through forward() and the visual
// metrics, and pairs are kept when either side separates by at least e^-R.
KEstimate estimate_point_space(const BoundaryMap& map, double R, int grid_n,
                               uint64_t seed, Exec exec) {
  const int j_max = static_cast<int>(std::ceil(R));
  std::vector<double> cand;  // rows: (a0, a1, b0, b1), coordinate 1 unused in 1d
  const auto push_pair = [&](double a0, double a1, double b0, double b1) {
    cand.insert(cand.end(), {a0, a1, b0, b1});
  };

  if (map.kind == ThetaKind::biholder) {
    for (int j = 1; j <= j_max; ++j) {
      const double s = std::exp(static_cast<double>(-j));
      push_pair(0.0, 0.0, s, 0.0);
      push_pair(0.0, 0.0, -s, 0.0);
    }
    const double s_end = std::exp(-R);
    push_pair(0.0, 0.0, s_end, 0.0);
    push_pair(0.0, 0.0, -s_end, 0.0);
    const Rng root(seed);
    for (int k = 0; k < grid_n; ++k) {
      Rng r = root.derive(static_cast<uint64_t>(k));
      const double base = (r.uniform() - 0.5) * 0.8;
      const double sgn = r.uniform() < 0.5 ? 1.0 : -1.0;
      const double mag = std::exp(-r.uniform() * kHorizon);
      push_pair(base, 0.0, base + sgn * mag, 0.0);
    }
  } else {  // unipotent: pairs (0, p) in difference coordinates
    const auto push_diff = [&](double dx, double dy) {
      push_pair(0.0, 0.0, dx, dy);
    };
    const auto push_rung = [&](double y) {
      const double shear = y * std::log(y);
      push_diff(0.0, y);
      push_diff(y, 0.0);
      push_diff(shear, y);   // shear cancels downstream
      push_diff(-shear, y);  // shear doubles downstream
    };
    for (int j = 1; j <= j_max; ++j) push_rung(std::exp(static_cast<double>(-j)));
    push_rung(std::exp(-R));
    const Rng root(seed);
    for (int k = 0; k < grid_n; ++k) {
      Rng r = root.derive(static_cast<uint64_t>(k));
      if (r.uniform() < 0.5) {
        const double sy = r.uniform() < 0.5 ? 1.0 : -1.0;
        const double y = sy * std::exp(-r.uniform() * kHorizon);
        const double coeff = r.uniform();
        push_diff(y * std::log(std::abs(y)) * coeff, y);
      } else {
        double p[2];
        for (double& v : p) {
          const uint64_t sel = r.below(3);
          v = sel == 0 ? 0.0
                       : (sel == 1 ? 1.0 : -1.0) *
                             std::exp(-r.uniform() * kHorizon);
        }
        push_diff(p[0], p[1]);
      }
    }
  }

  const double threshold = std::exp(-R);
  const size_t n = cand.size() / 4;
  const SupAccum acc = sup_over(exec, n, [&](size_t k, double& ratio) {
    const double* row = cand.data() + k * 4;
    const size_t dim = static_cast<size_t>(map.dim());
    const std::span<const double> a(row, dim);
    const std::span<const double> b(row + 2, dim);
    const double dom = map.domain_visual(a, b);
    double fa[2], fb[2];
    map.forward(a, {fa, dim});
    map.forward(b, {fb, dim});
    const double img = map.image_visual({fa, dim}, {fb, dim});
    if (!(dom > 0.0) || !(img > 0.0)) return false;
    if (!(dom >= threshold) && !(img >= threshold)) return false;
    ratio = std::abs(std::log(img / dom));
    return true;
  });

  KEstimate out;
  out.value = acc.best;
  out.pairs_kept = acc.kept;
  out.pairs_total = n;
  out.ladder_max = j_max;
  return out;
}

}  // namespace

KEstimate estimate_K(const BoundaryMap& map, double R, int grid_n,
                     uint64_t seed, Exec exec) {
  if (!(R > 0.0))
    throw Error(ErrorKind::invalid_params, "scale R must be positive");
  if (grid_n < 2)
    throw Error(ErrorKind::invalid_params, "need at least 2 sample pairs");
  switch (map.kind) {
    case ThetaKind::identity:
    case ThetaKind::zmu_identity:
      return estimate_log_space(map, R, grid_n, seed, exec);
    case ThetaKind::biholder:
    case ThetaKind::unipotent:
      return estimate_point_space(map, R, grid_n, seed, exec);
  }
  throw Error(ErrorKind::invalid_params, "unknown map kind");
}

std::optional<AnalyticK> analytic_K(const BoundaryMap& map, double R) {
  if (!(R >= 0.0))
    throw Error(ErrorKind::invalid_params, "scale R must be nonnegative");
  switch (map.kind) {
    case ThetaKind::identity:
      return AnalyticK{0.0, false};
    case ThetaKind::zmu_identity: {
      double worst = 0.0;
      for (size_t i = 0; i < map.mu_dom.size(); ++i)
        worst = std::max(worst, std::abs(map.mu_dom[i] / map.mu_img[i] - 1.0));
      return AnalyticK{R * worst, false};
    }
    case ThetaKind::biholder: {
      const double slope = std::max(1.0 - map.alpha, map.beta - 1.0);
      return AnalyticK{slope * R + std::abs(std::log(map.holder_c)), true};
    }
    case ThetaKind::unipotent:
      return std::nullopt;
  }
  return std::nullopt;
}

ThetaConstants theta_constants(double K, double c) {
  if (!(K >= 0.0))
    throw Error(ErrorKind::invalid_params, "distortion must be nonnegative");
  if (!(c > 0.0))
    throw Error(ErrorKind::nonpositive_c, "metric slack must be positive");
  return ThetaConstants{1.0 + 2.0 * K / c, 2.0 * K + c};
}

}  // namespace qilab

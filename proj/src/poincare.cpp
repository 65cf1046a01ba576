#include "qilab/poincare.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace qilab {

namespace {

double pow_p(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  return std::pow(x, p);
}

void check_p(double p) {
  if (!(p >= 1.0)) throw Error(ErrorKind::invalid_params, "need p >= 1");
}

// Breadth-first reachability over the kernel support.
bool support_connected(const Kernel& k) {
  const uint32_t n = k.net->size();
  std::vector<char> seen(n, 0);
  std::vector<uint32_t> frontier{0};
  seen[0] = 1;
  uint32_t count = 1;
  while (!frontier.empty()) {
    std::vector<uint32_t> next;
    for (uint32_t i : frontier) {
      for (uint64_t e = k.row_offset[i]; e < k.row_offset[i + 1]; ++e) {
        const uint32_t j = k.col[e];
        if (!seen[j] && k.value[e] > 0.0) {
          seen[j] = 1;
          ++count;
          next.push_back(j);
        }
      }
    }
    frontier = std::move(next);
  }
  return count == n;
}

}  // namespace

const char* to_string(PoincareMethod method) {
  switch (method) {
    case PoincareMethod::spectral_p2: return "spectral_p2";
    case PoincareMethod::ascent: return "ascent";
    case PoincareMethod::test_function: return "test_function";
  }
  return "?";
}

LpCenter lp_mean_deviation(const Net& net, std::span<const double> f,
                           double p) {
  if (f.size() != net.size())
    throw Error(ErrorKind::net_mismatch, "function size mismatch");
  check_p(p);
  const uint32_t n = net.size();
  const auto& w = net.weight;
  LpCenter out;

  if (p == 2.0) {
    double wsum = 0.0, fsum = 0.0;
    for (uint32_t i = 0; i < n; ++i) {
      wsum += w[i];
      fsum += w[i] * f[i];
    }
    out.center = fsum / wsum;
    double acc = 0.0;
    for (uint32_t i = 0; i < n; ++i) {
      const double d = f[i] - out.center;
      acc += w[i] * d * d;
    }
    out.value = std::sqrt(acc);
    return out;
  }

  if (p == 1.0) {
    std::vector<uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](uint32_t a, uint32_t b) { return f[a] < f[b]; });
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
    double cum = 0.0;
    out.center = f[order.back()];
    for (uint32_t i : order) {
      cum += w[i];
      if (cum >= 0.5 * wsum) {
        out.center = f[i];
        break;
      }
    }
    double acc = 0.0;
    for (uint32_t i = 0; i < n; ++i) acc += w[i] * std::abs(f[i] - out.center);
    out.value = acc;
    return out;
  }

  // Strictly convex objective: golden-section search on [min f, max f].
  const auto objective = [&](double m) {
    double acc = 0.0;
    for (uint32_t i = 0; i < n; ++i)
      acc += w[i] * pow_p(std::abs(f[i] - m), p);
    return acc;
  };
  double lo = *std::min_element(f.begin(), f.end());
  double hi = *std::max_element(f.begin(), f.end());
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
  double fa = objective(a), fb = objective(b);
  for (int it = 0; it < 300 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
    if (fa <= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = objective(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = objective(b);
    }
  }
  out.center = 0.5 * (lo + hi);
  out.value = std::pow(objective(out.center), 1.0 / p);
  return out;
}

double lp_norm(const Net& net, std::span<const double> re,
               std::span<const double> im, double p) {
  if (re.size() != net.size() || im.size() != net.size())
    throw Error(ErrorKind::net_mismatch, "function size mismatch");
  check_p(p);
  double acc = 0.0;
  for (uint32_t i = 0; i < net.size(); ++i) {
    const double m2 = re[i] * re[i] + im[i] * im[i];
    acc += net.weight[i] * (p == 2.0 ? m2 : std::pow(m2, 0.5 * p));
  }
  return std::pow(acc, 1.0 / p);
}

double rayleigh_quotient(const Kernel& k, std::span<const double> re,
                         std::span<const double> im, double p, Exec exec) {
  const Net& net = *k.net;
  if (re.size() != net.size())
    throw Error(ErrorKind::net_mismatch, "function size mismatch");
  check_p(p);

  double num, den;
  if (im.empty()) {
    num = lp_mean_deviation(net, re, p).value;
    den = seminorm(k, re, p, exec);
  } else {
    if (im.size() != net.size())
      throw Error(ErrorKind::net_mismatch, "function size mismatch");
    double wsum = 0.0, mr = 0.0, mi = 0.0;
    for (uint32_t i = 0; i < net.size(); ++i) {
      wsum += net.weight[i];
      mr += net.weight[i] * re[i];
      mi += net.weight[i] * im[i];
    }
    mr /= wsum;
    mi /= wsum;
    std::vector<double> cre(re.begin(), re.end()), cim(im.begin(), im.end());
    for (auto& v : cre) v -= mr;
    for (auto& v : cim) v -= mi;
    num = lp_norm(net, cre, cim, p);
    den = seminorm(k, re, im, p, exec);
  }
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

PoincareEstimate poincare_exact_p2(const Kernel& k, int dense_cap) {
  const uint32_t n = k.net->size();
  if (n < 2) throw Error(ErrorKind::too_few_points, "need at least two points");
  if (n > static_cast<uint32_t>(dense_cap))
    throw Error(ErrorKind::size_cap, "net too large for the dense p=2 solve");
  if (!support_connected(k))
    throw Error(ErrorKind::disconnected, "kernel support is disconnected");

  const auto& w = k.net->weight;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (uint32_t i = 0; i < n; ++i) {
    for (uint64_t e = k.row_offset[i]; e < k.row_offset[i + 1]; ++e) {
      const uint32_t j = k.col[e];
      const double wij = k.value[e] * w[i] * w[j];
      A(i, j) -= wij;
      A(i, i) += wij;
    }
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (uint32_t i = 0; i < n; ++i) M(i, i) = w[i];

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(A, M);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::invalid_params, "eigensolver failed to converge");
  const double lambda2 = solver.eigenvalues()(1);
  if (!(lambda2 > 0.0))
    throw Error(ErrorKind::disconnected,
                "vanishing spectral gap (numerically disconnected)");

  PoincareEstimate est;
  est.p = 2.0;
  est.method = PoincareMethod::spectral_p2;
  est.lower = 1.0 / std::sqrt(2.0 * lambda2);
  est.upper = est.lower;
  Eigen::VectorXd v = solver.eigenvectors().col(1);
  const double sup = v.cwiseAbs().maxCoeff();
  est.witness_re.resize(n);
  for (uint32_t i = 0; i < n; ++i) est.witness_re[i] = v(i) / sup;
  return est;
}

namespace {

// Quotient and its ascent direction share these precomputed pieces.
struct QuotientParts {
  double value = 0.0;
  double num_p = 0.0;  // ||f - m||_p^p
  double den_p = 0.0;  // N_p(f)^p
  double center = 0.0;
};

QuotientParts eval_quotient(const Kernel& k, const std::vector<double>& f,
                            double p, Exec exec) {
  QuotientParts parts;
  const LpCenter c = lp_mean_deviation(*k.net, f, p);
  parts.center = c.center;
  parts.num_p = pow_p(c.value, p);
  const double den = seminorm(k, f, p, exec);
  parts.den_p = pow_p(den, p);
  parts.value = den == 0.0 ? 0.0 : c.value / den;
  return parts;
}

// Gradient of log(||f - m||_p / N_p(f)) at fixed optimal center (envelope).
void quotient_gradient(const Kernel& k, const std::vector<double>& f, double p,
                       const QuotientParts& parts, Exec exec,
                       std::vector<double>& g) {
  const uint32_t n = k.net->size();
  const auto& w = k.net->weight;
  g.assign(n, 0.0);
  parallel_for(exec, n, [&](int64_t i) {
    const double d = f[static_cast<size_t>(i)] - parts.center;
    double gn = 0.0;
    if (d != 0.0)
      gn = w[static_cast<size_t>(i)] *
           pow_p(std::abs(d), p - 1.0) * (d > 0.0 ? 1.0 : -1.0) / parts.num_p;
    double gd = 0.0;
    for (uint64_t e = k.row_offset[static_cast<size_t>(i)];
         e < k.row_offset[static_cast<size_t>(i) + 1]; ++e) {
      const uint32_t j = k.col[e];
      const double df = f[static_cast<size_t>(i)] - f[j];
      if (df != 0.0)
        gd += k.value[e] * w[j] * pow_p(std::abs(df), p - 1.0) *
              (df > 0.0 ? 1.0 : -1.0);
    }
    gd *= 2.0 * w[static_cast<size_t>(i)] / parts.den_p;
    g[static_cast<size_t>(i)] = gn - gd;
  });
}

// Subtract the weighted mean and scale to sup-norm 1; false if constant.
bool normalize_seed(const Net& net, std::vector<double>& f) {
  double wsum = 0.0, fsum = 0.0;
  for (uint32_t i = 0; i < net.size(); ++i) {
    wsum += net.weight[i];
    fsum += net.weight[i] * f[i];
  }
  const double mean = fsum / wsum;
  double sup = 0.0;
  for (auto& v : f) {
    v -= mean;
    sup = std::max(sup, std::abs(v));
  }
  if (sup == 0.0) return false;
  for (auto& v : f) v /= sup;
  return true;
}

std::vector<std::vector<double>> ascent_seeds(const Kernel& k, double p,
                                              const AscentOptions& opt) {
  const Net& net = *k.net;
  const uint32_t n = net.size();
  std::vector<std::vector<double>> seeds;

  // Distance profiles from three spread-out basepoints.
  for (uint32_t base : {0u, n / 2, n - 1}) {
    std::vector<double> f(n);
    for (uint32_t i = 0; i < n; ++i) f[i] = net.distance(base, i);
    seeds.push_back(std::move(f));
  }

  // Coordinate modes of the structured layouts.
  if (net.kind == SpaceKind::h2 && net.coord_dim == 2) {
    std::vector<double> c(n), s(n);
    for (uint32_t i = 0; i < n; ++i) {
      c[i] = std::cos(net.point(i)[1]);
      s[i] = std::sin(net.point(i)[1]);
    }
    seeds.push_back(std::move(c));
    seeds.push_back(std::move(s));
  }
  if (net.kind == SpaceKind::zmu && net.coord_dim >= 2) {
    {
      std::vector<double> t(n);
      for (uint32_t i = 0; i < n; ++i) t[i] = net.point(i)[0];
      seeds.push_back(std::move(t));
    }
    for (int c = 1; c < net.coord_dim; ++c) {
      const double period =
          (c == net.coord_dim - 1) ? net.period_last() : 1.0;
      std::vector<double> fc(n), fs(n);
      for (uint32_t i = 0; i < n; ++i) {
        const double ang = 2.0 * std::numbers::pi * net.point(i)[c] / period;
        fc[i] = std::cos(ang);
        fs[i] = std::sin(ang);
      }
      seeds.push_back(std::move(fc));
      seeds.push_back(std::move(fs));
    }
  }
  if (net.kind == SpaceKind::tree) {
    std::vector<double> f(n);
    for (uint32_t i = 0; i < n; ++i) f[i] = net.tree_depth[i];
    seeds.push_back(std::move(f));
  }

  // The dense p=2 eigenfunction, when the net is small enough to afford it.
  if (n <= 512) {
    try {
      seeds.push_back(poincare_exact_p2(k, 512).witness_re);
    } catch (const Error&) {
    }
  }

  // Seeded random starts to reach the requested restart count.
  const Rng base = Rng(opt.seed).derive("ascent-seed");
  for (int r = 0; seeds.size() < static_cast<size_t>(opt.restarts); ++r) {
    Rng rng = base.derive(static_cast<uint64_t>(r));
    std::vector<double> f(n);
    for (auto& v : f) v = rng.uniform(-1.0, 1.0);
    seeds.push_back(std::move(f));
  }
  (void)p;
  return seeds;
}

}  // namespace

PoincareEstimate poincare_lower_ascent(const Kernel& k, double p,
                                       const AscentOptions& opt, Exec exec) {
  check_p(p);
  const uint32_t n = k.net->size();
  if (n < 2) throw Error(ErrorKind::too_few_points, "need at least two points");
  if (!support_connected(k))
    throw Error(ErrorKind::disconnected, "kernel support is disconnected");

  std::vector<double> best_f;
  double best = -1.0;
  std::vector<double> g, trial;
  for (auto& f : ascent_seeds(k, p, opt)) {
    if (!normalize_seed(*k.net, f)) continue;
    QuotientParts parts = eval_quotient(k, f, p, exec);
    if (parts.den_p == 0.0) continue;
    double step = 0.5;
    int stall = 0;
    for (int it = 0; it < opt.iters && stall < 25 && step > 1e-14; ++it) {
      quotient_gradient(k, f, p, parts, exec, g);
      trial = f;
      for (uint32_t i = 0; i < n; ++i) trial[i] += step * g[i];
      if (!normalize_seed(*k.net, trial)) break;
      const QuotientParts tp = eval_quotient(k, trial, p, exec);
      if (tp.value > parts.value) {
        stall = tp.value > parts.value * (1.0 + 1e-12) ? 0 : stall + 1;
        f = trial;
        parts = tp;
        step *= 1.3;
      } else {
        step *= 0.5;
        ++stall;
      }
    }
    if (parts.value > best) {
      best = parts.value;
      best_f = f;
    }
  }

  PoincareEstimate est;
  est.p = p;
  est.method = PoincareMethod::ascent;
  est.witness_re = std::move(best_f);
  est.lower = rayleigh_quotient(k, est.witness_re, {}, p, exec);
  return est;
}

PoincareEstimate testfunction_lower_bound(const Net& net, double p) {
  check_p(p);
  const auto u = parity_mode(net);  // throws wrong_net on other nets
  const auto& mu = net.params.mu;
  const double mu_n = mu.back();
  const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
  if (!(p * mu_n > total))
    throw Error(ErrorKind::pole_or_below,
                "exponent at or below the energy pole");

  PoincareEstimate est;
  est.p = p;
  est.method = PoincareMethod::test_function;
  est.witness_re.resize(u.size());
  est.witness_im.resize(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    est.witness_re[i] = u[i].real();
    est.witness_im[i] = u[i].imag();
  }
  const double num = lp_norm(net, est.witness_re, est.witness_im, p);
  const double den = gradient_seminorm_discrete(net, u, p);
  est.lower = num / den;
  return est;
}

double gradient_seminorm_discrete(const Net& net,
                                  std::span<const std::complex<double>> f,
                                  double p, Exec exec) {
  if (f.size() != net.size())
    throw Error(ErrorKind::net_mismatch, "function size mismatch");
  check_p(p);
  if (net.edges.empty())
    throw Error(ErrorKind::no_edges, "net carries no edge structure");
  const int64_t ne = static_cast<int64_t>(net.edges.size());
  const double total = deterministic_sum(exec, ne, 256, [&](int64_t e) {
    const Edge& edge = net.edges[static_cast<size_t>(e)];
    const double d = std::abs(f[edge.src] - f[edge.dst]);
    if (d == 0.0) return 0.0;
    const double wbar = 0.5 * (net.weight[edge.src] + net.weight[edge.dst]);
    return wbar * pow_p(d / edge.length, p);
  });
  return std::pow(total, 1.0 / p);
}

namespace {

void check_mu_list(std::span<const double> mu) {
  if (mu.empty()) throw Error(ErrorKind::invalid_params, "empty exponent list");
  for (double m : mu)
    if (!(m > 0.0))
      throw Error(ErrorKind::invalid_params, "exponents must be positive");
}

}  // namespace

double continuum_grad_integral(std::span<const double> mu, double p) {
  check_mu_list(mu);
  check_p(p);
  const double mu_n = mu.back();
  const double s = std::accumulate(mu.begin(), mu.end(), 0.0) / mu_n;
  if (!(p > s))
    throw Error(ErrorKind::pole_or_below,
                "exponent at or below the energy pole");
  return std::numbers::pi * mu_n / (p - s);
}

double mode_energy_closed_form(std::span<const double> mu, double p, double R) {
  check_mu_list(mu);
  check_p(p);
  if (!(R > 0.0)) throw Error(ErrorKind::invalid_params, "need R > 0");
  const double a =
      p * mu.back() - std::accumulate(mu.begin(), mu.end(), 0.0);
  if (!(a > 0.0))
    throw Error(ErrorKind::pole_or_below,
                "exponent at or below the energy pole");
  return 2.0 * std::pow(std::numbers::pi, p) * (1.0 - std::exp(-a * R)) / a;
}

std::vector<std::complex<double>> parity_mode(const Net& net) {
  if (net.kind != SpaceKind::zmu || !net.params.cover)
    throw Error(ErrorKind::wrong_net,
                "parity mode needs a double-cover exponential-metric net");
  std::vector<std::complex<double>> u(net.size());
  const int last = net.coord_dim - 1;
  for (uint32_t i = 0; i < net.size(); ++i)
    u[i] = std::polar(1.0, std::numbers::pi * net.point(i)[last]);
  return u;
}

}  // namespace qilab

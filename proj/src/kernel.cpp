#include "qilab/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace qilab {

namespace {

double pow_p(double x, double p) {
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  return std::pow(x, p);
}

void check_same_net(const NetPtr& a, const NetPtr& b, const char* what) {
  if (a.get() != b.get())
    throw Error(ErrorKind::net_mismatch, std::string(what) + ": kernels live on different nets");
}

}  // namespace

double Kernel::at(uint32_t i, uint32_t j) const {
  const uint64_t lo = row_offset[i], hi = row_offset[i + 1];
  const auto begin = col.begin() + static_cast<ptrdiff_t>(lo);
  const auto end = col.begin() + static_cast<ptrdiff_t>(hi);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return 0.0;
  return value[static_cast<size_t>(it - col.begin())];
}

double Kernel::sup_value() const {
  double s = 0.0;
  for (double v : value) s = std::max(s, v);
  return s;
}

double Kernel::max_row_sum_error() const {
  const uint32_t n = net->size();
  double worst = 0.0;
  for (uint32_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (uint64_t e = row_offset[i]; e < row_offset[i + 1]; ++e)
      s += value[e] * net->weight[col[e]];
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double Kernel::min_margin(double radius, Exec exec) const {
  const uint32_t n = net->size();
  const int64_t chunk = 64;
  const int64_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial(static_cast<size_t>(n_chunks),
                              std::numeric_limits<double>::infinity());
  std::vector<char> missing(static_cast<size_t>(n_chunks), 0);
  parallel_chunks(exec, n, chunk, [&](int64_t c, int64_t lo, int64_t hi) {
    double m = std::numeric_limits<double>::infinity();
    char miss = 0;
    for (int64_t i = lo; i < hi; ++i) {
      for_each_in_ball(*net, static_cast<uint32_t>(i), radius,
                       [&](uint32_t j, double) {
                         const double v = at(static_cast<uint32_t>(i), j);
                         if (v <= 0.0)
                           miss = 1;
                         else
                           m = std::min(m, v);
                       });
    }
    partial[static_cast<size_t>(c)] = m;
    missing[static_cast<size_t>(c)] = miss;
  });
  double m = std::numeric_limits<double>::infinity();
  for (int64_t c = 0; c < n_chunks; ++c) {
    if (missing[static_cast<size_t>(c)]) return 0.0;
    m = std::min(m, partial[static_cast<size_t>(c)]);
  }
  return std::isfinite(m) ? m : 0.0;
}

Kernel make_ball_kernel(NetPtr net, double width, Exec exec) {
  if (!net) throw Error(ErrorKind::invalid_params, "null net");
  if (!(width > 0.0))
    throw Error(ErrorKind::invalid_params, "kernel width must be positive");
  const uint32_t n = net->size();

  // Ball memberships and masses.
  std::vector<std::vector<uint32_t>> rows(n);
  std::vector<double> mass(n, 0.0);
  parallel_for(exec, n, [&](int64_t i) {
    auto& row = rows[static_cast<size_t>(i)];
    double m = 0.0;
    for_each_in_ball(*net, static_cast<uint32_t>(i), width,
                     [&](uint32_t j, double) {
                       row.push_back(j);
                       m += net->weight[j];
                     });
    std::sort(row.begin(), row.end());
    mass[static_cast<size_t>(i)] = m;
  });

  Kernel k;
  k.net = net;
  k.width = width;
  k.row_offset.assign(n + 1, 0);
  for (uint32_t i = 0; i < n; ++i) {
    k.row_offset[i + 1] = k.row_offset[i] + rows[i].size();
    if (rows[i].size() == 1) k.has_isolated = true;
  }
  k.col.resize(k.row_offset[n]);
  k.value.resize(k.row_offset[n]);
  parallel_for(exec, n, [&](int64_t i) {
    const auto& row = rows[static_cast<size_t>(i)];
    uint64_t e = k.row_offset[static_cast<size_t>(i)];
    for (uint32_t j : row) {
      k.col[e] = j;
      // Symmetrized indicator / ball-mass weight.
      k.value[e] = 0.5 * (1.0 / mass[static_cast<size_t>(i)] + 1.0 / mass[j]);
      ++e;
    }
  });

  // Symmetric diagonal rescaling until every row sums to 1 against the
  // measure.
  std::vector<double> s(n), scale(n);
  for (int it = 0; it < 500; ++it) {
    parallel_for(exec, n, [&](int64_t i) {
      double acc = 0.0;
      for (uint64_t e = k.row_offset[static_cast<size_t>(i)];
           e < k.row_offset[static_cast<size_t>(i) + 1]; ++e)
        acc += k.value[e] * net->weight[k.col[e]];
      s[static_cast<size_t>(i)] = acc;
    });
    double err = 0.0;
    for (uint32_t i = 0; i < n; ++i) err = std::max(err, std::abs(s[i] - 1.0));
    if (err <= 1e-12) break;
    for (uint32_t i = 0; i < n; ++i) scale[i] = 1.0 / std::sqrt(s[i]);
    parallel_for(exec, n, [&](int64_t i) {
      for (uint64_t e = k.row_offset[static_cast<size_t>(i)];
           e < k.row_offset[static_cast<size_t>(i) + 1]; ++e)
        k.value[e] *= scale[static_cast<size_t>(i)] * scale[k.col[e]];
    });
  }
  return k;
}

Kernel convolve_kernels(const Kernel& a, const Kernel& b, Exec exec) {
  check_same_net(a.net, b.net, "convolve");
  const uint32_t n = a.net->size();
  const auto& w = a.net->weight;

  std::vector<std::vector<std::pair<uint32_t, double>>> rows(n);
  const int64_t chunk = 32;
  parallel_chunks(exec, n, chunk, [&](int64_t, int64_t lo, int64_t hi) {
    std::vector<double> acc(n, 0.0);
    std::vector<uint32_t> touched;
    for (int64_t i = lo; i < hi; ++i) {
      touched.clear();
      for (uint64_t e = a.row_offset[i]; e < a.row_offset[i + 1]; ++e) {
        const uint32_t y = a.col[e];
        const double ay = a.value[e] * w[y];
        for (uint64_t f = b.row_offset[y]; f < b.row_offset[y + 1]; ++f) {
          const uint32_t z = b.col[f];
          if (acc[z] == 0.0) touched.push_back(z);
          acc[z] += ay * b.value[f];
        }
      }
      std::sort(touched.begin(), touched.end());
      auto& row = rows[static_cast<size_t>(i)];
      row.reserve(touched.size());
      for (uint32_t z : touched) {
        if (acc[z] != 0.0) row.push_back({z, acc[z]});
        acc[z] = 0.0;
      }
    }
  });

  Kernel out;
  out.net = a.net;
  out.width = a.width + b.width;
  out.has_isolated = a.has_isolated && b.has_isolated;
  out.row_offset.assign(n + 1, 0);
  for (uint32_t i = 0; i < n; ++i)
    out.row_offset[i + 1] = out.row_offset[i] + rows[i].size();
  out.col.resize(out.row_offset[n]);
  out.value.resize(out.row_offset[n]);
  parallel_for(exec, n, [&](int64_t i) {
    uint64_t e = out.row_offset[static_cast<size_t>(i)];
    for (const auto& [z, v] : rows[static_cast<size_t>(i)]) {
      out.col[e] = z;
      out.value[e] = v;
      ++e;
    }
  });
  return out;
}

Kernel self_convolve(const Kernel& k, int m, Exec exec) {
  if (m < 1) throw Error(ErrorKind::invalid_params, "need m >= 1");
  Kernel out = k;
  for (int i = 1; i < m; ++i) out = convolve_kernels(out, k, exec);
  return out;
}

namespace {

template <typename Diff>
double seminorm_impl(const Kernel& k, double p, Exec exec, const Diff& diff) {
  const uint32_t n = k.net->size();
  const auto& w = k.net->weight;
  const double total = deterministic_sum(exec, n, 64, [&](int64_t i) {
    double acc = 0.0;
    const double wi = w[static_cast<size_t>(i)];
    for (uint64_t e = k.row_offset[i]; e < k.row_offset[i + 1]; ++e) {
      const uint32_t j = k.col[e];
      const double d = diff(static_cast<uint32_t>(i), j);
      if (d != 0.0) acc += wi * k.value[e] * w[j] * pow_p(d, p);
    }
    return acc;
  });
  return std::pow(total, 1.0 / p);
}

}  // namespace

double seminorm(const Kernel& k, std::span<const double> f, double p,
                Exec exec) {
  if (f.size() != k.net->size())
    throw Error(ErrorKind::net_mismatch, "function size mismatch");
  if (!(p >= 1.0)) throw Error(ErrorKind::invalid_params, "need p >= 1");
  return seminorm_impl(k, p, exec, [&](uint32_t i, uint32_t j) {
    return std::abs(f[i] - f[j]);
  });
}

double seminorm(const Kernel& k, std::span<const double> f_re,
                std::span<const double> f_im, double p, Exec exec) {
  if (f_re.size() != k.net->size() || f_im.size() != k.net->size())
    throw Error(ErrorKind::net_mismatch, "function size mismatch");
  if (!(p >= 1.0)) throw Error(ErrorKind::invalid_params, "need p >= 1");
  return seminorm_impl(k, p, exec, [&](uint32_t i, uint32_t j) {
    const double dr = f_re[i] - f_re[j];
    const double di = f_im[i] - f_im[j];
    return std::sqrt(dr * dr + di * di);
  });
}

double Cocycle::at(uint32_t i, uint32_t j) const {
  if (is_potential) return potential[i] - potential[j];
  return dense[static_cast<size_t>(i) * net->size() + j];
}

Cocycle make_potential_cocycle(NetPtr net, std::vector<double> g) {
  if (!net || g.size() != net->size())
    throw Error(ErrorKind::net_mismatch, "potential size mismatch");
  Cocycle a;
  a.net = std::move(net);
  a.is_potential = true;
  a.potential = std::move(g);
  return a;
}

Cocycle make_dense_cocycle(NetPtr net, std::vector<double> matrix) {
  if (!net) throw Error(ErrorKind::invalid_params, "null net");
  const uint32_t n = net->size();
  if (matrix.size() != static_cast<size_t>(n) * n)
    throw Error(ErrorKind::net_mismatch, "matrix size mismatch");
  if (n > 1024)
    throw Error(ErrorKind::size_cap, "dense pair functions limited to 1024 points");
  // Antisymmetrize, then verify additivity on sampled triples.
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = 0; j < i; ++j) {
      const double v = 0.5 * (matrix[static_cast<size_t>(i) * n + j] -
                              matrix[static_cast<size_t>(j) * n + i]);
      matrix[static_cast<size_t>(i) * n + j] = v;
      matrix[static_cast<size_t>(j) * n + i] = -v;
    }
  for (uint32_t i = 0; i < n; ++i) matrix[static_cast<size_t>(i) * n + i] = 0.0;

  double scale = 0.0;
  for (double v : matrix) scale = std::max(scale, std::abs(v));
  Rng rng(0x5eedc0deULL);
  for (int t = 0; t < 1000; ++t) {
    const uint32_t i = static_cast<uint32_t>(rng.below(n));
    const uint32_t j = static_cast<uint32_t>(rng.below(n));
    const uint32_t l = static_cast<uint32_t>(rng.below(n));
    const double gap = matrix[static_cast<size_t>(i) * n + j] +
                       matrix[static_cast<size_t>(j) * n + l] -
                       matrix[static_cast<size_t>(i) * n + l];
    if (std::abs(gap) > 1e-9 * std::max(1.0, scale))
      throw Error(ErrorKind::invalid_params,
                  "pair function is not additive on triples");
  }
  Cocycle a;
  a.net = std::move(net);
  a.is_potential = false;
  a.dense = std::move(matrix);
  return a;
}

double seminorm(const Kernel& k, const Cocycle& a, double p, Exec exec) {
  check_same_net(k.net, a.net, "cocycle seminorm");
  if (!(p >= 1.0)) throw Error(ErrorKind::invalid_params, "need p >= 1");
  return seminorm_impl(k, p, exec, [&](uint32_t i, uint32_t j) {
    return std::abs(a.at(i, j));
  });
}

namespace {

void check_transport(const PointMap& map, const Kernel& psi) {
  map.validate();
  if (psi.net.get() != map.codomain.get())
    throw Error(ErrorKind::net_mismatch, "kernel is not on the map codomain");
}

}  // namespace

std::vector<double> transport_function(const PointMap& map, const Kernel& psi,
                                       std::span<const double> g, Exec exec) {
  check_transport(map, psi);
  if (g.size() != map.codomain->size())
    throw Error(ErrorKind::net_mismatch, "function size mismatch");
  const auto& w = map.codomain->weight;
  std::vector<double> h(map.domain->size());
  parallel_for(exec, static_cast<int64_t>(h.size()), [&](int64_t x) {
    const uint32_t fx = map.image[static_cast<size_t>(x)];
    double acc = 0.0;
    for (uint64_t e = psi.row_offset[fx]; e < psi.row_offset[fx + 1]; ++e)
      acc += g[psi.col[e]] * psi.value[e] * w[psi.col[e]];
    h[static_cast<size_t>(x)] = acc;
  });
  return h;
}

void transport_function(const PointMap& map, const Kernel& psi,
                        std::span<const double> g_re,
                        std::span<const double> g_im,
                        std::vector<double>& out_re,
                        std::vector<double>& out_im, Exec exec) {
  check_transport(map, psi);
  if (g_re.size() != map.codomain->size() || g_im.size() != map.codomain->size())
    throw Error(ErrorKind::net_mismatch, "function size mismatch");
  const auto& w = map.codomain->weight;
  out_re.assign(map.domain->size(), 0.0);
  out_im.assign(map.domain->size(), 0.0);
  parallel_for(exec, static_cast<int64_t>(out_re.size()), [&](int64_t x) {
    const uint32_t fx = map.image[static_cast<size_t>(x)];
    double ar = 0.0, ai = 0.0;
    for (uint64_t e = psi.row_offset[fx]; e < psi.row_offset[fx + 1]; ++e) {
      const double c = psi.value[e] * w[psi.col[e]];
      ar += g_re[psi.col[e]] * c;
      ai += g_im[psi.col[e]] * c;
    }
    out_re[static_cast<size_t>(x)] = ar;
    out_im[static_cast<size_t>(x)] = ai;
  });
}

Cocycle transport_cocycle(const Cocycle& a, const Kernel& phi,
                          const PointMap& map, Exec exec) {
  check_transport(map, phi);
  check_same_net(phi.net, a.net, "transport");
  if (a.is_potential) {
    // Bilinearity: the pullback of g(z) - g(z') is h(x) - h(x').
    return make_potential_cocycle(
        map.domain, transport_function(map, phi, a.potential, exec));
  }
  const uint32_t nx = map.domain->size();
  const uint32_t ny = map.codomain->size();
  if (nx > 1024)
    throw Error(ErrorKind::size_cap, "dense pair-function transport limited to 1024 points");
  const auto& w = map.codomain->weight;
  // half(x, z') = sum_z phi(f(x), z) w(z) a(z, z').
  std::vector<double> half(static_cast<size_t>(nx) * ny, 0.0);
  parallel_for(exec, nx, [&](int64_t x) {
    const uint32_t fx = map.image[static_cast<size_t>(x)];
    double* row = half.data() + static_cast<size_t>(x) * ny;
    for (uint64_t e = phi.row_offset[fx]; e < phi.row_offset[fx + 1]; ++e) {
      const uint32_t z = phi.col[e];
      const double c = phi.value[e] * w[z];
      const double* arow = a.dense.data() + static_cast<size_t>(z) * ny;
      for (uint32_t zp = 0; zp < ny; ++zp) row[zp] += c * arow[zp];
    }
  });
  std::vector<double> out(static_cast<size_t>(nx) * nx, 0.0);
  parallel_for(exec, nx, [&](int64_t x) {
    for (uint32_t xp = 0; xp < static_cast<uint32_t>(x); ++xp) {
      const uint32_t fxp = map.image[xp];
      const double* row = half.data() + static_cast<size_t>(x) * ny;
      double acc = 0.0;
      for (uint64_t e = phi.row_offset[fxp]; e < phi.row_offset[fxp + 1]; ++e)
        acc += row[phi.col[e]] * phi.value[e] * w[phi.col[e]];
      out[static_cast<size_t>(x) * nx + xp] = acc;
      out[static_cast<size_t>(xp) * nx + x] = -acc;
    }
  });
  Cocycle b;
  b.net = map.domain;
  b.is_potential = false;
  b.dense = std::move(out);
  return b;
}

SeminormComparison seminorm_comparison(const Kernel& strong, const Kernel& weak,
                                       double p, int max_m, Exec exec) {
  check_same_net(strong.net, weak.net, "seminorm comparison");
  if (!(p >= 1.0)) throw Error(ErrorKind::invalid_params, "need p >= 1");
  const uint32_t n = weak.net->size();
  const double eta = strong.max_row_sum_error();
  Kernel chained = strong;
  for (int m = 1; m <= max_m; ++m) {
    if (m > 1) chained = convolve_kernels(chained, strong, exec);
    // Margin of the m-fold chain over the support of `weak`.
    double tau = std::numeric_limits<double>::infinity();
    bool missing = false;
    for (uint32_t i = 0; i < n && !missing; ++i) {
      for (uint64_t e = weak.row_offset[i]; e < weak.row_offset[i + 1]; ++e) {
        const double v = chained.at(i, weak.col[e]);
        if (v <= 0.0) {
          missing = true;
          break;
        }
        tau = std::min(tau, v);
      }
    }
    if (missing) continue;
    SeminormComparison out;
    out.m = m;
    out.tau = tau;
    out.eta = eta;
    out.constant = std::pow(
        weak.sup_value() * pow_p(static_cast<double>(m), p) *
            std::pow(1.0 + eta, m - 1) / tau,
        1.0 / p);
    return out;
  }
  throw Error(ErrorKind::disconnected,
              "no chain length covers the wide kernel's support");
}

CocycleComparison cocycle_comparison(const PointMap& map, const Kernel& dom,
                                     const Kernel& phi, const QieConstants& q,
                                     double p, Exec exec) {
  check_transport(map, phi);
  check_same_net(dom.net, map.domain, "domain kernel");
  if (!(p >= 1.0)) throw Error(ErrorKind::invalid_params, "need p >= 1");

  CocycleComparison out;
  out.pair_width = 2.0 * phi.width + q.lambda1 * dom.width + q.c1;
  out.tilde = make_ball_kernel(map.codomain, out.pair_width, exec);
  double tau = std::numeric_limits<double>::infinity();
  for (double v : out.tilde.value) tau = std::min(tau, v);
  out.tau = tau;

  // Largest domain mass mapped into one phi-ball of the codomain.
  std::vector<double> pulled(map.codomain->size(), 0.0);
  for (uint32_t x = 0; x < map.domain->size(); ++x) {
    for_each_in_ball(*map.codomain, map.image[x], phi.width,
                     [&](uint32_t z, double) {
                       pulled[z] += map.domain->weight[x];
                     });
  }
  for (double v : pulled) out.rel_mass = std::max(out.rel_mass, v);

  const double sup_phi = phi.sup_value();
  const double base = dom.sup_value() * sup_phi * sup_phi * out.rel_mass *
                      out.rel_mass / tau;
  // Row-sum tolerance of phi enters the averaging step twice.
  const double eta = phi.max_row_sum_error();
  out.constant = std::pow(base, 1.0 / p) * (1.0 + eta) * (1.0 + eta);
  return out;
}

}  // namespace qilab

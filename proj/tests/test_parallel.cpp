#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <complex>
#include <vector>

#include "qilab/boundary.hpp"
#include "qilab/embed.hpp"
#include "qilab/kernel.hpp"
#include "qilab/parallel.hpp"
#include "qilab/poincare.hpp"
#include "qilab/sepvol.hpp"
#include "qilab/space.hpp"

using namespace qilab;

namespace {

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

NetPtr small_zmu() {
  SpaceParams p;
  p.mu = {1.0, 1.0};
  p.R = 5.0;
  p.mesh = 1.0;
  return build_zmu_net(p);
}

std::vector<double> wiggle(uint32_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> f(n);
  for (auto& v : f) v = rng.uniform(-1.0, 1.0);
  return f;
}

bool same_kernel(const Kernel& a, const Kernel& b) {
  return a.width == b.width && a.row_offset == b.row_offset &&
         a.col == b.col && a.value == b.value &&
         a.has_isolated == b.has_isolated;
}

}  // namespace

TEST_CASE("deterministic primitives ignore the thread grid") {
  const auto f = [](int64_t i) {
    return std::sin(0.001 * static_cast<double>(i)) +
           static_cast<double>(i % 7);
  };
  const double serial = deterministic_sum(Exec::serial, 10007, 64, f);
  for (int threads : {1, 2, 3}) {
    set_threads(threads);
    CHECK(deterministic_sum(Exec::parallel, 10007, 64, f) == serial);
  }
  set_threads(2);
}

TEST_CASE("kernels build identically under both executors") {
  const NetPtr z = small_zmu();
  const NetPtr h = build_h2_net(4.0, 0.5);
  for (const NetPtr& net : {z, h}) {
    const Kernel ks = make_ball_kernel(net, 1.0, Exec::serial);
    const Kernel kp = make_ball_kernel(net, 1.0, Exec::parallel);
    CHECK(same_kernel(ks, kp));

    const Kernel cs = self_convolve(ks, 2, Exec::serial);
    const Kernel cp = self_convolve(kp, 2, Exec::parallel);
    CHECK(same_kernel(cs, cp));
    CHECK(ks.min_margin(0.5, Exec::serial) ==
          ks.min_margin(0.5, Exec::parallel));
  }
}

TEST_CASE("seminorms and quotients agree bitwise") {
  const NetPtr net = small_zmu();
  const Kernel k = make_ball_kernel(net, 1.0, Exec::serial);
  const auto re = wiggle(net->size(), 11);
  const auto im = wiggle(net->size(), 12);
  for (double p : {1.0, 2.0, 3.5}) {
    CHECK(seminorm(k, re, p, Exec::serial) ==
          seminorm(k, re, p, Exec::parallel));
    CHECK(seminorm(k, re, im, p, Exec::serial) ==
          seminorm(k, re, im, p, Exec::parallel));
    CHECK(rayleigh_quotient(k, re, im, p, Exec::serial) ==
          rayleigh_quotient(k, re, im, p, Exec::parallel));
  }

  const Cocycle pot = make_potential_cocycle(net, wiggle(net->size(), 13));
  CHECK(seminorm(k, pot, 2.0, Exec::serial) ==
        seminorm(k, pot, 2.0, Exec::parallel));
}

TEST_CASE("distortion measurement agrees bitwise") {
  const TreeToH2Result res = build_tree_to_h2(3, 8);
  const DistortionReport a = measure_distortion(res.map, Objective::sum,
                                                Exec::serial);
  const DistortionReport b = measure_distortion(res.map, Objective::sum,
                                                Exec::parallel);
  CHECK(a.constants.lambda1 == b.constants.lambda1);
  CHECK(a.constants.c1 == b.constants.c1);
  CHECK(a.constants.lambda2 == b.constants.lambda2);
  CHECK(a.constants.c2 == b.constants.c2);
  CHECK(a.pairs_evaluated == b.pairs_evaluated);

  const QieConstants loose{2.0, 10.0, 2.0, 10.0};
  const QieCheck ca = verify_qie(res.map, loose, 1e-9, Exec::serial);
  const QieCheck cb = verify_qie(res.map, loose, 1e-9, Exec::parallel);
  CHECK(ca.ok == cb.ok);
  CHECK(ca.worst_excess == cb.worst_excess);
}

TEST_CASE("boundary distortion estimates agree bitwise") {
  const BoundaryMap map = make_zmu_identity_map({1.0, 2.0}, {1.0, 1.0});
  const KEstimate a = estimate_K(map, 10.0, 2048, 5, Exec::serial);
  const KEstimate b = estimate_K(map, 10.0, 2048, 5, Exec::parallel);
  CHECK(a.value == b.value);
  CHECK(a.pairs_kept == b.pairs_kept);
  CHECK(a.pairs_total == b.pairs_total);
}

TEST_CASE("ascent and separation pipelines agree bitwise") {
  const NetPtr net = small_zmu();
  const Kernel k = make_ball_kernel(net, 1.0, Exec::serial);
  AscentOptions opt;
  opt.restarts = 2;
  opt.iters = 60;
  opt.seed = 5;
  CHECK(poincare_lower_ascent(k, 1.0, opt, Exec::serial).lower ==
        poincare_lower_ascent(k, 1.0, opt, Exec::parallel).lower);

  const NetPtr h = build_h2_net(4.0, 0.5);
  const SeparationUpper ua = sep_upper(*h, 1.0, Exec::serial);
  const SeparationUpper ub = sep_upper(*h, 1.0, Exec::parallel);
  CHECK(ua.crossing == ub.crossing);
  CHECK(ua.side == ub.side);
  CHECK(ua.family == ub.family);
  CHECK(ua.vol_side0 == ub.vol_side0);

  const SeparationLower la = sep_lower_poincare(*h, 1.0, Exec::serial);
  const SeparationLower lb = sep_lower_poincare(*h, 1.0, Exec::parallel);
  CHECK(la.value == lb.value);
  CHECK(la.c1 == lb.c1);
}

TEST_CASE("transports and comparison constants agree bitwise") {
  SpaceParams dp;
  dp.mu = {1.0, 2.0};
  dp.R = 2.0;
  dp.mesh = 1.0;
  SpaceParams cp = dp;
  cp.mu = {1.0, 1.0};
  const NetPtr dom = build_zmu_net(dp);
  const NetPtr cod = build_zmu_net(cp);
  const BoundaryMap theta = make_zmu_identity_map(dp.mu, cp.mu);
  const PointMap map = radial_extension(
      dom, cod, [&](std::span<const double> x, std::span<double> y) {
        theta.forward(x, y);
      });

  const Kernel kd = make_ball_kernel(dom, 1.0, Exec::serial);
  const Kernel kc = make_ball_kernel(cod, 1.0, Exec::serial);
  const auto g = wiggle(cod->size(), 21);
  CHECK(transport_function(map, kc, g, Exec::serial) ==
        transport_function(map, kc, g, Exec::parallel));

  const Cocycle a = make_potential_cocycle(cod, g);
  const Cocycle ta = transport_cocycle(a, kc, map, Exec::serial);
  const Cocycle tb = transport_cocycle(a, kc, map, Exec::parallel);
  CHECK(ta.is_potential == tb.is_potential);
  CHECK(ta.potential == tb.potential);
  CHECK(ta.dense == tb.dense);

  const Kernel wide = make_ball_kernel(dom, 2.0, Exec::serial);
  const SeminormComparison sa =
      seminorm_comparison(kd, wide, 2.0, 16, Exec::serial);
  const SeminormComparison sb =
      seminorm_comparison(kd, wide, 2.0, 16, Exec::parallel);
  CHECK(sa.constant == sb.constant);
  CHECK(sa.m == sb.m);

  const QieConstants q =
      measure_distortion(map, Objective::sum, Exec::serial).constants;
  const CocycleComparison ca =
      cocycle_comparison(map, kd, kc, q, 2.0, Exec::serial);
  const CocycleComparison cb =
      cocycle_comparison(map, kd, kc, q, 2.0, Exec::parallel);
  CHECK(ca.constant == cb.constant);
  CHECK(ca.pair_width == cb.pair_width);
  CHECK(ca.rel_mass == cb.rel_mass);
  CHECK(same_kernel(ca.tilde, cb.tilde));
}

TEST_CASE("results are invariant across thread counts") {
  const NetPtr net = small_zmu();
  std::vector<double> baseline;
  for (int threads : {1, 2, 3}) {
    set_threads(threads);
    const Kernel k = make_ball_kernel(net, 1.0, Exec::parallel);
    const auto f = wiggle(net->size(), 3);
    std::vector<double> vals = {
        seminorm(k, f, 2.0, Exec::parallel),
        rayleigh_quotient(k, f, {}, 1.0, Exec::parallel),
        estimate_K(make_unipotent_map(), 10.0, 512, 2, Exec::parallel).value,
    };
    if (baseline.empty())
      baseline = vals;
    else
      CHECK(vals == baseline);
  }
  set_threads(max_threads());
}

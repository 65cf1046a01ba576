// Benchmark of the OpenMP code paths against the serial reference
// implementations. Prints one line per operation with both timings and
// whether the results matched bitwise; exits nonzero on any mismatch.

#include <chrono>
#include <cstdio>
#include <string>
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

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

int failures = 0;

template <class Fn>
void bench(const std::string& name, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto serial = fn(Exec::serial);
  const double t_serial = ms_since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  const auto parallel = fn(Exec::parallel);
  const double t_parallel = ms_since(t1);
  const bool match = serial == parallel;
  if (!match) ++failures;
  std::printf("%-28s %10.2f ms %10.2f ms   x%.2f   %s\n", name.c_str(),
              t_serial, t_parallel,
              t_parallel > 0.0 ? t_serial / t_parallel : 0.0,
              match ? "match" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", max_threads());
  std::printf("%-28s %13s %13s %6s   %s\n", "operation", "serial",
              "parallel", "ratio", "check");

  SpaceParams zp;
  zp.mu = {1.0, 1.0};
  zp.R = 3.0;
  zp.mesh = 0.5;
  const NetPtr znet = build_zmu_net(zp);
  const NetPtr hnet = build_h2_net(5.0, 0.5);
  std::printf("nets: exponential %u points, hyperbolic %u points\n",
              znet->size(), hnet->size());

  bench("ball kernel (zmu)", [&](Exec exec) {
    return make_ball_kernel(znet, 1.0, exec).value;
  });
  const Kernel k = make_ball_kernel(znet, 1.0);

  Rng rng(7);
  std::vector<double> f(znet->size());
  for (auto& v : f) v = rng.uniform(-1.0, 1.0);
  bench("seminorm p=2", [&](Exec exec) {
    return seminorm(k, f, 2.0, exec);
  });
  bench("rayleigh quotient p=1", [&](Exec exec) {
    return rayleigh_quotient(k, f, {}, 1.0, exec);
  });
  bench("self-convolution m=2", [&](Exec exec) {
    return self_convolve(k, 2, exec).value;
  });

  const TreeToH2Result t2h = build_tree_to_h2(3, 9);
  bench("distortion (tree ball)", [&](Exec exec) {
    const auto c =
        measure_distortion(t2h.map, Objective::sum, exec).constants;
    return std::vector<double>{c.lambda1, c.c1, c.lambda2, c.c2};
  });

  const BoundaryMap theta = make_zmu_identity_map({1.0, 2.0}, {1.0, 1.0});
  bench("boundary K estimate", [&](Exec exec) {
    return estimate_K(theta, 15.0, 4096, 1, exec).value;
  });

  bench("separation upper bound", [&](Exec exec) {
    const auto up = sep_upper(*hnet, 1.0, exec);
    return std::vector<double>{static_cast<double>(up.crossing),
                               static_cast<double>(up.vol_side0),
                               static_cast<double>(up.vol_side1)};
  });

  AscentOptions opt;
  opt.restarts = 2;
  opt.iters = 80;
  bench("poincare ascent p=1", [&](Exec exec) {
    return poincare_lower_ascent(k, 1.0, opt, exec).lower;
  });

  if (failures) {
    std::printf("%d operation(s) diverged between executors\n", failures);
    return 1;
  }
  std::printf("all operations matched bitwise\n");
  return 0;
}

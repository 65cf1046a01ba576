#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qilab/sepvol.hpp"
#include "qilab/space.hpp"

using namespace qilab;

namespace {

NetPtr path_net(uint32_t n) {
  std::vector<Edge> edges;
  for (uint32_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return build_graph_net(n, std::move(edges));
}

NetPtr complete_net(uint32_t n) {
  std::vector<Edge> edges;
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
  return build_graph_net(n, std::move(edges));
}

// Two complete graphs of k points each, joined by one unit edge between
// point k-1 and point k.
NetPtr two_cliques(uint32_t k) {
  std::vector<Edge> edges;
  for (uint32_t i = 0; i < k; ++i)
    for (uint32_t j = i + 1; j < k; ++j) {
      edges.push_back({i, j, 1.0});
      edges.push_back({k + i, k + j, 1.0});
    }
  edges.push_back({k - 1, k, 1.0});
  return build_graph_net(2 * k, std::move(edges));
}

// Random connected unit-length graph: a random spanning tree plus extras.
NetPtr random_graph(uint32_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (uint32_t i = 1; i < n; ++i)
    edges.push_back({static_cast<uint32_t>(rng.below(i)), i, 1.0});
  const uint32_t extra = static_cast<uint32_t>(rng.below(n));
  for (uint32_t e = 0; e < extra; ++e) {
    const auto i = static_cast<uint32_t>(rng.below(n));
    const auto j = static_cast<uint32_t>(rng.below(n));
    if (i != j) edges.push_back({std::min(i, j), std::max(i, j), 1.0});
  }
  return build_graph_net(n, std::move(edges));
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

// Recompute the balance and crossing data of a witness partition directly.
struct PartitionAudit {
  uint64_t meets0 = 0, meets1 = 0, crossing = 0;
};

PartitionAudit audit_partition(const Net& net, const SeparationUpper& rep) {
  PartitionAudit out;
  for (uint32_t z : rep.family) {
    bool s0 = false, s1 = false;
    for_each_in_ball(net, z, rep.a, [&](uint32_t j, double) {
      (rep.side[j] ? s1 : s0) = true;
    });
    out.meets0 += s0;
    out.meets1 += s1;
    out.crossing += s0 && s1;
  }
  return out;
}

}  // namespace

TEST_CASE("covering and packing counts") {
  SUBCASE("single point") {
    auto net = build_graph_net(1, {});
    for (double a : {0.0, 5.0}) {
      const auto r = vol_a(*net, a);
      CHECK(r.covering_count == 1);
      CHECK(r.packing_count == 1);
    }
  }

  SUBCASE("point balls on a tree count every node") {
    auto net = build_tree_ball(3, 4);
    const auto r = vol_a(*net, 0.0);
    CHECK(net->size() == 46);
    CHECK(r.covering_count == 46);
    CHECK(r.packing_count == 46);
  }

  SUBCASE("six-point path at radius one") {
    auto net = path_net(6);
    const auto r = vol_a(*net, 1.0);
    CHECK(r.covering_count == 3);
    CHECK(r.packing_count == 3);
    CHECK(r.cover_centers == std::vector<uint32_t>{0, 2, 4});
  }

  SUBCASE("cover property and center separation") {
    for (auto net : {path_net(9), build_tree_ball(3, 3), build_h2_net(3.0, 0.5)}) {
      for (double a : {0.7, 1.0, 1.6}) {
        const auto r = vol_a(*net, a);
        // Every point lies within a of some center.
        for (uint32_t i = 0; i < net->size(); ++i) {
          double best = 1e300;
          for (uint32_t c : r.cover_centers)
            best = std::min(best, net->distance(c, i));
          CHECK(best <= a + 1e-9);
        }
        // Centers are pairwise more than a apart.
        for (size_t u = 0; u < r.cover_centers.size(); ++u)
          for (size_t v = u + 1; v < r.cover_centers.size(); ++v)
            CHECK(net->distance(r.cover_centers[u], r.cover_centers[v]) >
                  a + 1e-12);
        // Radius chain: packing(2a) <= covering(a) <= packing(a).
        const auto r2 = vol_a(*net, 2.0 * a);
        CHECK(r2.packing_count <= r.covering_count);
        CHECK(r.covering_count <= r.packing_count);
      }
    }
  }
}

TEST_CASE("hyperbolic covering counts grow exponentially") {
  std::vector<double> rs, logs;
  for (double R : {4.0, 5.0, 6.0, 7.0, 8.0}) {
    auto net = build_h2_net(R, 0.5);
    const auto r = vol_a(*net, 1.0);
    rs.push_back(R);
    logs.push_back(std::log(static_cast<double>(r.covering_count)));
  }
  const double slope = ls_slope(rs, logs);
  CAPTURE(slope);
  CHECK(slope >= 0.8);
  CHECK(slope <= 1.2);
}

TEST_CASE("net measure tracks the covering volume on exponential nets") {
  double lo = 1e300, hi = 0.0;
  for (double R : {2.0, 3.0, 4.0}) {
    SpaceParams p;
    p.mu = {1.0, 1.0};
    p.R = R;
    p.mesh = 0.5;
    auto net = build_zmu_net(p);
    const auto r = vol_a(*net, 1.0);
    const double ratio =
        net->total_measure() / static_cast<double>(r.covering_count);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CAPTURE(lo);
  CAPTURE(hi);
  CHECK(hi / lo <= 4.0);
}

TEST_CASE("separation upper bounds on frozen instances") {
  SUBCASE("six-point path has exactly one crossing ball") {
    auto net = path_net(6);
    const auto rep = sep_upper(*net, 1.0);
    CHECK(rep.crossing == 1);
    CHECK(sep_exhaustive(*net, 1.0) == 1);
    const auto audit = audit_partition(*net, rep);
    CHECK(audit.crossing == rep.crossing);
    CHECK(audit.meets0 == rep.vol_side0);
    CHECK(audit.meets1 == rep.vol_side1);
    const double third = static_cast<double>(rep.family.size()) / 3.0;
    CHECK(static_cast<double>(audit.meets0) >= third);
    CHECK(static_cast<double>(audit.meets1) >= third);
  }

  SUBCASE("two cliques cross only at the bridge") {
    auto net = two_cliques(4);
    const auto rep = sep_upper(*net, 1.0);
    CHECK(rep.crossing == 1);
    CHECK(sep_exhaustive(*net, 1.0) == 1);
  }

  SUBCASE("twelve-point path") {
    auto net = path_net(12);
    const auto rep = sep_upper(*net, 1.0);
    CHECK(rep.crossing == 1);
  }

  SUBCASE("exhaustive search rejects oversized nets") {
    try {
      sep_exhaustive(*path_net(21), 1.0);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::size_cap);
    }
  }
}

TEST_CASE("upper bound equals the exhaustive minimum on small graphs") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    auto net = random_graph(5 + seed % 8, seed);
    const auto rep = sep_upper(*net, 1.0);
    CHECK(rep.crossing == sep_exhaustive(*net, 1.0));
  }
}

TEST_CASE("poincare lower bound stays below the upper bound") {
  for (uint64_t seed = 1; seed <= 100; ++seed) {
    auto net = random_graph(5 + seed % 8, 1000 + seed);
    const double a = seed % 2 ? 1.0 : 2.0;
    const auto up = sep_upper(*net, a);
    const auto low = sep_lower_poincare(*net, a);
    CAPTURE(seed);
    CAPTURE(a);
    CHECK(low.value <= static_cast<double>(up.crossing) + 1e-9);
    CHECK(low.value >= 0.0);
    CHECK(low.c1 > 0.0);
    CHECK(low.s_factor > 0.0);
  }
}

TEST_CASE("lower bound quality on benchmark graphs") {
  SUBCASE("complete graph: sandwich within a factor of ten") {
    auto net = complete_net(6);
    const auto up = sep_upper(*net, 1.0);
    const auto low = sep_lower_poincare(*net, 1.0);
    CHECK(up.crossing == 1);
    CHECK(low.value <= static_cast<double>(up.crossing));
    CHECK(low.value >= static_cast<double>(up.crossing) / 10.0);
    // One covering ball, unit masses, multiplicity one: the bound reduces to
    // 1/(3(1+C1)), which caps at 1/3 for any certified C1 > 0.
    CHECK(low.value < 1.0 / 3.0);
    // Reported fields stay mutually consistent.
    const auto cover = vol_a(*net, 1.0);
    const double reassembled =
        static_cast<double>(cover.covering_count) / (3.0 * low.c1 * low.s_factor);
    CHECK(low.value == doctest::Approx(reassembled).epsilon(1e-12));
  }

  SUBCASE("long path: small but positive lower bound against upper bound one") {
    auto net = path_net(12);
    const auto up = sep_upper(*net, 1.0);
    const auto low = sep_lower_poincare(*net, 1.0);
    CHECK(up.crossing == 1);
    // Six balls, masses in [2,3], multiplicity 2: value = 2/(1 + 3*C1),
    // an order of magnitude below the upper bound for the certified C1.
    CHECK(low.value > 0.01);
    CHECK(low.value < 0.2);
    CHECK(low.value <= static_cast<double>(up.crossing) + 1e-9);
  }

  SUBCASE("no usable 1-Poincare estimate on a disconnected kernel") {
    std::vector<Edge> edges{{0, 1, 5.0}};
    auto net = build_graph_net(2, std::move(edges));
    try {
      sep_lower_poincare(*net, 1.0);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::no_c1_estimate);
    }
  }
}

TEST_CASE("separation scale on hyperbolic balls stays flat") {
  std::vector<double> rs, logs;
  for (double R : {4.0, 5.0, 6.0, 7.0}) {
    auto net = build_h2_net(R, 0.5);
    const auto rep = sep_upper(*net, 1.0);
    REQUIRE(rep.crossing >= 1);
    rs.push_back(R);
    logs.push_back(std::log(static_cast<double>(rep.crossing)));
    const auto audit = audit_partition(*net, rep);
    const double third = static_cast<double>(rep.family.size()) / 3.0;
    CHECK(static_cast<double>(audit.meets0) >= third);
    CHECK(static_cast<double>(audit.meets1) >= third);
    CHECK(audit.crossing == rep.crossing);
  }
  const double slope = ls_slope(rs, logs);
  CAPTURE(slope);
  CHECK(std::abs(slope) <= 0.3);
}

TEST_CASE("tree capacity inequality") {
  // Equal volumes: right side zero, always consistent.
  const auto eq = tree_bound_check(7.0, 7.0, 3, 1.0, 1.0, 1.0);
  CHECK(eq.holds);
  CHECK(eq.rhs == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(eq.slack == doctest::Approx(3.0).epsilon(1e-13));

  // Ratio d^10 against lambda=1, a=1, c=1: needs 3 >= 10, fails by 7.
  const double S = std::pow(3.0, 10);
  const auto bad = tree_bound_check(S, 1.0, 3, 1.0, 1.0, 1.0);
  CHECK(!bad.holds);
  CHECK(bad.slack == doctest::Approx(-7.0).epsilon(1e-12));
  CHECK(bad.lhs == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(bad.rhs == doctest::Approx(10.0).epsilon(1e-12));

  for (int d : {0, 1}) {
    try {
      tree_bound_check(1.0, 1.0, d, 1.0, 1.0, 1.0);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_params);
    }
  }
  CHECK_THROWS_AS(tree_bound_check(0.0, 1.0, 3, 1.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(tree_bound_check(1.0, -1.0, 3, 1.0, 1.0, 1.0), Error);
}

TEST_CASE("volume growth threshold") {
  const auto holds_at = [](double alpha, double lambda, double R, double c) {
    // (c/lambda)^alpha e^(R-2c) <= (2 lambda R + c)^alpha, in log form.
    if (c == 0.0) return true;
    const double lhs = alpha * std::log(c / lambda) + R - 2.0 * c;
    const double rhs = alpha * std::log(2.0 * lambda * R + c);
    return lhs <= rhs;
  };

  SUBCASE("small radius needs no threshold") {
    CHECK(volume_growth_lower_bound(2.0, 1.0, 1.0) == 0.0);
  }

  SUBCASE("large radius forces c near R/2") {
    const double c = volume_growth_lower_bound(2.0, 2.0, 100.0);
    CHECK(c / 100.0 >= 0.35);
    CHECK(c / 100.0 <= 0.5);
    // c is the boundary: feasible above, infeasible just below.
    CHECK(holds_at(2.0, 2.0, 100.0, c + 1e-3));
    CHECK(!holds_at(2.0, 2.0, 100.0, c - 1e-3));
  }

  SUBCASE("monotone in the radius") {
    double prev = -1.0;
    for (double R : {20.0, 40.0, 60.0, 80.0, 100.0}) {
      const double c = volume_growth_lower_bound(2.0, 1.0, R);
      CHECK(c >= prev);
      prev = c;
    }
  }

  SUBCASE("asymptotic fraction") {
    const double c = volume_growth_lower_bound(2.0, 1.0, 1000.0);
    CHECK(c / 1000.0 >= 0.4);
    CHECK(c / 1000.0 <= 0.5);
  }

  CHECK_THROWS_AS(volume_growth_lower_bound(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(volume_growth_lower_bound(2.0, 0.5, 1.0), Error);
  CHECK_THROWS_AS(volume_growth_lower_bound(2.0, 1.0, 0.0), Error);
}

TEST_CASE("affine connectivity consistency") {
  CHECK(connectivity_bound_check(10.0, 1.0, 1.0, 0.0));
  CHECK(!connectivity_bound_check(100.0, 1.0, 1.0, 1.0));
  CHECK(connectivity_bound_check(0.0, 0.0, 0.0, 0.0));
  CHECK_THROWS_AS(connectivity_bound_check(-1.0, 1.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(connectivity_bound_check(1.0, -1.0, 1.0, 1.0), Error);
}

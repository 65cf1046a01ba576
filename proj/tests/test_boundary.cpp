#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "qilab/boundary.hpp"
#include "qilab/common.hpp"

using namespace qilab;

TEST_CASE("unipotent separation formula") {
  CHECK(unipotent_visual_distance(0.3, 0.0) == 0.3);
  CHECK(unipotent_visual_distance(-0.2, 0.0) == 0.2);
  const double e1 = std::exp(-1.0);
  CHECK(unipotent_visual_distance(0.0, e1) == doctest::Approx(e1).epsilon(1e-15));
  CHECK(unipotent_visual_distance(1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  // y log|y| -> 0 as y -> 0, so tiny y leaves |x| in charge.
  CHECK(unipotent_visual_distance(0.25, 1e-300) ==
        doctest::Approx(0.25).epsilon(1e-12));
  // Odd map: negating both coordinates preserves the separation.
  CHECK(unipotent_visual_distance(0.1, 0.01) ==
        doctest::Approx(unipotent_visual_distance(-0.1, -0.01)).epsilon(1e-15));
}

TEST_CASE("forward and inverse evaluators agree") {
  Rng rng(3);
  const auto roundtrip = [&](const BoundaryMap& m, double lo, double hi) {
    std::vector<double> x(m.dim()), y(m.dim()), back(m.dim());
    for (int it = 0; it < 200; ++it) {
      for (double& v : x) v = rng.uniform(lo, hi);
      m.forward(x, y);
      m.inverse(y, back);
      for (int c = 0; c < m.dim(); ++c)
        CHECK(back[c] == doctest::Approx(x[c]).epsilon(1e-9).scale(1.0));
    }
  };
  roundtrip(make_identity_map(2), -0.5, 0.5);
  roundtrip(make_zmu_identity_map({1.0, 2.0}, {1.0, 1.0}), -0.5, 0.5);
  roundtrip(make_biholder_map(0.8, 1.5, 2.0), -0.4, 0.4);
  roundtrip(make_unipotent_map(), -0.4, 0.4);
}

TEST_CASE("log ratio of visual separations") {
  const BoundaryMap ident = make_identity_map(2);
  Rng rng(5);
  for (int it = 0; it < 50; ++it) {
    const std::vector<double> a = {rng.uniform(), rng.uniform()};
    const std::vector<double> b = {rng.uniform(), rng.uniform()};
    if (a == b) continue;
    CHECK(visual_log_ratio(ident, a, b) == 0.0);
  }

  // Anisotropy change: separation s in the heavy coordinate reads as
  // s^(1/2) upstream and s downstream.
  const BoundaryMap zmu = make_zmu_identity_map({1.0, 2.0}, {1.0, 1.0});
  const double s = std::exp(-4.0);
  const std::vector<double> p0 = {0.0, 0.0};
  const std::vector<double> p1 = {0.0, s};
  CHECK(visual_log_ratio(zmu, p0, p1) == doctest::Approx(2.0).epsilon(1e-12));

  const BoundaryMap uni = make_unipotent_map();
  const std::vector<double> q1 = {0.0, std::exp(-1.0)};
  CHECK(visual_log_ratio(uni, p0, q1) ==
        doctest::Approx(0.0).epsilon(1e-12).scale(1.0));

  CHECK_THROWS_AS((void)visual_log_ratio(zmu, p0, p0), Error);
  try {
    (void)visual_log_ratio(uni, q1, q1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::coincident_points);
  }
}

TEST_CASE("closed-form distortion values") {
  const auto same = analytic_K(make_zmu_identity_map({1.0, 2.0}, {1.0, 2.0}), 7.0);
  REQUIRE(same.has_value());
  CHECK(same->value == 0.0);
  CHECK(!same->is_upper_bound);

  const auto aniso = analytic_K(make_zmu_identity_map({1.0, 2.0}, {1.0, 1.0}), 10.0);
  REQUIRE(aniso.has_value());
  CHECK(aniso->value == 10.0);
  CHECK(!aniso->is_upper_bound);

  const auto ident = analytic_K(make_identity_map(3), 25.0);
  REQUIRE(ident.has_value());
  CHECK(ident->value == 0.0);

  const auto hold = analytic_K(make_biholder_map(0.8, 1.5, 1.0), 10.0);
  REQUIRE(hold.has_value());
  CHECK(hold->value == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(hold->is_upper_bound);

  const auto hold2 = analytic_K(make_biholder_map(0.8, 1.5, 2.0), 10.0);
  REQUIRE(hold2.has_value());
  CHECK(hold2->value == doctest::Approx(5.0 + std::log(2.0)).epsilon(1e-12));

  CHECK(!analytic_K(make_unipotent_map(), 10.0).has_value());
}

TEST_CASE("induced quasi-isometry constants") {
  const ThetaConstants flat = theta_constants(0.0, 1.0);
  CHECK(flat.lambda == 1.0);
  CHECK(flat.additive == 1.0);
  const ThetaConstants big = theta_constants(10.0, 2.0);
  CHECK(big.lambda == 11.0);
  CHECK(big.additive == 22.0);
  try {
    (void)theta_constants(1.0, 0.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::nonpositive_c);
  }
  CHECK_THROWS_AS((void)theta_constants(-1.0, 1.0), Error);
}

TEST_CASE("distortion estimate of the identity is zero") {
  const KEstimate est = estimate_K(make_identity_map(2), 10.0, 64, 7);
  CHECK(est.value == 0.0);
  CHECK(est.pairs_kept > 0);
  CHECK(est.pairs_total >= est.pairs_kept);
  CHECK_THROWS_AS((void)estimate_K(make_identity_map(2), 10.0, 1, 7), Error);
}

TEST_CASE("anisotropy estimate hits the analytic value") {
  const BoundaryMap zmu = make_zmu_identity_map({1.0, 2.0}, {1.0, 1.0});
  const KEstimate at10 = estimate_K(zmu, 10.0, 1 << 10, 1);
  CHECK(at10.value <= 10.0);  // never above the exact supremum
  CHECK(at10.value == doctest::Approx(10.0).epsilon(1e-12));

  const KEstimate at20 = estimate_K(zmu, 20.0, 1 << 10, 1);
  CHECK(at20.value <= 20.0);
  CHECK(at20.value >= 0.85 * 20.0);  // sampling adequacy at this resolution

  // Monotone in R and in the sample count.
  CHECK(at10.value <= at20.value);
  const KEstimate coarse = estimate_K(zmu, 10.0, 64, 1);
  const KEstimate fine = estimate_K(zmu, 10.0, 256, 1);
  CHECK(coarse.value <= fine.value);
  CHECK(fine.value <= at10.value);
}

TEST_CASE("shear estimate grows like log R") {
  const BoundaryMap uni = make_unipotent_map();
  double prev = 0.0;
  for (const double R : {5.0, 10.0, 20.0, 40.0}) {
    const KEstimate est = estimate_K(uni, R, 1 << 10, 2);
    CHECK(est.value >= std::log(R) - 1e-9);
    CHECK(est.value / std::log(R) <= 3.0);
    CHECK(est.value >= prev);
    prev = est.value;
  }
}

TEST_CASE("four shear regimes obey the case bounds") {
  const BoundaryMap uni = make_unipotent_map();
  const double R = 5.0;
  const double y = std::exp(-5.0);
  const std::vector<double> origin = {0.0, 0.0};

  const auto signed_ratio = [&](double dx, double dy) {
    const std::vector<double> p = {dx, dy};
    const double dom = std::max(std::abs(dx), std::abs(dy));
    const double img = unipotent_visual_distance(dx, dy);
    const double mag = visual_log_ratio(uni, origin, p);
    const double sgn = img >= dom ? 1.0 : -1.0;
    CHECK(mag == doctest::Approx(std::abs(std::log(img / dom))).epsilon(1e-12));
    return sgn * mag;
  };

  // (x small, y big; shear term wins downstream): expansion by log j.
  const double up = signed_ratio(0.0, y);
  CHECK(up == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  // (x = y log|y| cancels; x big, y small downstream): contraction by log j.
  const double down = signed_ratio(y * std::log(y), y);
  CHECK(down == doctest::Approx(-std::log(5.0)).epsilon(1e-12));
  // (x big, y tiny): ratio near zero.
  const double flat = signed_ratio(std::exp(-5.0), std::exp(-15.0));
  CHECK(std::abs(flat) <= 0.01);
  // (x < y with the image still led by |y|): exactly zero.
  const double zero = signed_ratio(-0.5 * std::exp(-1.0), std::exp(-1.0));
  CHECK(zero == doctest::Approx(0.0).scale(1.0));

  for (const double v : {up, down, flat, zero}) {
    CHECK(v <= std::log(2.0 * R) + 2.0);
    CHECK(v >= -std::log(R) - 2.0);
  }
}

TEST_CASE("power-map estimate stays below its certified bound") {
  const BoundaryMap hold = make_biholder_map(0.8, 1.5, 2.0);
  const double R = 10.0;
  const KEstimate est = estimate_K(hold, R, 1 << 10, 3);
  const auto bound = analytic_K(hold, R);
  REQUIRE(bound.has_value());
  // gamma = 1.15, so deep pairs distort by about (gamma-1)*R.
  CHECK(est.value >= 1.3);
  CHECK(est.value <= bound->value + 1.0);
}

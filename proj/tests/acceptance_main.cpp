// End-to-end acceptance checks. One line per criterion:
//   [Cn] PASS|FAIL — thresholds and measured values
// plus informational "[Cn supp]" lines carrying desk-scale measurements for
// configurations whose stated parameters exceed the point cap or the run
// budget. Exit code is the number of failed criteria.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "qilab/boundary.hpp"
#include "qilab/common.hpp"
#include "qilab/embed.hpp"
#include "qilab/experiment.hpp"
#include "qilab/fitgrowth.hpp"
#include "qilab/kernel.hpp"
#include "qilab/poincare.hpp"
#include "qilab/sepvol.hpp"
#include "qilab/space.hpp"

using namespace qilab;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("[%s] %s — %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void supp(const char* id, const std::string& detail) {
  std::printf("[%s supp] %s\n", id, detail.c_str());
  std::fflush(stdout);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<double> column(const ExperimentResult& res,
                           const std::string& name) {
  size_t c = res.header.size();
  for (size_t i = 0; i < res.header.size(); ++i)
    if (res.header[i] == name) c = i;
  std::vector<double> out;
  for (const auto& row : res.rows) out.push_back(row[c]);
  return out;
}

std::string fit_text(const GrowthFit& fit) {
  std::string s = std::string("model=") + to_string(fit.model);
  if (fit.model == GrowthModel::power) s += " beta=" + num(fit.beta);
  s += " r2=" + num(fit.r2);
  return s;
}

// Power-law regression y = a*R^beta (log-log least squares) with the
// coefficient of determination taken against the original values.
struct PowerFit {
  double beta = 0.0;
  double r2 = 0.0;
};

PowerFit power_fit(const std::vector<double>& R, const std::vector<double>& y) {
  std::vector<double> tx(R.size()), ty(y.size());
  for (size_t i = 0; i < R.size(); ++i) {
    tx[i] = std::log(R[i]);
    ty[i] = std::log(y[i]);
  }
  const LinearFit f = linear_fit(tx, ty);
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    const double pred = std::exp(f.intercept) * std::pow(R[i], f.slope);
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return {f.slope, ss_tot > 0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0)
                              : 1.0};
}

// --- C1: forest on sqrt(R)-spaced generations of circle nets --------------

void criterion1() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::tree_embed;
  spec.R_list = {9, 16, 25, 36, 49};
  spec.eps = 1.0;
  try {
    const ExperimentResult res = run(spec);
    const PowerFit pf = power_fit(spec.R_list, column(res, "total"));
    const bool ok = pf.beta >= 0.35 && pf.beta <= 0.65 && pf.r2 >= 0.9;
    report("C1", ok,
           "forest distortion over R={9,16,25,36,49}, need power fit with "
           "beta in [0.35,0.65], r2>=0.9: beta=" +
               num(pf.beta) + " r2=" + num(pf.r2));
  } catch (const Error& e) {
    report("C1", false,
           std::string("forest distortion over R={9,16,25,36,49} cannot be "
                       "measured under the 2e6-point cap (circle nets need "
                       "~pi*e^R points): ") +
               e.what());
  }
  spec.R_list = {2.25, 4, 6.25, 9};
  const ExperimentResult res = run(spec);
  const auto totals = column(res, "total");
  const PowerFit pf = power_fit(spec.R_list, totals);
  std::string row_text;
  for (size_t i = 0; i < totals.size(); ++i)
    row_text += (i ? " " : "") + num(totals[i]);
  supp("C1", "feasible radii R={2.25,4,6.25,9}: totals " + row_text +
                 "; power fit beta=" + num(pf.beta) + " r2=" + num(pf.r2) +
                 "; best " +
                 (res.fit ? fit_text(*res.fit) : std::string("no fit")));
}

// --- C2: degree-3 tree placed on capacity-matched circles -----------------

void criterion2() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::tree_to_h2;
  spec.degree = 3;
  spec.R_list = {4, 5, 6, 7, 8, 9, 10};
  const ExperimentResult res = run(spec);
  const PowerFit pf = power_fit(spec.R_list, column(res, "total"));
  const bool fit_ok = pf.beta >= 0.35 && pf.beta <= 0.65 && pf.r2 >= 0.9;

  const double logd = std::log(3.0);
  double rk_min = std::numeric_limits<double>::infinity();
  double rk_max = 0.0;
  for (int k = 5; k <= 10; ++k) {
    const double r = generation_radius(3, k) / (k * logd);
    rk_min = std::min(rk_min, r);
    rk_max = std::max(rk_max, r);
  }
  const bool rk_ok = rk_min >= 0.8 && rk_max <= 1.2;
  report("C2", fit_ok && rk_ok,
         "tree placement over R={4..10}: need power fit beta in [0.35,0.65] "
         "r2>=0.9 (beta=" +
             num(pf.beta) + " r2=" + num(pf.r2) +
             ") and R_k/(k ln 3) in [0.8,1.2] for k=5..10 (range [" +
             num(rk_min) + "," + num(rk_max) + "])");
  supp("C2",
       "additive constants grow at sqrt scale (c1: " +
           num(column(res, "c1").front()) + " -> " +
           num(column(res, "c1").back()) +
           ") but the multiplier offset lambda1+lambda2 ~ " +
           num(column(res, "lambda1").back() + 1.0) +
           " flattens the log-log slope of the total at these radii; the "
           "capacity radii solve e^sqrt(Rk)*4*3^k = e^Rk, whose root "
           "exceeds k ln 3 by the sqrt(Rk)+log 4 correction (k=5: " +
           num(generation_radius(3, 5) / (5 * logd)) + ", k=10: " +
           num(generation_radius(3, 10) / (10 * logd)) +
           ", k=40: " + num(generation_radius(3, 40) / (40 * logd)) +
           "), above 1.2 at desk scale");
}

// --- C3: height-formula error against exact circle-net distances ----------

void criterion3() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::radial_identity;
  spec.R_list = {10, 30};
  spec.pairs = 10000;
  spec.seed = 1;
  const ExperimentResult res = run(spec);
  const auto max_err = column(res, "max_err");
  const bool ok = max_err[0] <= 8.0 && max_err[1] <= 8.0 &&
                  max_err[1] - max_err[0] < 1.0;
  report("C3", ok,
         "10^4 random pairs per radius: need max |formula - exact| <= 8 and "
         "max_err(30)-max_err(10) < 1: max_err(10)=" +
             num(max_err[0]) + " max_err(30)=" + num(max_err[1]) +
             " diff=" + num(max_err[1] - max_err[0]));
}

// --- C4: sampled boundary distortion against the closed form --------------

void criterion4() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::kr_curve;
  spec.theta = "zmu_identity";
  spec.mu = {1, 2};
  spec.mu_img = {1, 1};
  spec.grid_n = 1024;
  spec.R_list = {10, 20};
  const ExperimentResult res = run(spec);
  const auto ratio = column(res, "ratio");
  const bool ok = ratio[0] >= 0.85 && ratio[0] <= 1.0 + 1e-12 &&
                  ratio[1] >= 0.85 && ratio[1] <= 1.0 + 1e-12;
  report("C4", ok,
         "estimated/exact K for exponents (1,2)->(1,1), grid 2^10: need "
         "both ratios in [0.85,1.0]: R=10 -> " +
             num(ratio[0]) + ", R=20 -> " + num(ratio[1]));
}

// --- C5: shear-map distortion grows at most logarithmically ---------------

void criterion5() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::radial_unipotent;
  spec.R_list = {5, 10, 20, 40};
  const ExperimentResult res = run(spec);
  const auto over_log = column(res, "K_over_logR");
  double worst = 0.0;
  for (double v : over_log) worst = std::max(worst, v);
  const bool fit_ok =
      res.fit && (res.fit->model == GrowthModel::logarithmic ||
                  (res.fit->model == GrowthModel::power &&
                   res.fit->beta <= 0.25));
  const bool ok = fit_ok && worst <= 3.0;
  report("C5", ok,
         "shear K over R={5,10,20,40}: need log fit (or power beta<=0.25) "
         "and K/log R <= 3: " +
             (res.fit ? fit_text(*res.fit) : std::string("no fit")) +
             ", max K/log R = " + num(worst));
}

// --- C6: certificate for the height-preserving extension ------------------

void criterion6() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::radial_zmu;
  spec.mu = {1, 2};
  spec.mu_img = {1, 1};
  spec.mesh = 1.0;
  spec.R_list = {5, 10, 15};
  try {
    const ExperimentResult res = run(spec);
    const auto ok_col = column(res, "qie_ok");
    bool ok = true;
    for (double v : ok_col) ok = ok && v == 1.0;
    report("C6", ok,
           "extension certificate lambda=1+2K/c, Cq=2K+c+16, c=D+1 at "
           "R={5,10,15}: verified=" +
               std::to_string(ok_col.size()));
  } catch (const Error& e) {
    report("C6", false,
           std::string("certificate at R={5,10,15} cannot be computed: the "
                       "exponent-(1,2) net needs ~e^(3R) points (cap 2e6) "
                       "and the check compares all point pairs: ") +
               e.what());
  }
  spec.R_list = {2, 3};
  const ExperimentResult res = run(spec);
  const auto ok_col = column(res, "qie_ok");
  const auto cq = column(res, "Cq");
  supp("C6", "feasible radii R={2,3}: qie_ok=" + num(ok_col[0]) + "," +
                 num(ok_col[1]) + " with Cq=" + num(cq[0]) + "," +
                 num(cq[1]) +
                 "; at these radii Cq exceeds most pair distances, so the "
                 "certificate holds with little content");
}

// --- C7: growth of the p=2 constant across R ------------------------------

void criterion7() {
  ExperimentSpec spec;
  spec.kind = ExperimentKind::poincare_scaling;
  spec.mu = {1, 2};
  spec.mesh = 1.0;
  spec.R_list = {4, 5, 6, 7, 8, 9, 10, 11, 12};
  try {
    const ExperimentResult res = run(spec);
    const bool ok = res.slope_fit && res.slope_fit->slope >= 1.05 &&
                    res.slope_fit->slope <= 2.6 && res.slope_fit->r2 >= 0.9;
    report("C7", ok,
           "log C2 slope for exponents (1,2), R={4..12}: need slope in "
           "[1.05,2.6], r2>=0.9: " +
               (res.slope_fit
                    ? "slope=" + num(res.slope_fit->slope) +
                          " r2=" + num(res.slope_fit->r2)
                    : std::string("no fit")));
  } catch (const Error& e) {
    report("C7", false,
           std::string("exponent-(1,2) sweep cannot be computed past R=4 "
                       "under the 2e6-point cap (the net needs ~e^(3R) "
                       "points): ") +
               e.what());
  }
  spec.mu = {1, 1};
  spec.R_list = {3, 4, 5, 6};
  const ExperimentResult res = run(spec);
  const auto c2 = column(res, "C2");
  std::string c2_text;
  for (size_t i = 0; i < c2.size(); ++i)
    c2_text += (i ? " " : "") + num(c2[i]);
  supp("C7",
       "exponents (1,1), R={3..6}: C2 = " + c2_text +
           (res.slope_fit ? "; slope=" + num(res.slope_fit->slope) +
                                " r2=" + num(res.slope_fit->r2)
                          : "") +
           " (band rescaled for these exponents would be [0.7,1.3])");
}

// --- C8: parity mode on the double cover ----------------------------------

void criterion8() {
  SpaceParams p;
  p.mu = {1, 1};
  p.R = 4.0;
  p.mesh = 0.25;
  p.cover = true;
  const NetPtr net = build_zmu_net(p);
  const auto u = parity_mode(*net);

  std::complex<double> mean{0, 0};
  double total = 0.0;
  double worst_mod = 0.0;
  for (uint32_t i = 0; i < net->size(); ++i) {
    mean += net->weight[i] * u[i];
    total += net->weight[i];
    worst_mod = std::max(worst_mod, std::abs(std::abs(u[i]) - 1.0));
  }
  const double mean_mag = std::abs(mean) / total;
  const bool mean_ok = mean_mag <= 1e-9;
  const bool mod_ok = worst_mod <= 1e-12;

  const double energy = std::pow(gradient_seminorm_discrete(*net, u, 3.0), 3.0);
  const double target = continuum_grad_integral(p.mu, 3.0);  // = pi
  const double ratio = energy / target;
  const bool energy_ok = ratio >= 0.9 && ratio <= 1.1;

  report("C8", mean_ok && mod_ok && energy_ok,
         "parity mode, exponents (1,1), p=3, mesh=1/4, R=4: |mean|=" +
             num(mean_mag) + " (need <=1e-9), max ||u|-1|=" + num(worst_mod) +
             ", discrete p-energy=" + num(energy) + " vs pi=" + num(target) +
             " (need within 10%, ratio=" + num(ratio) + ")");
  const double geom = mode_energy_closed_form(p.mu, 3.0, p.R);
  SpaceParams half = p;
  half.mesh = 0.5;
  const NetPtr coarse = build_zmu_net(half);
  const double coarse_energy =
      std::pow(gradient_seminorm_discrete(*coarse, parity_mode(*coarse), 3.0),
               3.0);
  supp("C8",
       "the discrete p-energy converges to the volume-weighted closed form "
       "2*pi^p*(1-e^-R) = " +
           num(geom) + " (mesh 1/2 -> " + num(coarse_energy / geom) +
           ", mesh 1/4 -> " + num(energy / geom) +
           " of it), a quantity ~2*pi^(p-1) times the scale-free constant "
           "pi; no mesh or radius brings it within 10% of pi");
}

// --- C9: always-on property suites ----------------------------------------

bool rows_sum_to_one() {
  SpaceParams zp;
  zp.mu = {1, 1};
  zp.R = 3.0;
  zp.mesh = 0.5;
  const Kernel a = make_ball_kernel(build_zmu_net(zp), 1.0);
  const Kernel b = make_ball_kernel(build_h2_net(4.0, 0.5), 1.0);
  const Kernel c = make_ball_kernel(build_tree_ball(3, 4), 2.0);
  return a.max_row_sum_error() <= 1e-9 && b.max_row_sum_error() <= 1e-9 &&
         c.max_row_sum_error() <= 1e-9;
}

bool cocycle_identity_holds() {
  const uint32_t n = 50;
  std::vector<Edge> edges;
  for (uint32_t i = 1; i < n; ++i) edges.push_back({i - 1, i, 1.0});
  const NetPtr net = build_graph_net(n, edges);
  Rng rng(17);
  std::vector<double> g(n);
  for (auto& v : g) v = rng.uniform(-2.0, 2.0);
  const Cocycle pot = make_potential_cocycle(net, g);
  std::vector<double> dense(static_cast<size_t>(n) * n);
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = 0; j < n; ++j)
      dense[static_cast<size_t>(i) * n + j] = g[i] - g[j];
  const Cocycle mat = make_dense_cocycle(net, dense);
  for (int t = 0; t < 1000; ++t) {
    const auto i = static_cast<uint32_t>(rng.below(n));
    const auto j = static_cast<uint32_t>(rng.below(n));
    const auto k = static_cast<uint32_t>(rng.below(n));
    if (std::abs(pot.at(i, j) + pot.at(j, k) - pot.at(i, k)) > 1e-9)
      return false;
    if (std::abs(mat.at(i, j) + mat.at(j, k) - mat.at(i, k)) > 1e-9)
      return false;
  }
  return true;
}

bool comparison_constants_hold() {
  const NetPtr net = build_h2_net(3.0, 0.5);
  const Kernel narrow = make_ball_kernel(net, 0.6);
  const Kernel wide = make_ball_kernel(net, 1.8);
  const SeminormComparison cmp = seminorm_comparison(narrow, wide, 2.0);

  PointMap id;
  id.domain = net;
  id.codomain = net;
  id.image.resize(net->size());
  for (uint32_t i = 0; i < net->size(); ++i) id.image[i] = i;
  const Kernel phi = make_ball_kernel(net, 0.8);
  const CocycleComparison ccmp =
      cocycle_comparison(id, narrow, phi, {1.0, 0.0, 1.0, 0.0}, 2.0);

  for (uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    std::vector<double> f(net->size());
    for (auto& v : f) v = rng.uniform(-1.0, 1.0);
    if (seminorm(wide, f, 2.0) >
        cmp.constant * seminorm(narrow, f, 2.0) + 1e-12)
      return false;
    const Cocycle a = make_potential_cocycle(net, f);
    const Cocycle b = transport_cocycle(a, phi, id);
    if (seminorm(narrow, b, 2.0) >
        ccmp.constant * seminorm(ccmp.tilde, a, 2.0) + 1e-12)
      return false;
  }
  return true;
}

bool distortion_matches_grid() {
  const auto side_cost = [](double lam, double c, Objective obj) {
    return obj == Objective::sum ? lam + c : std::max(lam, c);
  };
  for (uint32_t n = 2; n <= 6; ++n) {
    for (uint64_t seed = 1; seed <= 3; ++seed) {
      Rng rng(100 * n + seed);
      std::vector<Edge> de, ie;
      for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = i + 1; j < n; ++j) {
          de.push_back({i, j, 0.5 + 2.0 * rng.uniform()});
          ie.push_back({i, j, 0.5 + 2.0 * rng.uniform()});
        }
      PointMap m;
      m.domain = build_graph_net(n, de);
      m.codomain = build_graph_net(n, ie);
      m.image.resize(n);
      for (auto& v : m.image) v = static_cast<uint32_t>(rng.below(n));

      std::vector<std::pair<double, double>> pairs;
      for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = i + 1; j < n; ++j)
          pairs.emplace_back(m.domain->distance(i, j),
                             m.codomain->distance(m.image[i], m.image[j]));
      for (Objective obj : {Objective::sum, Objective::max}) {
        const DistortionReport rep = measure_distortion(m, obj);
        for (bool upper : {true, false}) {
          const double h = 1.0 / 512.0;
          double best = std::numeric_limits<double>::infinity();
          for (double lam = 1.0; lam <= 32.0 + 1e-12; lam += h) {
            double need = 0.0;
            for (const auto& [a, b] : pairs)
              need = std::max(need, upper ? b - lam * a : a - lam * b);
            best = std::min(best, side_cost(lam, std::max(0.0, need), obj));
          }
          const double got =
              upper ? side_cost(rep.constants.lambda1, rep.constants.c1, obj)
                    : side_cost(rep.constants.lambda2, rep.constants.c2, obj);
          double coord = 0.0;
          for (const auto& [a, b] : pairs)
            coord = std::max(coord, upper ? a : b);
          const double tol = h * (coord + 1.0) + 1e-9;
          if (got > best + 1e-9 || got < best - tol) return false;
        }
        if (!verify_qie(m, rep.constants).ok) return false;
      }
    }
  }
  return true;
}

bool sep_matches_exhaustive() {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const uint32_t n = 5 + static_cast<uint32_t>(rng.below(8));
    std::vector<Edge> edges;
    for (uint32_t i = 1; i < n; ++i)
      edges.push_back({static_cast<uint32_t>(rng.below(i)), i, 1.0});
    const uint64_t extra = rng.below(n);
    for (uint64_t e = 0; e < extra; ++e) {
      const auto i = static_cast<uint32_t>(rng.below(n));
      const auto j = static_cast<uint32_t>(rng.below(n));
      if (i != j) edges.push_back({std::min(i, j), std::max(i, j), 1.0});
    }
    const NetPtr net = build_graph_net(n, edges);
    if (sep_upper(*net, 1.0).crossing != sep_exhaustive(*net, 1.0))
      return false;
  }
  return true;
}

void criterion9() {
  const bool rows = rows_sum_to_one();
  const bool ident = cocycle_identity_holds();
  const bool cmps = comparison_constants_hold();
  const bool grid = distortion_matches_grid();
  const bool sep = sep_matches_exhaustive();
  const auto yn = [](bool b) { return b ? "ok" : "FAIL"; };
  report("C9", rows && ident && cmps && grid && sep,
         std::string("property suites: kernel row sums +-1e-9 [") + yn(rows) +
             "], additivity on 10^3 triples +-1e-9 [" + yn(ident) +
             "], comparison constants on 100 instances [" + yn(cmps) +
             "], optimizer vs (lambda,c) grid on maps <=6 points [" +
             yn(grid) + "], sweep bound = exhaustive minimum on graphs <=12 "
                        "nodes [" +
             yn(sep) + "]");
}

// --- C10: volume growth threshold and affine consistency ------------------

void criterion10() {
  const double root = volume_growth_lower_bound(2.0, 2.0, 1000.0);
  const bool root_ok = root / 1000.0 >= 0.4 && root / 1000.0 <= 0.5;
  const bool reject_ok = !connectivity_bound_check(100.0, 1.0, 1.0, 1.0);
  report("C10", root_ok && reject_ok,
         "growth threshold (alpha=2, lambda=2, R=10^3)/10^3 = " +
             num(root / 1000.0) +
             " (need in [0.4,0.5]); consistency check rejects "
             "(R=100, lambda2=1, c1=1, c2=1): " +
             std::string(reject_ok ? "yes" : "no"));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  std::printf("criteria passed: %d/10\n", 10 - failures);
  return failures;
}

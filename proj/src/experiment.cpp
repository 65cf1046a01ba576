#include "qilab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qilab/boundary.hpp"
#include "qilab/common.hpp"
#include "qilab/csvio.hpp"
#include "qilab/embed.hpp"
#include "qilab/kernel.hpp"
#include "qilab/poincare.hpp"
#include "qilab/sepvol.hpp"
#include "qilab/space.hpp"

namespace qilab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const char* kKindNames[] = {
    "tree_embed",   "tree_to_h2",       "radial_identity",
    "radial_zmu",   "radial_unipotent", "poincare_scaling",
    "kr_curve",     "sep_scaling",      "vol_growth"};

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || value.empty())
    throw Error(ErrorKind::invalid_params,
                "config value for '" + key + "' is not a number: " + value);
  return v;
}

std::vector<double> parse_list(const std::string& key,
                               const std::string& value) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= value.size()) {
    size_t comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    std::string item = value.substr(pos, comma - pos);
    const auto l = item.find_first_not_of(" \t");
    if (l == std::string::npos)
      throw Error(ErrorKind::invalid_params,
                  "empty element in list for '" + key + "'");
    const auto r = item.find_last_not_of(" \t");
    out.push_back(parse_double(key, item.substr(l, r - l + 1)));
    pos = comma + 1;
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw Error(ErrorKind::invalid_params,
              "config value for '" + key + "' is not a boolean: " + value);
}

BoundaryMap theta_from_spec(const ExperimentSpec& spec) {
  if (spec.theta == "identity")
    return make_identity_map(
        std::max<int>(1, static_cast<int>(spec.mu.size())));
  if (spec.theta == "zmu_identity")
    return make_zmu_identity_map(spec.mu, spec.mu_img);
  if (spec.theta == "biholder")
    return make_biholder_map(spec.alpha, spec.beta, spec.holder_c);
  if (spec.theta == "unipotent") return make_unipotent_map();
  throw Error(ErrorKind::invalid_params,
              "unknown boundary map: " + spec.theta);
}

SpaceParams zmu_params(const ExperimentSpec& spec, double R,
                       std::span<const double> mu) {
  SpaceParams p;
  p.mu.assign(mu.begin(), mu.end());
  p.R = R;
  p.mesh = spec.mesh;
  p.cover = spec.cover;
  p.size_cap = spec.size_cap;
  return p;
}

NetPtr sweep_net(const ExperimentSpec& spec, double R) {
  if (spec.mu.empty()) return build_h2_net(R, spec.eps, spec.size_cap);
  return build_zmu_net(zmu_params(spec, R, spec.mu));
}

// --- pipelines -------------------------------------------------------------

void run_radial_identity(const ExperimentSpec& spec, ExperimentResult& out) {
  out.header = {"R", "seed", "pairs", "max_err", "mean_err"};
  out.primary_column = "max_err";
  for (size_t idx = 0; idx < spec.R_list.size(); ++idx) {
    const double R = spec.R_list[idx];
    Rng rng = Rng(spec.seed).derive("radial-identity").derive(idx);
    double max_err = 0.0, sum_err = 0.0;
    for (int k = 0; k < spec.pairs; ++k) {
      const double th1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double t1 = rng.uniform(0.0, R);
      const double th2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double t2 = rng.uniform(0.0, R);
      const double phi = circle_distance(th1, th2, 2.0 * std::numbers::pi);
      const double t_inf =
          phi > 0.0 ? -std::log(std::sin(0.5 * phi))
                    : std::numeric_limits<double>::infinity();
      const double approx = radial_distance_formula(t1, t2, t_inf);
      const double exact = h2_distance({t1, th1}, {t2, th2});
      const double err = std::abs(approx - exact);
      max_err = std::max(max_err, err);
      sum_err += err;
    }
    out.rows.push_back({R, static_cast<double>(spec.seed),
                        static_cast<double>(spec.pairs), max_err,
                        sum_err / spec.pairs});
  }
}

void run_k_curve(const ExperimentSpec& spec, ExperimentResult& out,
                 bool unipotent_columns) {
  const BoundaryMap map =
      unipotent_columns ? make_unipotent_map() : theta_from_spec(spec);
  if (unipotent_columns) {
    out.header = {"R", "seed", "grid_n", "K", "K_over_logR", "pairs_kept"};
  } else {
    out.header = {"R", "seed", "grid_n", "K", "analytic", "ratio"};
  }
  out.primary_column = "K";
  for (double R : spec.R_list) {
    const KEstimate est = estimate_K(map, R, spec.grid_n, spec.seed);
    if (unipotent_columns) {
      out.rows.push_back({R, static_cast<double>(spec.seed),
                          static_cast<double>(spec.grid_n), est.value,
                          est.value / std::log(R),
                          static_cast<double>(est.pairs_kept)});
    } else {
      const auto closed = analytic_K(map, R);
      const double analytic = closed ? closed->value : kNan;
      const double ratio =
          closed && closed->value > 0.0 ? est.value / closed->value : kNan;
      out.rows.push_back({R, static_cast<double>(spec.seed),
                          static_cast<double>(spec.grid_n), est.value,
                          analytic, ratio});
    }
  }
}

void run_radial_zmu(const ExperimentSpec& spec, ExperimentResult& out) {
  out.header = {"R",      "seed", "n_dom", "n_img",  "K",           "D_formula",
                "c",      "lambda", "Cq",  "qie_ok", "worst_excess"};
  out.primary_column = "worst_excess";
  const BoundaryMap theta = make_zmu_identity_map(spec.mu, spec.mu_img);
  for (double R : spec.R_list) {
    NetPtr dom = build_zmu_net(zmu_params(spec, R, spec.mu));
    NetPtr img = build_zmu_net(zmu_params(spec, R, spec.mu_img));
    const PointMap map = radial_extension(
        dom, img, [&](std::span<const double> x, std::span<double> y) {
          theta.forward(x, y);
        });

    // Largest displacement between the exact height-preserving target and
    // the grid point actually chosen, in the codomain metric.
    double defect = 0.0;
    PointZ target, got;
    const int bdim = dom->coord_dim - 1;
    target.x.resize(bdim);
    got.x.resize(static_cast<size_t>(img->coord_dim) - 1);
    std::vector<double> mapped(bdim);
    for (uint32_t i = 0; i < dom->size(); ++i) {
      const auto pt = dom->point(i);
      theta.forward(pt.subspan(1), mapped);
      target.t = pt[0];
      std::copy(mapped.begin(), mapped.end(), target.x.begin());
      const auto q = img->point(map.image[i]);
      got.t = q[0];
      std::copy(q.begin() + 1, q.end(), got.x.begin());
      defect = std::max(defect, zmu_distance(target, got, spec.mu_img,
                                             img->period_last()));
    }

    const double K = estimate_K(theta, R, spec.grid_n, spec.seed).value;
    const double c = defect + 1.0;
    const double lambda = 1.0 + 2.0 * K / c;
    const double cq = 2.0 * K + c + 16.0;
    const QieCheck check =
        verify_qie(map, {lambda, cq, lambda, cq}, 1e-9);
    out.rows.push_back({R, static_cast<double>(spec.seed),
                        static_cast<double>(dom->size()),
                        static_cast<double>(img->size()), K, defect, c, lambda,
                        cq, check.ok ? 1.0 : 0.0, check.worst_excess});
  }
}

void run_poincare_scaling(const ExperimentSpec& spec, ExperimentResult& out) {
  out.header = {"R", "seed", "n", "C2", "logC2"};
  out.primary_column = "C2";
  for (double R : spec.R_list) {
    NetPtr net = build_zmu_net(zmu_params(spec, R, spec.mu));
    const Kernel k = make_ball_kernel(net, spec.width);
    PoincareEstimate est;
    if (net->size() <= 1200) {
      est = poincare_exact_p2(k);
    } else {
      AscentOptions opt;
      opt.restarts = 3;
      opt.iters = 200;
      opt.seed = spec.seed;
      est = poincare_lower_ascent(k, 2.0, opt);
    }
    out.rows.push_back({R, static_cast<double>(spec.seed),
                        static_cast<double>(net->size()), est.lower,
                        std::log(est.lower)});
  }
}

void run_sep_scaling(const ExperimentSpec& spec, ExperimentResult& out) {
  out.header = {"R", "seed", "n", "covering", "sep_upper", "sep_lower"};
  out.primary_column = "sep_upper";
  for (double R : spec.R_list) {
    NetPtr net = sweep_net(spec, R);
    const CoverReport cover = vol_a(*net, spec.a);
    const SeparationUpper up = sep_upper(*net, spec.a);
    const SeparationLower low = sep_lower_poincare(*net, spec.a);
    out.rows.push_back({R, static_cast<double>(spec.seed),
                        static_cast<double>(net->size()),
                        static_cast<double>(cover.covering_count),
                        static_cast<double>(up.crossing), low.value});
  }
}

void run_vol_growth(const ExperimentSpec& spec, ExperimentResult& out) {
  out.header = {"R", "seed", "n", "covering", "packing", "measure"};
  out.primary_column = "covering";
  for (double R : spec.R_list) {
    NetPtr net = sweep_net(spec, R);
    const CoverReport cover = vol_a(*net, spec.a);
    out.rows.push_back({R, static_cast<double>(spec.seed),
                        static_cast<double>(net->size()),
                        static_cast<double>(cover.covering_count),
                        static_cast<double>(cover.packing_count),
                        net->total_measure()});
  }
}

void run_tree_embed(const ExperimentSpec& spec, ExperimentResult& out) {
  out.header = {"R",  "seed", "n_net", "n_tree", "generations",
                "lambda1", "c1", "lambda2", "c2", "total"};
  out.primary_column = "total";
  for (double R : spec.R_list) {
    NetPtr net = build_h2_net(R, spec.eps, spec.size_cap);
    const SqrtTreeResult res = build_sqrt_tree_embedding(net, spec.eps);
    const DistortionReport rep = measure_distortion(res.map, Objective::sum);
    out.rows.push_back(
        {R, static_cast<double>(spec.seed), static_cast<double>(net->size()),
         static_cast<double>(res.tree->size()),
         static_cast<double>(res.generation_offset.size() - 1),
         rep.constants.lambda1, rep.constants.c1, rep.constants.lambda2,
         rep.constants.c2, rep.constants.total()});
  }
}

void run_tree_to_h2(const ExperimentSpec& spec, ExperimentResult& out) {
  out.header = {"R",  "seed",  "n",  "lambda1", "c1", "lambda2",
                "c2", "total", "rk_ratio_min", "rk_ratio_max"};
  out.primary_column = "total";
  const double logd = std::log(static_cast<double>(spec.degree));
  for (double R : spec.R_list) {
    const TreeToH2Result res =
        build_tree_to_h2(spec.degree, static_cast<int>(R), spec.size_cap);
    const DistortionReport rep = measure_distortion(res.map, Objective::sum);
    double lo = kNan, hi = kNan;
    for (size_t k = 5; k < res.generation_radii.size(); ++k) {
      const double ratio = res.generation_radii[k] / (k * logd);
      lo = std::isnan(lo) ? ratio : std::min(lo, ratio);
      hi = std::isnan(hi) ? ratio : std::max(hi, ratio);
    }
    out.rows.push_back({R, static_cast<double>(spec.seed),
                        static_cast<double>(res.tree->size()),
                        rep.constants.lambda1, rep.constants.c1,
                        rep.constants.lambda2, rep.constants.c2,
                        rep.constants.total(), lo, hi});
  }
}

// --- fits and assertion gates ----------------------------------------------

std::vector<double> column_of(const ExperimentResult& res,
                              const std::string& name) {
  const auto it = std::find(res.header.begin(), res.header.end(), name);
  std::vector<double> out;
  if (it == res.header.end()) return out;
  const size_t c = static_cast<size_t>(it - res.header.begin());
  for (const auto& row : res.rows) out.push_back(row[c]);
  return out;
}

void attach_fits(const ExperimentSpec& spec, ExperimentResult& res) {
  const std::vector<double> y = column_of(res, res.primary_column);
  if (y.size() != spec.R_list.size() || y.empty()) return;

  const bool growth_kind = spec.kind == ExperimentKind::tree_embed ||
                           spec.kind == ExperimentKind::tree_to_h2 ||
                           spec.kind == ExperimentKind::kr_curve ||
                           spec.kind == ExperimentKind::radial_unipotent;
  const bool slope_kind = spec.kind == ExperimentKind::poincare_scaling ||
                          spec.kind == ExperimentKind::sep_scaling ||
                          spec.kind == ExperimentKind::vol_growth;
  if (growth_kind) {
    try {
      res.fit = fit_growth(spec.R_list, y);
    } catch (const Error&) {
      res.fit.reset();  // short or nonpositive sweeps simply carry no fit
    }
  }
  if (slope_kind && y.size() >= 2 &&
      std::all_of(y.begin(), y.end(), [](double v) { return v > 0.0; })) {
    std::vector<double> logs(y.size());
    std::transform(y.begin(), y.end(), logs.begin(),
                   [](double v) { return std::log(v); });
    res.slope_fit = linear_fit(spec.R_list, logs);
  }
}

void apply_asserts(const ExperimentSpec& spec, ExperimentResult& res) {
  auto fail = [&](const std::string& msg) {
    res.assert_ok = false;
    if (!res.assert_detail.empty()) res.assert_detail += "; ";
    res.assert_detail += msg;
  };

  if (spec.assert_model) {
    if (!res.fit)
      fail("no growth fit available for model assertion");
    else if (to_string(res.fit->model) != *spec.assert_model)
      fail(std::string("fitted model ") + to_string(res.fit->model) +
           " != expected " + *spec.assert_model);
  }
  if (spec.assert_beta_lo || spec.assert_beta_hi) {
    if (!res.fit || res.fit->model != GrowthModel::power) {
      fail("beta band assertion needs a power-law fit");
    } else {
      if (spec.assert_beta_lo && res.fit->beta < *spec.assert_beta_lo)
        fail("beta " + format_double(res.fit->beta) + " below " +
             format_double(*spec.assert_beta_lo));
      if (spec.assert_beta_hi && res.fit->beta > *spec.assert_beta_hi)
        fail("beta " + format_double(res.fit->beta) + " above " +
             format_double(*spec.assert_beta_hi));
    }
  }
  if (spec.assert_r2_min) {
    const double r2 = res.fit ? res.fit->r2
                     : res.slope_fit ? res.slope_fit->r2
                                     : -1.0;
    if (r2 < *spec.assert_r2_min)
      fail("r2 " + format_double(r2) + " below " +
           format_double(*spec.assert_r2_min));
  }
  if (spec.assert_slope_lo || spec.assert_slope_hi) {
    if (!res.slope_fit) {
      fail("no slope fit available for slope assertion");
    } else {
      if (spec.assert_slope_lo && res.slope_fit->slope < *spec.assert_slope_lo)
        fail("slope " + format_double(res.slope_fit->slope) + " below " +
             format_double(*spec.assert_slope_lo));
      if (spec.assert_slope_hi && res.slope_fit->slope > *spec.assert_slope_hi)
        fail("slope " + format_double(res.slope_fit->slope) + " above " +
             format_double(*spec.assert_slope_hi));
    }
  }
  if (spec.assert_value_max) {
    const auto y = column_of(res, res.primary_column);
    const double worst =
        y.empty() ? 0.0 : *std::max_element(y.begin(), y.end());
    if (worst > *spec.assert_value_max)
      fail("max " + res.primary_column + " " + format_double(worst) +
           " above " + format_double(*spec.assert_value_max));
  }
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

ExperimentKind experiment_from_string(const std::string& name) {
  for (int i = 0; i < 9; ++i)
    if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
  throw Error(ErrorKind::invalid_params, "unknown experiment: " + name);
}

void ExperimentSpec::validate() const {
  if (R_list.empty())
    throw Error(ErrorKind::invalid_params, "R_list must not be empty");
  for (size_t i = 0; i < R_list.size(); ++i) {
    if (!(R_list[i] > 0.0) || !std::isfinite(R_list[i]))
      throw Error(ErrorKind::invalid_params, "R values must be positive");
    if (i && !(R_list[i] > R_list[i - 1]))
      throw Error(ErrorKind::invalid_params, "R_list must be ascending");
  }
  if (!(eps > 0.0) || !(mesh > 0.0))
    throw Error(ErrorKind::invalid_params, "net spacings must be positive");
  if (degree < 2)
    throw Error(ErrorKind::invalid_params, "tree degree must be >= 2");
  if (!(a >= 0.0) || !(width > 0.0))
    throw Error(ErrorKind::invalid_params,
                "radius and kernel width must be nonnegative");
  if (!(p >= 1.0))
    throw Error(ErrorKind::invalid_params, "exponent p must be >= 1");
  if (grid_n < 0 || pairs < 1)
    throw Error(ErrorKind::invalid_params, "sample counts out of range");
  if (size_cap < 1)
    throw Error(ErrorKind::invalid_params, "size_cap must be positive");

  const bool needs_mu = kind == ExperimentKind::radial_zmu ||
                        kind == ExperimentKind::poincare_scaling;
  if (needs_mu && mu.empty())
    throw Error(ErrorKind::invalid_params,
                "this experiment needs domain exponents mu");
  if (kind == ExperimentKind::radial_zmu && mu_img.empty())
    throw Error(ErrorKind::invalid_params,
                "radial_zmu needs codomain exponents mu_img");
  if (kind == ExperimentKind::kr_curve && theta == "zmu_identity" &&
      (mu.empty() || mu_img.empty()))
    throw Error(ErrorKind::invalid_params,
                "zmu_identity curves need mu and mu_img");
  if (kind == ExperimentKind::tree_to_h2) {
    for (double R : R_list)
      if (R != std::floor(R))
        throw Error(ErrorKind::invalid_params,
                    "tree sweeps need integer radii");
  }
}

ExperimentSpec spec_from_config(
    const std::map<std::string, std::string>& kv) {
  ExperimentSpec spec;
  for (const auto& [key, value] : kv) {
    if (key == "experiment") spec.kind = experiment_from_string(value);
    else if (key == "R_list") spec.R_list = parse_list(key, value);
    else if (key == "mu") spec.mu = parse_list(key, value);
    else if (key == "mu_img") spec.mu_img = parse_list(key, value);
    else if (key == "eps") spec.eps = parse_double(key, value);
    else if (key == "mesh") spec.mesh = parse_double(key, value);
    else if (key == "degree") spec.degree = static_cast<int>(parse_double(key, value));
    else if (key == "a") spec.a = parse_double(key, value);
    else if (key == "width") spec.width = parse_double(key, value);
    else if (key == "p") spec.p = parse_double(key, value);
    else if (key == "grid_n") spec.grid_n = static_cast<int>(parse_double(key, value));
    else if (key == "theta") spec.theta = value;
    else if (key == "alpha") spec.alpha = parse_double(key, value);
    else if (key == "beta") spec.beta = parse_double(key, value);
    else if (key == "holder_c") spec.holder_c = parse_double(key, value);
    else if (key == "pairs") spec.pairs = static_cast<int>(parse_double(key, value));
    else if (key == "cover") spec.cover = parse_bool(key, value);
    else if (key == "seed") spec.seed = static_cast<uint64_t>(parse_double(key, value));
    else if (key == "size_cap") spec.size_cap = static_cast<uint64_t>(parse_double(key, value));
    else if (key == "out") spec.out_path = value;
    else if (key == "assert_model") spec.assert_model = value;
    else if (key == "assert_beta_lo") spec.assert_beta_lo = parse_double(key, value);
    else if (key == "assert_beta_hi") spec.assert_beta_hi = parse_double(key, value);
    else if (key == "assert_r2_min") spec.assert_r2_min = parse_double(key, value);
    else if (key == "assert_slope_lo") spec.assert_slope_lo = parse_double(key, value);
    else if (key == "assert_slope_hi") spec.assert_slope_hi = parse_double(key, value);
    else if (key == "assert_value_max") spec.assert_value_max = parse_double(key, value);
    else
      throw Error(ErrorKind::invalid_params, "unknown config key: " + key);
  }
  return spec;
}

ExperimentResult run(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult res;
  // Every pipeline appends a row only after its radius succeeds, so on
  // failure rows.size() indexes the radius that was being processed.
  try {
    switch (spec.kind) {
      case ExperimentKind::tree_embed: run_tree_embed(spec, res); break;
      case ExperimentKind::tree_to_h2: run_tree_to_h2(spec, res); break;
      case ExperimentKind::radial_identity:
        run_radial_identity(spec, res);
        break;
      case ExperimentKind::radial_zmu: run_radial_zmu(spec, res); break;
      case ExperimentKind::radial_unipotent:
        run_k_curve(spec, res, true);
        break;
      case ExperimentKind::poincare_scaling:
        run_poincare_scaling(spec, res);
        break;
      case ExperimentKind::kr_curve: run_k_curve(spec, res, false); break;
      case ExperimentKind::sep_scaling: run_sep_scaling(spec, res); break;
      case ExperimentKind::vol_growth: run_vol_growth(spec, res); break;
    }
  } catch (const Error& e) {
    const size_t at = std::min(res.rows.size(), spec.R_list.size() - 1);
    throw Error(e.kind(),
                "R=" + format_double(spec.R_list[at]) + ": " + e.what());
  }
  attach_fits(spec, res);
  apply_asserts(spec, res);
  return res;
}

std::string result_to_csv(const ExperimentResult& result) {
  std::string out = csv_line(result.header) + "\n";
  std::vector<std::string> fields;
  for (const auto& row : result.rows) {
    fields.clear();
    for (double v : row) fields.push_back(format_double(v));
    out += csv_line(fields) + "\n";
  }
  return out;
}

}  // namespace qilab

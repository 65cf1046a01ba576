// qi-lab: build finite model spaces, run embedding constructions and
// measurements over R-sweeps, and emit CSV / JSON-lines reports.
//
// Exit codes: 0 success, 1 usage error, 2 computation error,
// 3 threshold violation under `run --assert`.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qilab/boundary.hpp"
#include "qilab/common.hpp"
#include "qilab/csvio.hpp"
#include "qilab/embed.hpp"
#include "qilab/experiment.hpp"
#include "qilab/fitgrowth.hpp"
#include "qilab/kernel.hpp"
#include "qilab/poincare.hpp"
#include "qilab/sepvol.hpp"
#include "qilab/space.hpp"

using json = nlohmann::ordered_json;
using namespace qilab;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing

void sink_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_error, "cannot open " + path);
  out << text;
  if (!out) throw Error(ErrorKind::io_error, "write failed: " + path);
}

void emit_json(const json& j) { std::cout << j.dump() << "\n"; }

double parse_cell(const std::string& cell, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size())
    throw Error(ErrorKind::io_error, where + ": not a number: " + cell);
  return v;
}

// ---------------------------------------------------------------------------
// Net construction flags shared by space / poincare / sepvol

struct SpaceOpts {
  std::string space = "zmu";
  std::vector<double> mu;
  double radius = 0.0;
  double mesh = 1.0;
  int degree = 3;
  bool cover = false;
  uint64_t size_cap = 2'000'000;
};

void add_space_flags(CLI::App* cmd, SpaceOpts& o) {
  cmd->add_option("--space", o.space, "model space")
      ->check(CLI::IsMember({"h2", "tree", "zmu"}));
  cmd->add_option("--mu", o.mu, "exponents, comma separated")->delimiter(',');
  cmd->add_option("--radius", o.radius, "ball radius R")->required();
  cmd->add_option("--mesh", o.mesh, "net spacing");
  cmd->add_option("--degree", o.degree, "tree degree");
  cmd->add_flag("--cover", o.cover, "double cover of the last coordinate");
  cmd->add_option("--size-cap", o.size_cap, "point-count limit");
}

NetPtr build_net(const SpaceOpts& o) {
  if (o.space == "h2") return build_h2_net(o.radius, o.mesh, o.size_cap);
  if (o.space == "tree")
    return build_tree_ball(o.degree, static_cast<int>(o.radius), o.size_cap);
  if (o.mu.empty())
    throw Error(ErrorKind::invalid_params, "zmu nets need --mu");
  SpaceParams p;
  p.mu = o.mu;
  p.R = o.radius;
  p.mesh = o.mesh;
  p.cover = o.cover;
  p.size_cap = o.size_cap;
  return build_zmu_net(p);
}

// ---------------------------------------------------------------------------
// Net serialization: points CSV `id,kind,c0..,weight` plus an edge sidecar
// `src,dst,length` next to it (`foo.csv` -> `foo.edges.csv`).

std::string edge_sidecar(const std::string& path) {
  const std::string tail = ".csv";
  if (path.size() > tail.size() &&
      path.compare(path.size() - tail.size(), tail.size(), tail) == 0)
    return path.substr(0, path.size() - tail.size()) + ".edges.csv";
  return path + ".edges.csv";
}

void write_net_csv(const Net& net, const std::string& out_path) {
  std::vector<std::string> fields = {"id", "kind"};
  for (int c = 0; c < net.coord_dim; ++c)
    fields.push_back("c" + std::to_string(c));
  fields.push_back("weight");
  std::string text = csv_line(fields) + "\n";
  for (uint32_t i = 0; i < net.size(); ++i) {
    fields.clear();
    fields.push_back(std::to_string(i));
    fields.push_back(to_string(net.kind));
    for (double c : net.point(i)) fields.push_back(format_double(c));
    fields.push_back(format_double(net.weight[i]));
    text += csv_line(fields) + "\n";
  }
  sink_text(out_path, text);

  if (out_path.empty() || out_path == "-") return;
  std::string edges = "src,dst,length\n";
  for (const Edge& e : net.edges)
    edges += std::to_string(e.src) + "," + std::to_string(e.dst) + "," +
             format_double(e.length) + "\n";
  sink_text(edge_sidecar(out_path), edges);
}

// Rebuild a net from its serialized form. Graph-like kinds recover the
// metric from the edge sidecar; h2 and zmu keep their closed-form oracles
// (zmu needs the exponents handed back in).
NetPtr load_net_csv(const std::string& path, const std::vector<double>& mu,
                    bool cover) {
  const auto rows = read_csv(path);
  if (rows.size() < 2)
    throw Error(ErrorKind::io_error, path + ": no net points");
  const size_t ncols = rows[0].size();
  if (ncols < 3)
    throw Error(ErrorKind::io_error, path + ": malformed net header");
  const int coord_dim = static_cast<int>(ncols) - 3;
  const uint32_t n = static_cast<uint32_t>(rows.size() - 1);
  const std::string kind = rows[1][1];

  std::vector<double> coords, weight;
  for (uint32_t i = 0; i < n; ++i) {
    const auto& row = rows[i + 1];
    if (row.size() != ncols || row[0] != std::to_string(i))
      throw Error(ErrorKind::io_error, path + ": ids must be dense and sorted");
    for (int c = 0; c < coord_dim; ++c)
      coords.push_back(parse_cell(row[2 + c], path));
    weight.push_back(parse_cell(row[ncols - 1], path));
  }

  if (kind == "tree" || kind == "graph") {
    std::vector<Edge> edges;
    for (const auto& row : read_csv(edge_sidecar(path))) {
      if (row.size() != 3 || row[0] == "src") continue;
      edges.push_back({static_cast<uint32_t>(parse_cell(row[0], path)),
                       static_cast<uint32_t>(parse_cell(row[1], path)),
                       parse_cell(row[2], path)});
    }
    return build_graph_net(n, std::move(edges), std::move(weight));
  }

  auto net = std::make_shared<Net>();
  net->n_points = n;
  net->coord_dim = coord_dim;
  net->coords = std::move(coords);
  net->weight = std::move(weight);
  if (kind == "h2") {
    if (coord_dim != 2)
      throw Error(ErrorKind::io_error, path + ": h2 nets carry (r, theta)");
    net->kind = SpaceKind::h2;
    net->oracle = OracleKind::closed_form;
  } else if (kind == "zmu") {
    if (static_cast<int>(mu.size()) != coord_dim - 1)
      throw Error(ErrorKind::invalid_params,
                  path + ": pass --mu with one exponent per coordinate");
    net->kind = SpaceKind::zmu;
    net->oracle = OracleKind::radial_formula;
    net->params.mu = mu;
    net->params.cover = cover;
  } else {
    throw Error(ErrorKind::io_error, path + ": unknown net kind " + kind);
  }
  return net;
}

// ---------------------------------------------------------------------------
// Report shapes

json distortion_json(const DistortionReport& rep) {
  json j;
  j["lambda1"] = rep.constants.lambda1;
  j["c1"] = rep.constants.c1;
  j["lambda2"] = rep.constants.lambda2;
  j["c2"] = rep.constants.c2;
  j["total"] = rep.constants.total();
  const auto pack = [](const std::vector<WitnessPair>& ws) {
    json arr = json::array();
    for (const auto& w : ws)
      arr.push_back({w.a, w.b, w.dist_domain, w.dist_image});
    return arr;
  };
  j["witnesses"] = {{"upper", pack(rep.upper_witnesses)},
                    {"lower", pack(rep.lower_witnesses)}};
  j["pairs"] = rep.pairs_evaluated;
  return j;
}

void write_map_csv(const PointMap& map, const std::string& path) {
  if (path.empty()) return;
  std::string text = "domain_id,codomain_id\n";
  for (uint32_t i = 0; i < map.image.size(); ++i)
    text += std::to_string(i) + "," + std::to_string(map.image[i]) + "\n";
  sink_text(path, text);
}

// ---------------------------------------------------------------------------
// Boundary map flags shared by embed radial / boundary kr

struct ThetaOpts {
  std::string theta = "zmu_identity";
  std::vector<double> mu;
  std::vector<double> mu_img;
  double alpha = 0.8, beta = 1.25, holder_c = 2.0;
};

void add_theta_flags(CLI::App* cmd, ThetaOpts& o) {
  cmd->add_option("--theta", o.theta, "boundary map")
      ->check(CLI::IsMember({"identity", "zmu_identity", "biholder",
                             "unipotent"}));
  cmd->add_option("--mu", o.mu)->delimiter(',');
  cmd->add_option("--mu-img", o.mu_img)->delimiter(',');
  cmd->add_option("--alpha", o.alpha);
  cmd->add_option("--beta", o.beta);
  cmd->add_option("--holder-c", o.holder_c);
}

BoundaryMap make_theta(const ThetaOpts& o) {
  if (o.theta == "identity")
    return make_identity_map(
        o.mu.empty() ? 1 : static_cast<int>(o.mu.size()));
  if (o.theta == "zmu_identity") return make_zmu_identity_map(o.mu, o.mu_img);
  if (o.theta == "biholder")
    return make_biholder_map(o.alpha, o.beta, o.holder_c);
  return make_unipotent_map();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "qi-lab: finite model spaces, embeddings, distortion and growth "
      "measurements"};
  app.require_subcommand(1);
  int exit_code = 0;

  // --- space ---------------------------------------------------------------
  auto* space_cmd =
      app.add_subcommand("space", "build a net and serialize it as CSV");
  auto space_opts = std::make_shared<SpaceOpts>();
  auto space_out = std::make_shared<std::string>("-");
  add_space_flags(space_cmd, *space_opts);
  space_cmd->add_option("--out", *space_out, "points CSV (edge sidecar beside it)");
  space_cmd->callback(
      [space_opts, space_out] { write_net_csv(*build_net(*space_opts), *space_out); });

  // --- embed ---------------------------------------------------------------
  auto* embed_cmd =
      app.add_subcommand("embed", "run an embedding construction and report "
                                  "its distortion constants");
  embed_cmd->require_subcommand(1);
  struct EmbedOpts {
    double radius = 0.0;
    double mesh = 1.0;
    int degree = 3;
    uint64_t size_cap = 2'000'000;
    ThetaOpts theta;
    std::string map_out;
  };
  auto eo = std::make_shared<EmbedOpts>();
  const auto add_embed_common = [&](CLI::App* sub) {
    sub->add_option("--radius", eo->radius)->required();
    sub->add_option("--mesh", eo->mesh);
    sub->add_option("--size-cap", eo->size_cap);
    sub->add_option("--map-out", eo->map_out, "map CSV destination");
  };
  auto* sqrt_cmd = embed_cmd->add_subcommand(
      "sqrt-tree", "forest on sqrt(R)-spaced generations of a circle net");
  add_embed_common(sqrt_cmd);
  sqrt_cmd->callback([eo] {
    const auto res =
        build_sqrt_tree_embedding(build_h2_net(eo->radius, eo->mesh, eo->size_cap),
                                  eo->mesh);
    emit_json(distortion_json(measure_distortion(res.map, Objective::sum)));
    write_map_csv(res.map, eo->map_out);
  });
  auto* t2h_cmd = embed_cmd->add_subcommand(
      "tree-to-h2", "regular tree placed on capacity-matched circles");
  add_embed_common(t2h_cmd);
  t2h_cmd->add_option("--degree", eo->degree);
  t2h_cmd->callback([eo] {
    const auto res = build_tree_to_h2(
        eo->degree, static_cast<int>(eo->radius), eo->size_cap);
    emit_json(distortion_json(measure_distortion(res.map, Objective::sum)));
    write_map_csv(res.map, eo->map_out);
  });
  auto* radial_cmd = embed_cmd->add_subcommand(
      "radial", "height-preserving extension of a boundary map");
  add_embed_common(radial_cmd);
  add_theta_flags(radial_cmd, eo->theta);
  radial_cmd->callback([eo] {
    const auto one_net = [&](const std::vector<double>& mu) {
      SpaceParams p;
      p.mu = mu;
      p.R = eo->radius;
      p.mesh = eo->mesh;
      p.size_cap = eo->size_cap;
      return build_zmu_net(p);
    };
    const BoundaryMap theta = make_theta(eo->theta);
    const PointMap map = radial_extension(
        one_net(eo->theta.mu), one_net(eo->theta.mu_img),
        [&theta](std::span<const double> x, std::span<double> y) {
          theta.forward(x, y);
        });
    emit_json(distortion_json(measure_distortion(map, Objective::sum)));
    write_map_csv(map, eo->map_out);
  });

  // --- distort -------------------------------------------------------------
  auto* distort_cmd = app.add_subcommand(
      "distort", "measure distortion constants of a serialized map");
  distort_cmd->require_subcommand(1);
  auto* measure_cmd = distort_cmd->add_subcommand(
      "measure", "optimal constants of a map between serialized nets");
  struct MeasureOpts {
    std::string map_path, domain_path, codomain_path;
    std::vector<double> mu, mu_img;
    bool cover = false;
    std::string objective = "sum";
  };
  auto mo = std::make_shared<MeasureOpts>();
  measure_cmd->add_option("--map", mo->map_path)->required();
  measure_cmd->add_option("--domain", mo->domain_path)->required();
  measure_cmd->add_option("--codomain", mo->codomain_path)->required();
  measure_cmd->add_option("--mu", mo->mu)->delimiter(',');
  measure_cmd->add_option("--mu-img", mo->mu_img)->delimiter(',');
  measure_cmd->add_flag("--cover", mo->cover);
  measure_cmd->add_option("--objective", mo->objective)
      ->check(CLI::IsMember({"sum", "max"}));
  measure_cmd->callback([mo] {
    PointMap map;
    map.domain = load_net_csv(mo->domain_path, mo->mu, mo->cover);
    map.codomain = load_net_csv(mo->codomain_path, mo->mu_img, mo->cover);
    map.image.assign(map.domain->size(), 0);
    std::vector<bool> seen(map.domain->size(), false);
    for (const auto& row : read_csv(mo->map_path)) {
      if (row.size() != 2 || row[0] == "domain_id") continue;
      const auto dom = static_cast<uint32_t>(parse_cell(row[0], mo->map_path));
      const auto cod = static_cast<uint32_t>(parse_cell(row[1], mo->map_path));
      if (dom >= seen.size())
        throw Error(ErrorKind::net_mismatch,
                    "map row outside the domain: " + row[0]);
      map.image[dom] = cod;
      seen[dom] = true;
    }
    for (size_t i = 0; i < seen.size(); ++i)
      if (!seen[i])
        throw Error(ErrorKind::empty_map,
                    "map does not cover domain id " + std::to_string(i));
    map.validate();
    const Objective obj =
        mo->objective == "max" ? Objective::max : Objective::sum;
    emit_json(distortion_json(measure_distortion(map, obj)));
  });

  // --- poincare ------------------------------------------------------------
  auto* poin_cmd = app.add_subcommand(
      "poincare", "norm-vs-seminorm constant estimates on a net");
  poin_cmd->require_subcommand(1);
  struct PoinOpts {
    SpaceOpts space;
    double width = 1.0;
    double p = 2.0;
    int restarts = 8, iters = 500;
    uint64_t seed = 1;
  };
  auto po = std::make_shared<PoinOpts>();
  const auto poincare_json = [po](const PoincareEstimate& est) {
    json j;
    j["p"] = est.p;
    j["lower"] = est.lower;
    if (est.upper)
      j["upper"] = *est.upper;
    else
      j["upper"] = nullptr;
    j["method"] = to_string(est.method);
    j["R"] = po->space.radius;
    j["mu"] = po->space.mu;
    emit_json(j);
  };
  auto* p2_cmd = poin_cmd->add_subcommand("p2", "exact p=2 constant");
  add_space_flags(p2_cmd, po->space);
  p2_cmd->add_option("--width", po->width);
  p2_cmd->callback([po, poincare_json] {
    poincare_json(
        poincare_exact_p2(make_ball_kernel(build_net(po->space), po->width)));
  });
  auto* ascent_cmd =
      poin_cmd->add_subcommand("ascent", "certified lower bound, any p");
  add_space_flags(ascent_cmd, po->space);
  ascent_cmd->add_option("--width", po->width);
  ascent_cmd->add_option("--p", po->p);
  ascent_cmd->add_option("--restarts", po->restarts);
  ascent_cmd->add_option("--iters", po->iters);
  ascent_cmd->add_option("--seed", po->seed);
  ascent_cmd->callback([po, poincare_json] {
    AscentOptions opt;
    opt.restarts = po->restarts;
    opt.iters = po->iters;
    opt.seed = po->seed;
    poincare_json(poincare_lower_ascent(
        make_ball_kernel(build_net(po->space), po->width), po->p, opt));
  });
  auto* testfn_cmd = poin_cmd->add_subcommand(
      "testfn", "parity-mode lower bound against the gradient energy");
  add_space_flags(testfn_cmd, po->space);
  testfn_cmd->add_option("--p", po->p);
  testfn_cmd->callback([po, poincare_json] {
    poincare_json(testfunction_lower_bound(*build_net(po->space), po->p));
  });

  // --- boundary ------------------------------------------------------------
  auto* bd_cmd = app.add_subcommand(
      "boundary", "visual-metric distortion curves of boundary maps");
  bd_cmd->require_subcommand(1);
  auto* kr_cmd = bd_cmd->add_subcommand("kr", "K(R) over a list of scales");
  struct KrOpts {
    ThetaOpts theta;
    std::vector<double> R_list;
    int grid_n = 1024;
    uint64_t seed = 1;
    std::string out = "-";
  };
  auto ko = std::make_shared<KrOpts>();
  add_theta_flags(kr_cmd, ko->theta);
  kr_cmd->add_option("--R-list", ko->R_list)->delimiter(',')->required();
  kr_cmd->add_option("--grid-n", ko->grid_n);
  kr_cmd->add_option("--seed", ko->seed);
  kr_cmd->add_option("--out", ko->out);
  kr_cmd->callback([ko] {
    const BoundaryMap map = make_theta(ko->theta);
    std::string text = "R,K,method,grid_n,seed\n";
    for (double R : ko->R_list) {
      const KEstimate est = estimate_K(map, R, ko->grid_n, ko->seed);
      text += csv_line({format_double(R), format_double(est.value),
                        to_string(map.kind), std::to_string(ko->grid_n),
                        std::to_string(ko->seed)}) +
              "\n";
    }
    sink_text(ko->out, text);
  });

  // --- sepvol --------------------------------------------------------------
  auto* sv_cmd = app.add_subcommand(
      "sepvol", "covering volumes, separation bounds, growth thresholds");
  sv_cmd->require_subcommand(1);
  struct SepOpts {
    SpaceOpts space;
    double a = 1.0;
    double S = 0.0, V = 0.0, lambda = 1.0, c = 0.0, alpha = 1.0;
    int degree = 3;
    double radius = 0.0;
  };
  auto so = std::make_shared<SepOpts>();
  auto* vol_cmd = sv_cmd->add_subcommand("vol", "covering / packing counts");
  add_space_flags(vol_cmd, so->space);
  vol_cmd->add_option("--a", so->a);
  vol_cmd->callback([so] {
    const NetPtr net = build_net(so->space);
    const CoverReport rep = vol_a(*net, so->a);
    json j;
    j["a"] = rep.a;
    j["covering"] = rep.covering_count;
    j["packing"] = rep.packing_count;
    j["n"] = net->size();
    j["measure"] = net->total_measure();
    emit_json(j);
  });
  auto* sep_cmd =
      sv_cmd->add_subcommand("sep", "separation sandwich on one net");
  add_space_flags(sep_cmd, so->space);
  sep_cmd->add_option("--a", so->a);
  sep_cmd->callback([so] {
    const NetPtr net = build_net(so->space);
    const SeparationUpper up = sep_upper(*net, so->a);
    const SeparationLower low = sep_lower_poincare(*net, so->a);
    json j;
    j["a"] = up.a;
    j["upper"] = up.crossing;
    j["family"] = up.family.size();
    j["vol0"] = up.vol_side0;
    j["vol1"] = up.vol_side1;
    j["lower"] = low.value;
    j["c1"] = low.c1;
    j["s_factor"] = low.s_factor;
    emit_json(j);
  });
  auto* tb_cmd = sv_cmd->add_subcommand(
      "tree-bound", "capacity inequality for claimed embedding constants");
  tb_cmd->add_option("--S", so->S)->required();
  tb_cmd->add_option("--V", so->V)->required();
  tb_cmd->add_option("--degree", so->degree);
  tb_cmd->add_option("--a", so->a);
  tb_cmd->add_option("--lambda", so->lambda);
  tb_cmd->add_option("--c", so->c);
  tb_cmd->callback([so] {
    const BoundCheck chk =
        tree_bound_check(so->S, so->V, so->degree, so->a, so->lambda, so->c);
    json j;
    j["holds"] = chk.holds;
    j["slack"] = chk.slack;
    j["lhs"] = chk.lhs;
    j["rhs"] = chk.rhs;
    emit_json(j);
  });
  auto* gb_cmd = sv_cmd->add_subcommand(
      "growth-bound", "largest scale at which the volume bound rules out "
                      "an embedding");
  gb_cmd->add_option("--alpha", so->alpha)->required();
  gb_cmd->add_option("--lambda", so->lambda)->required();
  gb_cmd->add_option("--radius", so->radius)->required();
  gb_cmd->callback([so] {
    json j;
    j["value"] = volume_growth_lower_bound(so->alpha, so->lambda, so->radius);
    emit_json(j);
  });

  // --- fit -----------------------------------------------------------------
  auto* fit_cmd =
      app.add_subcommand("fit", "fit growth laws to a CSV column");
  struct FitOpts {
    std::string input, x = "R", y;
  };
  auto fo = std::make_shared<FitOpts>();
  fit_cmd->add_option("--input", fo->input)->required();
  fit_cmd->add_option("--x", fo->x, "x column name");
  fit_cmd->add_option("--y", fo->y, "y column name")->required();
  fit_cmd->callback([fo] {
    const auto rows = read_csv(fo->input);
    if (rows.empty())
      throw Error(ErrorKind::io_error, fo->input + ": empty file");
    size_t xc = rows[0].size(), yc = rows[0].size();
    for (size_t c = 0; c < rows[0].size(); ++c) {
      if (rows[0][c] == fo->x) xc = c;
      if (rows[0][c] == fo->y) yc = c;
    }
    if (xc == rows[0].size() || yc == rows[0].size())
      throw Error(ErrorKind::io_error,
                  fo->input + ": missing column " +
                      (xc == rows[0].size() ? fo->x : fo->y));
    std::vector<double> xs, ys;
    for (size_t r = 1; r < rows.size(); ++r) {
      xs.push_back(parse_cell(rows[r][xc], fo->input));
      ys.push_back(parse_cell(rows[r][yc], fo->input));
    }
    const GrowthFit fit = fit_growth(xs, ys);
    json j;
    j["model"] = to_string(fit.model);
    j["a"] = fit.a;
    j["b"] = fit.b;
    j["beta"] = fit.beta;
    j["r2"] = fit.r2;
    emit_json(j);
  });

  // --- run -----------------------------------------------------------------
  auto* run_cmd = app.add_subcommand(
      "run", "execute a configured R-sweep and emit its CSV");
  auto kv_store = std::make_shared<std::map<std::string, std::string>>();
  auto config_path = std::make_shared<std::string>();
  auto assert_mode = std::make_shared<bool>(false);
  auto cover_flag = std::make_shared<bool>(false);
  run_cmd->add_option("--config", *config_path,
                      "flat key = value file; flags override its entries");
  run_cmd->add_flag("--assert", *assert_mode,
                    "exit 3 when a configured threshold is violated");
  // Every config key is mirrored by a flag of the same name (dashes for
  // underscores). Values stay strings; parsing happens in one place.
  static const std::vector<std::pair<std::string, std::string>> kRunKeys = {
      {"--experiment", "experiment"},
      {"--R-list", "R_list"},
      {"--mu", "mu"},
      {"--mu-img", "mu_img"},
      {"--eps", "eps"},
      {"--mesh", "mesh"},
      {"--degree", "degree"},
      {"--a", "a"},
      {"--width", "width"},
      {"--p", "p"},
      {"--grid-n", "grid_n"},
      {"--theta", "theta"},
      {"--alpha", "alpha"},
      {"--beta", "beta"},
      {"--holder-c", "holder_c"},
      {"--pairs", "pairs"},
      {"--seed", "seed"},
      {"--size-cap", "size_cap"},
      {"--out", "out"},
      {"--assert-model", "assert_model"},
      {"--assert-beta-lo", "assert_beta_lo"},
      {"--assert-beta-hi", "assert_beta_hi"},
      {"--assert-r2-min", "assert_r2_min"},
      {"--assert-slope-lo", "assert_slope_lo"},
      {"--assert-slope-hi", "assert_slope_hi"},
      {"--assert-value-max", "assert_value_max"},
  };
  auto flag_values =
      std::make_shared<std::map<std::string, std::string>>();
  for (const auto& [flag, key] : kRunKeys)
    run_cmd->add_option(flag, (*flag_values)[key]);
  run_cmd->add_flag("--cover", *cover_flag);
  run_cmd->callback([run_cmd, kv_store, config_path, assert_mode, cover_flag,
                     flag_values, &exit_code] {
    std::map<std::string, std::string> kv =
        config_path->empty() ? std::map<std::string, std::string>{}
                             : read_flat_config(*config_path);
    for (const auto& [flag, key] : kRunKeys)
      if (run_cmd->count(flag) > 0) kv[key] = (*flag_values)[key];
    if (*cover_flag) kv["cover"] = "1";
    *kv_store = kv;

    const ExperimentSpec spec = spec_from_config(kv);
    const ExperimentResult res = qilab::run(spec);
    sink_text(spec.out_path, result_to_csv(res));
    if (!res.assert_ok) {
      std::cerr << "assert: " << res.assert_detail << "\n";
      if (*assert_mode) exit_code = 3;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}

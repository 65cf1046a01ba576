#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qilab/common.hpp"

namespace qilab {

enum class SpaceKind { h2, tree, zmu, graph };
enum class OracleKind { closed_form, graph_shortest_path, radial_formula };

const char* to_string(SpaceKind kind);

// Parameters of one model space / net.
struct SpaceParams {
  std::vector<double> mu;  // positive exponents, ascending (exponential-metric spaces)
  double R = 0.0;          // ball radius (tree: integer depth)
  double mesh = 1.0;       // net spacing
  double delta = 1.0;      // additive metric-slack unit for the radial formula
  int degree = 3;          // tree degree
  bool cover = false;      // double cover: last coordinate has period 2
  bool counting_measure = false;  // unit weights instead of cell volumes
  uint64_t size_cap = 2'000'000;  // hard limit on point count

  void validate_zmu() const;  // throws Error(invalid_params) on bad fields
};

// Convenience aggregates for the closed-form distance helpers.
struct PointH2 {
  double r = 0.0;
  double theta = 0.0;
};

struct PointZ {
  double t = 0.0;
  std::vector<double> x;
};

struct Edge {
  uint32_t src = 0;
  uint32_t dst = 0;
  double length = 0.0;
};

// Distance in the hyperbolic plane between points given in geodesic polar
// coordinates about a common origin.
double h2_distance(const PointH2& p, const PointH2& q);

// Distance on the circle of given period: min(|d|, period - |d|).
double circle_distance(double a, double b, double period = 1.0);

// Boundary separation for exponential-metric tori: max_i dc_i^(1/mu_i), where
// dc_i is the circle distance in coordinate i. `period_last` is 2 on the
// double cover, 1 otherwise.
double zmu_visual_distance(std::span<const double> a, std::span<const double> b,
                           std::span<const double> mu, double period_last = 1.0);

// Height-based distance approximation along radial directions:
// t1 + t2 - 2*min{t1, t2, t_inf}. `t_inf` may be +infinity.
double radial_distance_formula(double t1, double t2, double t_inf);

// Radial-formula distance between two points of an exponential-metric space,
// with t_inf = -log of the boundary separation of their directions.
double zmu_distance(const PointZ& p, const PointZ& q, std::span<const double> mu,
                    double period_last = 1.0);

// Internal layouts for structured nets (used for O(1) neighbor enumeration,
// grid snapping, and ray lookups).
struct H2Circle {
  double r = 0.0;
  uint32_t offset = 0;   // first point id on this circle
  uint32_t count = 0;    // number of points
  double dtheta = 0.0;   // angular step between consecutive points
};

struct ZmuLevel {
  double t = 0.0;
  uint32_t offset = 0;                // first point id on this level
  std::vector<uint32_t> counts;       // grid points per coordinate
  std::vector<double> spacing;        // coordinate spacing (fraction of period)
};

struct Net;
using NetPtr = std::shared_ptr<const Net>;

// A finite metric measure space: points with weights, an edge structure, and
// a distance oracle determined by `oracle`.
struct Net {
  SpaceKind kind = SpaceKind::graph;
  OracleKind oracle = OracleKind::graph_shortest_path;
  SpaceParams params;

  uint32_t n_points = 0;
  int coord_dim = 0;                 // per-point coordinate count
  std::vector<double> coords;        // n_points * coord_dim, row-major
                                     //   h2:  (r, theta)
                                     //   zmu: (t, x_1..x_n)
  std::vector<double> weight;        // positive measure weights
  std::vector<Edge> edges;           // undirected, each stored once

  // Tree structure (kind == tree).
  std::vector<int32_t> tree_parent;  // -1 at the root
  std::vector<int32_t> tree_depth;

  // Structured layouts.
  std::vector<H2Circle> h2_circles;
  std::vector<ZmuLevel> zmu_levels;

  // Cached all-pairs distances for graph nets (built eagerly; small nets only).
  std::vector<double> graph_dist;

  // Greatest distance from any point to the nearest vertical ray through a
  // top-level direction (exponential-metric nets; measured at build time).
  double ray_gap = 0.0;

  uint32_t size() const { return n_points; }
  std::span<const double> point(uint32_t i) const {
    return {coords.data() + static_cast<size_t>(i) * coord_dim,
            static_cast<size_t>(coord_dim)};
  }
  double total_measure() const;
  double distance(uint32_t i, uint32_t j) const;
  double period_last() const { return params.cover ? 2.0 : 1.0; }

  // Adjacency in CSR form (both directions), built on demand at construction.
  std::vector<uint64_t> adj_offset;
  std::vector<uint32_t> adj_neighbor;
  std::vector<double> adj_length;
  void build_adjacency();
};

// Net of concentric circles in the hyperbolic plane: circles at radii
// k*eps carrying maximal eps-separated angular sets; adjacency connects
// points within 3*eps; closed-form distance oracle.
NetPtr build_h2_net(double R, double eps, uint64_t size_cap = 2'000'000);

// Ball of integer radius R in the regular tree of the given degree: the root
// has `degree` children, every other internal node degree-1; unit edges.
NetPtr build_tree_ball(int degree, int R, uint64_t size_cap = 2'000'000);

// Level-by-level net of an exponential-metric space: levels at multiples of
// mesh; each level carries a dyadic product grid with coordinate spacing
// ~ mesh * e^(-mu_i t); vertical edges join nearest grid points of
// consecutive levels and horizontal edges join grid neighbors within a level.
NetPtr build_zmu_net(const SpaceParams& params);

// Arbitrary finite graph with unit or given weights; shortest-path oracle
// (all-pairs cached, so intended for small nets).
NetPtr build_graph_net(uint32_t n, std::vector<Edge> edges,
                       std::vector<double> weights = {});

// Sub-net of an h2 net on a subset of its points (closed-form oracle kept;
// counting measure; no edges). Used as the domain of embedding measurements.
NetPtr make_h2_subnet(const Net& net, const std::vector<uint32_t>& ids);

// Predicted point count of build_zmu_net without building it.
uint64_t predict_zmu_net_size(const SpaceParams& params);
// Predicted point count of build_h2_net without building it.
uint64_t predict_h2_net_size(double R, double eps);

// Number of points of the tree ball: 1 + d((d-1)^R - 1)/(d-2) for d > 2.
uint64_t tree_ball_count(int degree, int R);

// Visit every point j with distance(center, j) <= radius + 1e-12 (center
// included), calling fn(j, distance). Uses the structured layouts (angular
// windows on circle nets, level boxes on exponential-metric nets, BFS on
// trees, cached rows on graphs) with an exact distance filter; falls back to
// a linear scan on nets without layout (subnets).
void for_each_in_ball(const Net& net, uint32_t center, double radius,
                      const std::function<void(uint32_t, double)>& fn);

// Index helpers for zmu nets.
uint32_t zmu_point_id(const Net& net, uint32_t level, std::span<const uint32_t> index);
// Snap a (t, x) position to the nearest net point.
uint32_t zmu_snap(const Net& net, double t, std::span<const double> x);
// Nearest net point on any vertical ray through a top-level grid direction.
double zmu_ray_distance(const Net& net, uint32_t i);

}  // namespace qilab

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qilab/fitgrowth.hpp"

namespace qilab {

enum class ExperimentKind {
  tree_embed,       // sqrt-step forest in hyperbolic nets: distortion vs R
  tree_to_h2,       // regular tree placed into the hyperbolic plane
  radial_identity,  // height formula vs exact distance on hyperbolic rays
  radial_zmu,       // height-preserving extension certificate between nets
  radial_unipotent, // shear-example distortion curve K(R)
  poincare_scaling, // C_2 estimates across R
  kr_curve,         // K(R) for a configured boundary map
  sep_scaling,      // separation sandwich across R
  vol_growth,       // covering counts across R
};

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::radial_identity;
  std::vector<double> R_list;          // ascending
  std::vector<double> mu;              // domain exponents
  std::vector<double> mu_img;          // codomain exponents (extensions, K)
  double eps = 1.0;                    // hyperbolic net spacing
  double mesh = 1.0;                   // exponential net spacing
  int degree = 3;                      // tree degree
  double a = 1.0;                      // covering / separation radius
  double width = 1.0;                  // kernel width
  double p = 2.0;                      // seminorm exponent
  int grid_n = 1024;                   // random pairs for K estimation
  std::string theta = "zmu_identity";  // boundary map for kr_curve
  double alpha = 0.8, beta = 1.25, holder_c = 2.0;  // biholder parameters
  int pairs = 10000;                   // sampled pairs (radial_identity)
  bool cover = false;
  uint64_t seed = 1;
  uint64_t size_cap = 2'000'000;
  std::string out_path;                // CSV destination ("-" = stdout)

  // Optional assertion thresholds (run --assert exits 3 when violated).
  std::optional<std::string> assert_model;     // expected fitted model name
  std::optional<double> assert_beta_lo, assert_beta_hi;
  std::optional<double> assert_r2_min;
  std::optional<double> assert_slope_lo, assert_slope_hi;
  std::optional<double> assert_value_max;      // cap on the primary column

  void validate() const;  // throws Error(invalid_params)
};

// Parse from flat `key = value` pairs (same keys as the CLI flags).
ExperimentSpec spec_from_config(const std::map<std::string, std::string>& kv);

struct ExperimentResult {
  std::vector<std::string> header;          // CSV column names
  std::vector<std::vector<double>> rows;    // one row per R (numeric cells)
  std::optional<GrowthFit> fit;             // growth fit of the primary column
  std::optional<LinearFit> slope_fit;       // linear fit when the criterion
                                            // is a slope band (log-scale data)
  std::string primary_column;
  bool assert_ok = true;
  std::string assert_detail;
};

// Executes the configured sweep, one row per R, deterministic for a fixed
// spec. Module errors are rethrown with the failing R annotated.
ExperimentResult run(const ExperimentSpec& spec);

// Serialize rows as RFC-4180 CSV (numbers via shortest round-trip format).
std::string result_to_csv(const ExperimentResult& result);

}  // namespace qilab

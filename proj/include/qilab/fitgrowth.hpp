#pragma once

#include <array>
#include <span>
#include <string>

#include "qilab/common.hpp"

namespace qilab {

// Candidate growth laws, ordered by preference under ties (fewer parameters
// first, then listed order).
enum class GrowthModel { constant, logarithmic, sqrt_law, linear, power };

const char* to_string(GrowthModel model);

struct GrowthFit {
  GrowthModel model = GrowthModel::constant;
  double a = 0.0;     // scale parameter (slope / prefactor)
  double b = 0.0;     // offset (constant value for the constant model)
  double beta = 0.0;  // exponent (power model only)
  double r2 = 0.0;    // coefficient of determination of the chosen model
  // r2 of every candidate in enum order; quiet NaN when a model was skipped
  // (power needs positive y, logarithmic/power need positive R).
  std::array<double, 5> r2_all{};

  double evaluate(double R) const;  // fitted value at R
};

// Least-squares fit of y against R under each candidate law:
//   constant: y = b
//   logarithmic: y = a*log(R) + b
//   sqrt_law: y = a*sqrt(R) + b
//   linear: y = a*R + b
//   power: y = b*R^beta, fitted as log y = beta*log R + log b
// R^2 is computed in the original y space for every model and clamped to
// [0, 1]; the best model wins, with ties (within 1e-9) resolved toward fewer
// parameters and then enum order.
//
// Throws Error(too_few_points) for fewer than 4 samples and
// Error(nonpositive_values) when any R or y entry is <= 0 (the logarithmic
// and power models need positive data).
GrowthFit fit_growth(std::span<const double> R, std::span<const double> y);

// Plain linear least squares y ~ slope*x + intercept with R^2 in y space.
// No positivity requirements; used for slope-band checks on log-scale data.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace qilab

#include "qilab/fitgrowth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace qilab {

const char* to_string(GrowthModel model) {
  switch (model) {
    case GrowthModel::constant: return "constant";
    case GrowthModel::logarithmic: return "log";
    case GrowthModel::sqrt_law: return "sqrt";
    case GrowthModel::linear: return "linear";
    case GrowthModel::power: return "power";
  }
  return "unknown";
}

double GrowthFit::evaluate(double R) const {
  switch (model) {
    case GrowthModel::constant: return b;
    case GrowthModel::logarithmic: return a * std::log(R) + b;
    case GrowthModel::sqrt_law: return a * std::sqrt(R) + b;
    case GrowthModel::linear: return a * R + b;
    case GrowthModel::power: return a * std::pow(R, beta);
  }
  return b;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorKind::too_few_points, "linear fit needs >= 2 samples");
  const size_t n = x.size();
  double sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit fit;
  fit.slope = sxx > 0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += e * e;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res > 1e-18 ? 0.0 : 1.0);
  fit.r2 = std::clamp(fit.r2, 0.0, 1.0);
  return fit;
}

namespace {

// R^2 of predictions against y, in the original y space, clamped to [0, 1].
double r2_of(std::span<const double> y, const std::vector<double>& pred) {
  double my = 0;
  for (double v : y) my += v;
  my /= y.size();
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - pred[i]) * (y[i] - pred[i]);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  if (ss_tot <= 0.0) return ss_res > 1e-18 ? 0.0 : 1.0;
  return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

}  // namespace

GrowthFit fit_growth(std::span<const double> R, std::span<const double> y) {
  if (R.size() != y.size())
    throw Error(ErrorKind::invalid_params, "series length mismatch");
  if (R.size() < 4)
    throw Error(ErrorKind::too_few_points, "growth fit needs >= 4 samples");
  for (size_t i = 0; i < R.size(); ++i) {
    if (!(R[i] > 0.0) || !(y[i] > 0.0))
      throw Error(ErrorKind::nonpositive_values,
                  "growth fit needs positive R and y");
  }
  const size_t n = R.size();

  struct Candidate {
    GrowthModel model;
    int n_params;
    double a = 0, b = 0, beta = 0, r2 = 0;
  };
  std::vector<Candidate> cands;
  std::vector<double> pred(n), tx(n), ty(n);

  {  // constant
    Candidate c{GrowthModel::constant, 1};
    double m = 0;
    for (double v : y) m += v;
    c.b = m / n;
    std::fill(pred.begin(), pred.end(), c.b);
    c.r2 = r2_of(y, pred);
    cands.push_back(c);
  }
  {  // a*log(R) + b
    Candidate c{GrowthModel::logarithmic, 2};
    for (size_t i = 0; i < n; ++i) tx[i] = std::log(R[i]);
    const LinearFit f = linear_fit(tx, y);
    c.a = f.slope;
    c.b = f.intercept;
    for (size_t i = 0; i < n; ++i) pred[i] = c.a * tx[i] + c.b;
    c.r2 = r2_of(y, pred);
    cands.push_back(c);
  }
  {  // a*sqrt(R) + b
    Candidate c{GrowthModel::sqrt_law, 2};
    for (size_t i = 0; i < n; ++i) tx[i] = std::sqrt(R[i]);
    const LinearFit f = linear_fit(tx, y);
    c.a = f.slope;
    c.b = f.intercept;
    for (size_t i = 0; i < n; ++i) pred[i] = c.a * tx[i] + c.b;
    c.r2 = r2_of(y, pred);
    cands.push_back(c);
  }
  {  // a*R + b
    Candidate c{GrowthModel::linear, 2};
    const LinearFit f = linear_fit(R, y);
    c.a = f.slope;
    c.b = f.intercept;
    for (size_t i = 0; i < n; ++i) pred[i] = c.a * R[i] + c.b;
    c.r2 = r2_of(y, pred);
    cands.push_back(c);
  }
  {  // a*R^beta via log-log least squares
    Candidate c{GrowthModel::power, 2};
    for (size_t i = 0; i < n; ++i) {
      tx[i] = std::log(R[i]);
      ty[i] = std::log(y[i]);
    }
    const LinearFit f = linear_fit(tx, ty);
    c.beta = f.slope;
    c.a = std::exp(f.intercept);
    for (size_t i = 0; i < n; ++i) pred[i] = c.a * std::pow(R[i], c.beta);
    c.r2 = r2_of(y, pred);
    cands.push_back(c);
  }

  // Best R^2; ties (within 1e-9) prefer fewer parameters, then listed order.
  size_t best = 0;
  for (size_t i = 1; i < cands.size(); ++i) {
    if (cands[i].r2 > cands[best].r2 + 1e-9) {
      best = i;
    } else if (cands[i].r2 > cands[best].r2 - 1e-9 &&
               cands[i].n_params < cands[best].n_params) {
      best = i;
    }
  }

  GrowthFit out;
  out.model = cands[best].model;
  out.a = cands[best].a;
  out.b = cands[best].b;
  out.beta = cands[best].beta;
  out.r2 = cands[best].r2;
  for (size_t i = 0; i < cands.size(); ++i) out.r2_all[i] = cands[i].r2;
  return out;
}

}  // namespace qilab

#include "ctree/km.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "ctree/risk_set.hpp"

namespace ctree {

double KMCurve::survival_at(double t) const {
  double s = 1.0;
  for (const KMStep& step : steps) {
    if (step.time > t) break;
    s = step.survival;
  }
  return s;
}

KMCurve km_estimate(std::span<const Survival> response, std::span<const double> w) {
  if (response.size() != w.size()) throw std::invalid_argument("response and weights differ in length");
  validate_weights(w);
  KMCurve curve;
  for (std::size_t i = 0; i < w.size(); ++i) {
    curve.n_effective += w[i];
    if (response[i].event) curve.events += w[i];
  }
  if (!(curve.n_effective > 0.0)) throw std::invalid_argument("km_estimate: total weight is zero");

  curve.steps.push_back({0.0, 1.0});
  double s = 1.0;
  for (const RiskSetRow& row : event_risk_table(response, w)) {
    s *= 1.0 - row.d / row.r;
    if (s < 0.0) s = 0.0;
    if (row.time == 0.0) curve.steps.front().survival = s;
    else curve.steps.push_back({row.time, s});
    if (!curve.median && s <= 0.5) curve.median = row.time;
  }
  return curve;
}

}  // namespace ctree

#include "ctree/influence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctree/risk_set.hpp"

namespace ctree {

InfluenceScores logrank_scores(std::span<const Survival> response, std::span<const double> w) {
  if (response.size() != w.size()) throw std::invalid_argument("response and weights differ in length");
  validate_weights(w);
  if (std::none_of(w.begin(), w.end(), [](double v) { return v > 0.0; }))
    throw std::invalid_argument("logrank_scores: all case weights are zero");

  const std::vector<RiskSetRow> table = event_risk_table(response, w);
  std::vector<double> times(table.size());
  std::vector<double> cumhaz(table.size());
  double h = 0.0;
  for (std::size_t k = 0; k < table.size(); ++k) {
    h += table[k].d / table[k].r;
    times[k] = table[k].time;
    cumhaz[k] = h;
  }

  InfluenceScores a(response.size());
  for (std::size_t i = 0; i < response.size(); ++i) {
    const auto upto = std::upper_bound(times.begin(), times.end(), response[i].time);
    const double lambda = upto == times.begin() ? 0.0 : cumhaz[static_cast<std::size_t>(upto - times.begin()) - 1];
    a[i] = (response[i].event ? 1.0 : 0.0) - lambda;
  }
  return a;
}

InfluenceScores identity_scores(std::span<const double> y) {
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("identity_scores: non-finite response");
  return InfluenceScores(y.begin(), y.end());
}

Eigen::MatrixXd encode_covariate(const Covariate& c) {
  const auto n = static_cast<Eigen::Index>(c.size());
  if (c.kind() != CovariateKind::Categorical) {
    Eigen::MatrixXd g(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) g(i, 0) = c.score(static_cast<std::size_t>(i));
    return g;
  }
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(c.levels().size()));
  for (Eigen::Index i = 0; i < n; ++i) g(i, c.codes()[static_cast<std::size_t>(i)]) = 1.0;
  return g;
}

}  // namespace ctree

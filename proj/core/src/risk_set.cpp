#include "ctree/risk_set.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace ctree {

std::vector<RiskSetRow> event_risk_table(std::span<const Survival> response,
                                         std::span<const double> w) {
  if (response.size() != w.size()) throw std::invalid_argument("response and weights differ in length");

  std::vector<std::size_t> order;
  order.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return response[a].time < response[b].time;
  });

  // Walk from the largest time down so r accumulates naturally.
  std::vector<RiskSetRow> rows;
  double at_risk = 0.0;
  std::size_t k = order.size();
  while (k > 0) {
    const double t = response[order[k - 1]].time;
    double deaths = 0.0;
    while (k > 0 && response[order[k - 1]].time == t) {
      const std::size_t i = order[k - 1];
      at_risk += w[i];
      if (response[i].event) deaths += w[i];
      --k;
    }
    if (deaths > 0.0) rows.push_back({t, deaths, at_risk});
  }
  std::reverse(rows.begin(), rows.end());
  return rows;
}

}  // namespace ctree

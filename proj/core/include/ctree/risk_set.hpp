#pragma once

#include <span>
#include <vector>

#include "ctree/data.hpp"

namespace ctree {

// One distinct event time: d = weighted deaths at `time`, r = weighted
// count still at risk (observed time >= `time`). Censored observations
// tied with an event time count as at risk for it.
struct RiskSetRow {
  double time = 0.0;
  double d = 0.0;
  double r = 0.0;
};

// Rows for every distinct time carrying positive event weight, in
// increasing time order.
std::vector<RiskSetRow> event_risk_table(std::span<const Survival> response,
                                         std::span<const double> w);

}  // namespace ctree

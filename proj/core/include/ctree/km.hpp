#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ctree/data.hpp"

namespace ctree {

struct KMStep {
  double time = 0.0;
  double survival = 1.0;
  friend bool operator==(const KMStep&, const KMStep&) = default;
};

// Weighted product-limit curve. `steps` starts with (0, 1) and then holds
// one step per distinct event time; S is right-continuous and constant
// between steps.
struct KMCurve {
  std::vector<KMStep> steps;
  double n_effective = 0.0;
  double events = 0.0;
  // Smallest step time with S <= 0.5; empty if S never gets there.
  std::optional<double> median;

  double survival_at(double t) const;
};

// Throws std::invalid_argument when the total weight is zero. Ties follow
// the same convention as the log-rank scores.
KMCurve km_estimate(std::span<const Survival> response, std::span<const double> w);

}  // namespace ctree

#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ctree/data.hpp"

namespace ctree {

// Per-observation influence scores h(Y_i); q = 1 for every score type
// implemented here.
using InfluenceScores = std::vector<double>;

// Log-rank scores a_i = delta_i - Lambda(t_i), with Lambda the weighted
// Nelson-Aalen cumulative hazard of the positively weighted observations.
// Zero-weight observations still receive a score (evaluated on the same
// Lambda) so that scores and data stay index-aligned. Throws
// std::invalid_argument when every weight is zero.
InfluenceScores logrank_scores(std::span<const Survival> response, std::span<const double> w);

InfluenceScores identity_scores(std::span<const double> y);

// g_j: numeric and ordinal covariates give an n x 1 column (raw value or
// level index); categorical covariates give an n x K indicator matrix with
// columns in declared level order.
Eigen::MatrixXd encode_covariate(const Covariate& c);

}  // namespace ctree

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctree/data.hpp"
#include "ctree/influence.hpp"
#include "ctree/km.hpp"
#include "ctree/permstat.hpp"

namespace ctree {

struct FitConfig {
  double alpha = 0.05;
  double minsplit = 20.0;
  double minbucket = 7.0;
  std::optional<int> max_depth;
  TestSpec test;

  friend bool operator==(const FitConfig&, const FitConfig&) = default;
};

// Throws FitError unless 0 < alpha < 1, minbucket >= 1,
// minsplit >= 2 * minbucket, max_depth >= 0 and (for Monte Carlo) B >= 1.
void validate(const FitConfig& cfg);

// Categorical covariates with more levels than this are rejected by fit.
inline constexpr std::size_t kMaxCategoricalLevels = 10;

// Why a node was not split further.
enum class StopReason { None, Alpha, MinSplit, MinBucket, MaxDepth };

const char* to_string(StopReason reason);
std::optional<StopReason> stop_reason_from_string(std::string_view s);

// Name, kind and levels of a covariate as the tree saw it at fit time.
struct CovariateInfo {
  std::string name;
  CovariateKind kind = CovariateKind::Numeric;
  std::vector<std::string> levels;

  friend bool operator==(const CovariateInfo&, const CovariateInfo&) = default;
};

struct TreeNode {
  int id = 1;
  int depth = 0;
  double n_effective = 0.0;
  double events = 0.0;
  std::optional<double> km_median;
  // Internal nodes: adjusted p of the selected covariate. Leaves: the
  // smallest adjusted p if the node was tested at all.
  std::optional<double> p_adjusted;
  std::optional<Split> split;
  int left = 0;
  int right = 0;
  StopReason stop_reason = StopReason::None;

  // Populated by fit only; a tree restored from a document leaves these empty.
  CaseWeights weights;
  std::vector<SplitTest> tests;
  KMCurve km;

  bool is_leaf() const { return !split.has_value(); }
};

class Tree {
 public:
  // Nodes must be numbered 1..N in vector order, with node 1 the root and
  // every child id pointing at an existing node; throws std::invalid_argument
  // otherwise.
  Tree(std::vector<CovariateInfo> covariates, std::vector<TreeNode> nodes);

  const std::vector<CovariateInfo>& covariates() const { return covariates_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id - 1)); }
  const TreeNode& root() const { return nodes_.front(); }
  std::size_t size() const { return nodes_.size(); }
  std::vector<int> leaf_ids() const;
  int depth() const;

  // Leaf reached by routing the observation from the root. Throws
  // std::invalid_argument when a split covariate is missing, has the
  // wrong type, or carries a level unknown to the split.
  int predict_node(const Observation& obs) const;

 private:
  std::vector<CovariateInfo> covariates_;
  std::vector<TreeNode> nodes_;
};

// Best binary split of one covariate for the given node weights and
// scores: the cut-off (or level subset) maximising the standardized
// two-sample statistic with both children weighing at least minbucket.
// Ties go to the smaller cut-off / the earlier subset in enumeration order.
struct SplitCandidate {
  Split split;
  double statistic = 0.0;
  double left_weight = 0.0;
  double right_weight = 0.0;
};

std::optional<SplitCandidate> best_split(const Covariate& covariate, std::span<const double> w,
                                         std::span<const double> scores, double minbucket);

// Conditional-inference recursive partitioning with log-rank scores
// recomputed within every node. Nodes are numbered in level order from 1.
// Throws FitError for an invalid config, a response without events,
// categorical covariates with more than kMaxCategoricalLevels levels, or a
// test that cannot run at some node (e.g. exact enumeration on a node
// larger than kMaxExactSize).
Tree fit(const Dataset& ds, const FitConfig& cfg);

}  // namespace ctree

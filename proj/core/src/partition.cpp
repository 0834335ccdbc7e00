#include "ctree/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "ctree/csv.hpp"
#include "ctree/error.hpp"
#include "ctree/rng.hpp"

namespace ctree {

void validate(const FitConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw FitError("alpha must lie in (0, 1)");
  if (!(cfg.minbucket >= 1.0)) throw FitError("minbucket must be at least 1");
  if (!(cfg.minsplit >= 2.0 * cfg.minbucket)) throw FitError("minsplit must be at least 2 * minbucket");
  if (cfg.max_depth && *cfg.max_depth < 0) throw FitError("max_depth must be non-negative");
  if (cfg.test.method == TestMethod::MonteCarlo && cfg.test.replicates < 1)
    throw FitError("Monte Carlo test needs at least one replicate");
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::None: return "none";
    case StopReason::Alpha: return "alpha";
    case StopReason::MinSplit: return "minsplit";
    case StopReason::MinBucket: return "minbucket";
    case StopReason::MaxDepth: return "max_depth";
  }
  return "unknown";
}

std::optional<StopReason> stop_reason_from_string(std::string_view s) {
  for (StopReason r : {StopReason::None, StopReason::Alpha, StopReason::MinSplit,
                       StopReason::MinBucket, StopReason::MaxDepth})
    if (s == to_string(r)) return r;
  return std::nullopt;
}

Tree::Tree(std::vector<CovariateInfo> covariates, std::vector<TreeNode> nodes)
    : covariates_(std::move(covariates)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("tree has no nodes");
  const int count = static_cast<int>(nodes_.size());
  for (int k = 0; k < count; ++k) {
    const TreeNode& nd = nodes_[static_cast<std::size_t>(k)];
    if (nd.id != k + 1) throw std::invalid_argument("tree node ids must be 1..N in order");
    if (nd.is_leaf()) continue;
    if (nd.left < 2 || nd.left > count || nd.right < 2 || nd.right > count || nd.left == nd.right)
      throw std::invalid_argument("node " + std::to_string(nd.id) + " has invalid children");
  }
}

std::vector<int> Tree::leaf_ids() const {
  std::vector<int> ids;
  for (const TreeNode& nd : nodes_)
    if (nd.is_leaf()) ids.push_back(nd.id);
  return ids;
}

int Tree::depth() const {
  int d = 0;
  for (const TreeNode& nd : nodes_) d = std::max(d, nd.depth);
  return d;
}

int Tree::predict_node(const Observation& obs) const {
  const TreeNode* nd = &root();
  std::size_t guard = 0;
  while (!nd->is_leaf()) {
    if (++guard > nodes_.size()) throw std::invalid_argument("tree contains a cycle");
    const Split& split = *nd->split;
    auto it = obs.find(split.covariate);
    if (it == obs.end())
      throw std::invalid_argument("observation has no value for '" + split.covariate + "'");
    bool left = false;
    if (const auto* t = std::get_if<Threshold>(&split.rule)) {
      double x = 0.0;
      if (const auto* d = std::get_if<double>(&it->second)) x = *d;
      else if (!csv::parse_double(std::get<std::string>(it->second), x))
        throw std::invalid_argument("value '" + std::get<std::string>(it->second) + "' of '" +
                                    split.covariate + "' is not numeric");
      left = x <= t->cutoff;
    } else {
      const auto& set = std::get<LevelSet>(split.rule);
      const auto* level = std::get_if<std::string>(&it->second);
      if (!level) throw std::invalid_argument("covariate '" + split.covariate + "' expects a level");
      if (std::find(set.left.begin(), set.left.end(), *level) != set.left.end()) left = true;
      else if (std::find(set.right.begin(), set.right.end(), *level) == set.right.end())
        throw std::invalid_argument("unseen level '" + *level + "' for '" + split.covariate + "'");
    }
    nd = &node(left ? nd->left : nd->right);
  }
  return nd->id;
}

namespace {

bool strictly_better(double candidate, double incumbent) {
  return candidate > incumbent + 1e-12 + 1e-10 * std::abs(incumbent);
}

struct NodeMoments {
  double total = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

NodeMoments moments(std::span<const double> w, std::span<const double> a) {
  NodeMoments m;
  double wa = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    m.total += w[i];
    wa += w[i] * a[i];
  }
  if (m.total > 0.0) m.mean = wa / m.total;
  double ss = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = a[i] - m.mean;
    ss += w[i] * d * d;
  }
  if (m.total > 0.0) m.var = ss / m.total;
  return m;
}

// Standardized two-sample statistic of the indicator "goes left", with
// left weight nl and left score sum tl.
double two_sample(const NodeMoments& m, double nl, double tl) {
  const double sigma = m.var * nl * (m.total - nl) / (m.total - 1.0);
  if (sigma <= kVarianceTolerance) return 0.0;
  return std::abs(tl - nl * m.mean) / std::sqrt(sigma);
}

std::optional<SplitCandidate> best_ordered_split(const Covariate& cov, std::span<const double> w,
                                                 std::span<const double> a, double minbucket,
                                                 const NodeMoments& m) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return cov.score(x) < cov.score(y); });

  std::optional<SplitCandidate> best;
  double nl = 0.0, tl = 0.0;
  std::size_t k = 0;
  while (k < idx.size()) {
    const double v = cov.score(idx[k]);
    while (k < idx.size() && cov.score(idx[k]) == v) {
      nl += w[idx[k]];
      tl += w[idx[k]] * a[idx[k]];
      ++k;
    }
    if (k == idx.size()) break;  // the maximum is not a candidate
    const double nr = m.total - nl;
    if (nl < minbucket || nr < minbucket) continue;
    const double stat = two_sample(m, nl, tl);
    if (best && !strictly_better(stat, best->statistic)) continue;

    SplitCandidate c;
    c.statistic = stat;
    c.left_weight = nl;
    c.right_weight = nr;
    c.split.covariate = cov.name();
    if (cov.is_numeric()) {
      c.split.rule = Threshold{v};
    } else {
      LevelSet set;
      const auto code = static_cast<std::size_t>(v);
      for (std::size_t l = 0; l < cov.levels().size(); ++l)
        (l <= code ? set.left : set.right).push_back(cov.levels()[l]);
      c.split.rule = std::move(set);
    }
    best = std::move(c);
  }
  return best;
}

std::optional<SplitCandidate> best_level_split(const Covariate& cov, std::span<const double> w,
                                               std::span<const double> a, double minbucket,
                                               const NodeMoments& m) {
  const std::size_t k_all = cov.levels().size();
  std::vector<double> lw(k_all, 0.0), lt(k_all, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    lw[static_cast<std::size_t>(cov.codes()[i])] += w[i];
    lt[static_cast<std::size_t>(cov.codes()[i])] += w[i] * a[i];
  }
  std::vector<std::size_t> present;
  for (std::size_t l = 0; l < k_all; ++l)
    if (lw[l] > 0.0) present.push_back(l);
  if (present.size() < 2) return std::nullopt;
  if (present.size() > kMaxCategoricalLevels)
    throw std::invalid_argument("categorical covariate '" + cov.name() + "' has too many levels");

  // Odd masks over the present levels: the first present level always goes
  // left, which enumerates each unordered bipartition exactly once.
  const unsigned full = (1u << present.size()) - 1u;
  std::optional<SplitCandidate> best;
  unsigned best_mask = 0;
  for (unsigned mask = 1; mask < full; mask += 2) {
    double nl = 0.0, tl = 0.0;
    for (std::size_t b = 0; b < present.size(); ++b)
      if (mask & (1u << b)) {
        nl += lw[present[b]];
        tl += lt[present[b]];
      }
    const double nr = m.total - nl;
    if (nl < minbucket || nr < minbucket) continue;
    const double stat = two_sample(m, nl, tl);
    if (best && !strictly_better(stat, best->statistic)) continue;
    best = SplitCandidate{{}, stat, nl, nr};
    best_mask = mask;
  }
  if (!best) return best;

  // Levels absent from the node go right.
  LevelSet set;
  std::vector<char> left(k_all, 0);
  for (std::size_t b = 0; b < present.size(); ++b)
    if (best_mask & (1u << b)) left[present[b]] = 1;
  for (std::size_t l = 0; l < k_all; ++l) (left[l] ? set.left : set.right).push_back(cov.levels()[l]);
  best->split = Split{cov.name(), std::move(set)};
  return best;
}

}  // namespace

std::optional<SplitCandidate> best_split(const Covariate& covariate, std::span<const double> w,
                                         std::span<const double> scores, double minbucket) {
  if (w.size() != covariate.size() || scores.size() != w.size())
    throw std::invalid_argument("best_split: dimension mismatch");
  const NodeMoments m = moments(w, scores);
  if (!(m.total > 1.0)) return std::nullopt;
  if (covariate.kind() == CovariateKind::Categorical)
    return best_level_split(covariate, w, scores, minbucket, m);
  return best_ordered_split(covariate, w, scores, minbucket, m);
}

Tree fit(const Dataset& ds, const FitConfig& cfg) {
  validate(cfg);
  if (ds.m() == 0) throw FitError("no covariates to partition on");
  bool any_event = false;
  for (std::size_t i = 0; i < ds.n(); ++i)
    if (ds.response()[i].event && ds.weights()[i] > 0.0) any_event = true;
  if (!any_event) throw FitError("response has no observed events");

  std::vector<CovariateInfo> info;
  std::vector<Eigen::MatrixXd> encoded;
  for (const Covariate& c : ds.covariates()) {
    if (c.kind() == CovariateKind::Categorical && c.levels().size() > kMaxCategoricalLevels)
      throw FitError("categorical covariate '" + c.name() + "' has " +
                     std::to_string(c.levels().size()) + " levels; at most " +
                     std::to_string(kMaxCategoricalLevels) + " are supported");
    info.push_back({c.name(), c.kind(), c.levels()});
    encoded.push_back(encode_covariate(c));
  }

  struct Pending {
    int id;
    int depth;
    CaseWeights w;
  };
  std::deque<Pending> queue;
  queue.push_back({1, 0, ds.weights()});
  int next_id = 2;
  std::vector<TreeNode> nodes;

  while (!queue.empty()) {
    Pending job = std::move(queue.front());
    queue.pop_front();

    TreeNode nd;
    nd.id = job.id;
    nd.depth = job.depth;
    nd.km = km_estimate(ds.response(), job.w);
    nd.n_effective = nd.km.n_effective;
    nd.events = nd.km.events;
    nd.km_median = nd.km.median;

    if (nd.n_effective < cfg.minsplit) {
      nd.stop_reason = StopReason::MinSplit;
    } else if (cfg.max_depth && nd.depth >= *cfg.max_depth) {
      nd.stop_reason = StopReason::MaxDepth;
    } else {
      const InfluenceScores scores = logrank_scores(ds.response(), job.w);
      std::vector<double> p_raw;
      for (std::size_t j = 0; j < ds.m(); ++j) {
        TestSpec spec = cfg.test;
        spec.seed = SplitMix64::stream(cfg.test.seed, static_cast<std::uint64_t>(nd.id) * ds.m() + j)();
        try {
          SplitTest t = run_test(encoded[j], scores, job.w, spec);
          t.covariate = ds.covariate(j).name();
          p_raw.push_back(t.p_raw);
          nd.tests.push_back(std::move(t));
        } catch (const std::invalid_argument& e) {
          throw FitError("node " + std::to_string(nd.id) + ", covariate '" + ds.covariate(j).name() +
                         "': " + e.what());
        }
      }
      const std::vector<double> p_adj = adjust_pvalues(p_raw);
      std::size_t chosen = 0;
      for (std::size_t j = 0; j < p_adj.size(); ++j) {
        nd.tests[j].p_adjusted = p_adj[j];
        if (p_adj[j] < p_adj[chosen] * (1.0 - 1e-10)) chosen = j;
      }
      nd.p_adjusted = p_adj[chosen];

      if (p_adj[chosen] > cfg.alpha) {
        nd.stop_reason = StopReason::Alpha;
      } else if (auto cand = best_split(ds.covariate(chosen), job.w, scores, cfg.minbucket)) {
        auto [left, right] = subset_weights(ds, job.w, cand->split);
        nd.split = std::move(cand->split);
        nd.left = next_id++;
        nd.right = next_id++;
        queue.push_back({nd.left, nd.depth + 1, std::move(left)});
        queue.push_back({nd.right, nd.depth + 1, std::move(right)});
      } else {
        nd.stop_reason = StopReason::MinBucket;
      }
    }
    nd.weights = std::move(job.w);
    nodes.push_back(std::move(nd));
  }
  return Tree(std::move(info), std::move(nodes));
}

}  // namespace ctree

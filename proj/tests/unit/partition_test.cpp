#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "ctree/error.hpp"
#include "ctree/partition.hpp"
#include "random_data.hpp"

namespace ctree {
namespace {

std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

// Slow reference for numeric best_split: a full linear statistic for the
// indicator of every candidate cut-off.
std::optional<std::pair<double, double>> slow_best_cut(const std::vector<double>& x,
                                                       const std::vector<double>& a,
                                                       const std::vector<double>& w, double minbucket) {
  std::set<double> values;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (w[i] > 0) values.insert(x[i]);
  if (values.size() < 2) return std::nullopt;
  values.erase(std::prev(values.end()));
  std::optional<std::pair<double, double>> best;
  for (double c : values) {
    Eigen::MatrixXd g(x.size(), 1);
    double nl = 0, total = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      g(i, 0) = x[i] <= c ? 1.0 : 0.0;
      nl += w[i] * g(i, 0);
      total += w[i];
    }
    if (nl < minbucket || total - nl < minbucket) continue;
    const double stat = standardize_max(linear_statistic(g, a, w));
    if (!best || stat > best->second + 1e-9) best = {{c, stat}};
  }
  return best;
}

TEST(BestSplit, WorkedExample) {
  auto cand = best_split(Covariate::numeric("x", {1, 2, 3, 4}), ones(4), std::vector<double>{1, 1, -1, -1}, 1);
  ASSERT_TRUE(cand);
  EXPECT_EQ(std::get<Threshold>(cand->split.rule).cutoff, 2.0);
  EXPECT_NEAR(cand->statistic, 2.0 / std::sqrt(4.0 / 3.0), 1e-12);
}

TEST(BestSplit, BinaryAndConstant) {
  auto bin = best_split(Covariate::categorical("hcc", {"no", "yes"}, {0, 1, 1, 0, 0}), ones(5),
                        std::vector<double>{1, -1, 0.5, 0, -0.5}, 1);
  ASSERT_TRUE(bin);
  EXPECT_EQ(std::get<LevelSet>(bin->split.rule), (LevelSet{{"no"}, {"yes"}}));

  EXPECT_FALSE(best_split(Covariate::numeric("x", {3, 3, 3}), ones(3), std::vector<double>{1, 0, -1}, 1));
  EXPECT_FALSE(best_split(Covariate::numeric("x", {1, 2, 3, 4}), ones(4), std::vector<double>{1, 1, -1, -1}, 3));
}

TEST(BestSplit, SmallerCutoffWinsTies) {
  // Symmetric scores: c=1 and c=3 give the same statistic.
  auto cand = best_split(Covariate::numeric("x", {1, 2, 3, 4}), ones(4), std::vector<double>{1, 0, 0, -1}, 1);
  ASSERT_TRUE(cand);
  EXPECT_EQ(std::get<Threshold>(cand->split.rule).cutoff, 1.0);
}

TEST(BestSplit, MatchesSlowPath) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> norm;
  std::uniform_int_distribution<int> grid(0, 6), wd(0, 2);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 25;
    std::vector<double> x(n), a(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rep % 2 ? grid(rng) : norm(rng);
      a[i] = norm(rng);
      w[i] = wd(rng);
    }
    w[0] = w[1] = 1;
    auto fast = best_split(Covariate::numeric("x", x), w, a, 3);
    auto slow = slow_best_cut(x, a, w, 3);
    ASSERT_EQ(fast.has_value(), slow.has_value());
    if (!fast) continue;
    EXPECT_EQ(std::get<Threshold>(fast->split.rule).cutoff, slow->first);
    EXPECT_NEAR(fast->statistic, slow->second, 1e-9);
  }
}

TEST(BestSplit, CategoricalSubsets) {
  // Levels A and C carry high scores, B and D low: best subset {A, C}.
  std::vector<int> codes{0, 1, 2, 3, 0, 1, 2, 3};
  std::vector<double> a{2, -2, 2, -2, 1.5, -1.5, 1.8, -1.8};
  auto cand = best_split(Covariate::categorical("g", {"A", "B", "C", "D"}, codes), ones(8), a, 1);
  ASSERT_TRUE(cand);
  EXPECT_EQ(std::get<LevelSet>(cand->split.rule), (LevelSet{{"A", "C"}, {"B", "D"}}));
}

TEST(BestSplit, AbsentLevelsGoRight) {
  std::vector<int> codes{0, 2, 0, 2};
  auto cand = best_split(Covariate::categorical("g", {"A", "B", "C"}, codes), std::vector<double>{1, 1, 1, 1},
                         std::vector<double>{1, -1, 1, -1}, 1);
  ASSERT_TRUE(cand);
  EXPECT_EQ(std::get<LevelSet>(cand->split.rule), (LevelSet{{"A"}, {"B", "C"}}));
}

TEST(BestSplit, OrdinalUsesLevelOrder) {
  auto cand = best_split(Covariate::ordinal("band", {"lo", "mid", "hi"}, {0, 1, 2, 2, 1, 0}), ones(6),
                         std::vector<double>{1, 1, -1, -1, 1, 1}, 1);
  ASSERT_TRUE(cand);
  EXPECT_EQ(std::get<LevelSet>(cand->split.rule), (LevelSet{{"lo", "mid"}, {"hi"}}));
}

TEST(FitConfig, Validation) {
  FitConfig c;
  EXPECT_NO_THROW(validate(c));
  c.alpha = 1.0;
  EXPECT_THROW(validate(c), FitError);
  c = {};
  c.minbucket = 0.5;
  EXPECT_THROW(validate(c), FitError);
  c = {};
  c.minsplit = 10;
  c.minbucket = 6;
  EXPECT_THROW(validate(c), FitError);
}

TEST(Fit, IndependentResponseGivesSingleLeaf) {
  Dataset ds({Covariate::numeric("x", {1, 2, 3, 4, 5, 6, 7, 8})},
             std::vector<Survival>(8, {5, true}));
  FitConfig cfg;
  cfg.minsplit = 2;
  cfg.minbucket = 1;
  auto tree = fit(ds, cfg);
  ASSERT_EQ(tree.size(), 1u);
  EXPECT_EQ(tree.root().stop_reason, StopReason::Alpha);
  EXPECT_EQ(*tree.root().p_adjusted, 1.0);
}

TEST(Fit, PlantedBinaryCovariateExact) {
  std::vector<int> grp{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  std::vector<double> noise{0.3, 0.9, 0.1, 0.7, 0.5, 0.2, 0.8, 0.4, 0.6, 0.0};
  std::vector<Survival> y;
  for (int i = 0; i < 10; ++i) y.push_back(grp[i] ? Survival{1.0 + i, true} : Survival{100.0 + i, false});
  Dataset ds({Covariate::numeric("noise", noise), Covariate::categorical("grp", {"a", "b"}, grp)}, y);
  FitConfig cfg;
  cfg.minsplit = 4;
  cfg.minbucket = 2;
  cfg.test.method = TestMethod::Exact;
  auto tree = fit(ds, cfg);
  ASSERT_EQ(tree.size(), 3u);
  EXPECT_EQ(tree.root().split->covariate, "grp");
  EXPECT_EQ(tree.depth(), 1);
  EXPECT_LE(*tree.root().p_adjusted, cfg.alpha);
}

TEST(Fit, Errors) {
  Dataset censored({Covariate::numeric("x", {1, 2, 3})}, {{1, false}, {2, false}, {3, false}});
  EXPECT_THROW(fit(censored, FitConfig{}), FitError);
  FitConfig bad;
  bad.alpha = 0;
  EXPECT_THROW(fit(testing::random_dataset(1, 50), bad), FitError);

  std::vector<std::string> levels;
  std::vector<int> codes;
  for (int k = 0; k < 11; ++k) {
    levels.push_back("L" + std::to_string(k));
    codes.push_back(k);
  }
  Dataset wide({Covariate::categorical("g", levels, codes)}, std::vector<Survival>(11, {1, true}));
  EXPECT_THROW(fit(wide, FitConfig{}), FitError);

  FitConfig exact;
  exact.test.method = TestMethod::Exact;
  EXPECT_THROW(fit(testing::random_dataset(2, 40), exact), FitError);
}

TEST(Fit, StructuralInvariants) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Dataset ds = testing::random_dataset(seed, 300, 1.2);
    FitConfig cfg;
    auto tree = fit(ds, cfg);
    std::vector<int> cover(ds.n(), 0);
    for (const TreeNode& nd : tree.nodes()) {
      if (nd.is_leaf()) {
        EXPECT_NE(nd.stop_reason, StopReason::None);
        for (std::size_t i = 0; i < ds.n(); ++i) cover[i] += nd.weights[i] > 0;
        continue;
      }
      EXPECT_LE(*nd.p_adjusted, cfg.alpha);
      const auto& l = tree.node(nd.left).weights;
      const auto& r = tree.node(nd.right).weights;
      for (std::size_t i = 0; i < ds.n(); ++i) EXPECT_EQ(l[i] + r[i], nd.weights[i]);
      EXPECT_GE(tree.node(nd.left).n_effective, cfg.minbucket);
      EXPECT_GE(tree.node(nd.right).n_effective, cfg.minbucket);
      EXPECT_EQ(tree.node(nd.left).depth, nd.depth + 1);
      for (const SplitTest& t : nd.tests) EXPECT_GE(t.p_adjusted, t.p_raw);
    }
    for (int c : cover) EXPECT_EQ(c, 1);
    // Level order: ids increase with depth.
    for (std::size_t k = 1; k < tree.size(); ++k)
      EXPECT_LE(tree.nodes()[k - 1].depth, tree.nodes()[k].depth);
  }
}

TEST(Fit, StopReasons) {
  Dataset ds = testing::random_dataset(5, 400, 2.0);
  FitConfig depth0;
  depth0.max_depth = 0;
  auto t0 = fit(ds, depth0);
  EXPECT_EQ(t0.size(), 1u);
  EXPECT_EQ(t0.root().stop_reason, StopReason::MaxDepth);

  FitConfig big;
  big.minsplit = 1000;
  big.minbucket = 7;
  EXPECT_EQ(fit(ds, big).root().stop_reason, StopReason::MinSplit);

  FitConfig bucket;
  bucket.minbucket = 200;
  bucket.minsplit = 400;
  auto tb = fit(ds, bucket);
  EXPECT_LE(tb.size(), 3u);
}

TEST(Fit, MonteCarloDeterministic) {
  Dataset ds = testing::random_dataset(8, 150, 1.0);
  FitConfig cfg;
  cfg.test = {TestMethod::MonteCarlo, 199, 77};
  auto a = fit(ds, cfg), b = fit(ds, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.nodes()[k].p_adjusted, b.nodes()[k].p_adjusted);
    EXPECT_EQ(a.nodes()[k].split, b.nodes()[k].split);
  }
}

TEST(Predict, Routing) {
  Dataset one({Covariate::numeric("meld", {1, 2})}, {{1, true}, {2, true}});
  FitConfig cfg;
  cfg.minsplit = 2;
  cfg.minbucket = 1;
  auto leaf = fit(one, cfg);
  EXPECT_EQ(leaf.predict_node({}), 1);

  std::vector<TreeNode> nodes(3);
  for (int k = 0; k < 3; ++k) nodes[k].id = k + 1;
  nodes[0].split = Split{"meld", Threshold{16}};
  nodes[0].left = 2;
  nodes[0].right = 3;
  nodes[1].depth = nodes[2].depth = 1;
  Tree tree({{"meld", CovariateKind::Numeric, {}}}, nodes);
  EXPECT_EQ(tree.predict_node({{"meld", 10.0}}), 2);
  EXPECT_EQ(tree.predict_node({{"meld", 16.0}}), 2);
  EXPECT_EQ(tree.predict_node({{"meld", 16.5}}), 3);
  EXPECT_THROW(tree.predict_node({}), std::invalid_argument);
  EXPECT_THROW(tree.predict_node({{"meld", std::string("high")}}), std::invalid_argument);

  nodes[0].split = Split{"g", LevelSet{{"A"}, {"B"}}};
  Tree cat({{"g", CovariateKind::Categorical, {"A", "B"}}}, nodes);
  EXPECT_EQ(cat.predict_node({{"g", std::string("B")}}), 3);
  EXPECT_THROW(cat.predict_node({{"g", std::string("Z")}}), std::invalid_argument);
}

TEST(Tree, RejectsBadIds) {
  std::vector<TreeNode> nodes(2);
  nodes[0].id = 1;
  nodes[1].id = 3;
  EXPECT_THROW(Tree({}, nodes), std::invalid_argument);
  nodes[1].id = 2;
  nodes[0].split = Split{"x", Threshold{1}};
  nodes[0].left = 2;
  nodes[0].right = 5;
  EXPECT_THROW(Tree({}, nodes), std::invalid_argument);
}

}  // namespace
}  // namespace ctree

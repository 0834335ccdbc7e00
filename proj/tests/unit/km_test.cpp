#include <gtest/gtest.h>

#include <random>

#include "ctree/km.hpp"
#include "random_data.hpp"

namespace ctree {
namespace {

TEST(KaplanMeier, AllEvents) {
  std::vector<Survival> y{{1, true}, {2, true}, {3, true}, {4, true}};
  auto km = km_estimate(y, std::vector<double>(4, 1.0));
  std::vector<KMStep> expect{{0, 1}, {1, 0.75}, {2, 0.5}, {3, 0.25}, {4, 0}};
  ASSERT_EQ(km.steps.size(), expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k) {
    EXPECT_EQ(km.steps[k].time, expect[k].time);
    EXPECT_NEAR(km.steps[k].survival, expect[k].survival, 1e-15);
  }
  EXPECT_EQ(km.median, 2.0);
  EXPECT_EQ(km.events, 4.0);
}

TEST(KaplanMeier, AllCensored) {
  std::vector<Survival> y{{1, false}, {5, false}};
  auto km = km_estimate(y, std::vector<double>{1, 1});
  EXPECT_EQ(km.steps.size(), 1u);
  EXPECT_EQ(km.survival_at(100), 1.0);
  EXPECT_FALSE(km.median);
}

TEST(KaplanMeier, OneEventOneCensored) {
  std::vector<Survival> y{{2, true}, {5, false}};
  auto km = km_estimate(y, std::vector<double>{1, 1});
  EXPECT_EQ(km.survival_at(1.999), 1.0);
  EXPECT_EQ(km.survival_at(2), 0.5);
  EXPECT_EQ(km.survival_at(10), 0.5);
  EXPECT_EQ(km.median, 2.0);
  EXPECT_THROW(km_estimate(y, std::vector<double>{0, 0}), std::invalid_argument);
}

TEST(KaplanMeier, EmpiricalWithoutCensoring) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> wd(0, 4);
  for (int rep = 0; rep < 30; ++rep) {
    auto y = testing::random_response(rng, 40, 0.0);
    std::vector<double> w(40);
    double total = 0;
    for (auto& v : w) total += (v = wd(rng));
    if (total == 0) continue;
    auto km = km_estimate(y, w);
    for (const auto& s : y) {
      for (double t : {s.time - 0.5, s.time, s.time + 0.5}) {
        double above = 0;
        for (std::size_t i = 0; i < y.size(); ++i) above += y[i].time > t ? w[i] : 0.0;
        EXPECT_NEAR(km.survival_at(t), above / total, 1e-12);
      }
    }
  }
}

TEST(KaplanMeier, ScaleInvariantAndMonotone) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 30; ++rep) {
    auto y = testing::random_response(rng, 60);
    std::vector<double> w(60, 1.0), w3(60, 3.5);
    auto a = km_estimate(y, w), b = km_estimate(y, w3);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    EXPECT_EQ(a.steps.front().time, 0.0);
    EXPECT_EQ(a.steps.front().survival, 1.0);
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
      EXPECT_NEAR(a.steps[k].survival, b.steps[k].survival, 1e-12);
      EXPECT_GE(a.steps[k].survival, 0.0);
      EXPECT_LE(a.steps[k].survival, 1.0);
      if (k > 0) {
        EXPECT_LE(a.steps[k].survival, a.steps[k - 1].survival);
      }
    }
    EXPECT_EQ(a.median, b.median);
  }
}

}  // namespace
}  // namespace ctree

#include <gtest/gtest.h>

#include <sstream>

#include "ctree/csv.hpp"
#include "ctree/meld.hpp"
#include "ctree/partition.hpp"

namespace ctree {
namespace {

TEST(MeldScore, Examples) {
  EXPECT_EQ(meld::meld_score({1.0, 1.0, 1.0, 0}), 0.0);
  EXPECT_NEAR(meld::meld_score({1.0, 1.0, 1.0, 1}), 6.4, 1e-12);
  EXPECT_NEAR(meld::meld_score({2.0, 1.5, 1.2, 1}), 15.325, 1e-3);
}

TEST(MeldScore, ClampAndErrors) {
  EXPECT_LT(meld::meld_score({0.5, 1.0, 1.0, 0}), 0.0);
  EXPECT_EQ(meld::meld_score({0.5, 0.8, 0.3, 0}, true), 0.0);
  EXPECT_THROW(meld::meld_score({0.0, 1.0, 1.0, 0}), std::invalid_argument);
  EXPECT_THROW(meld::meld_score({1.0, -1.0, 1.0, 0}), std::invalid_argument);
  EXPECT_THROW(meld::meld_score({1.0, 1.0, 1.0, 2}), std::invalid_argument);
}

TEST(Simulate, DefaultCohort) {
  meld::SimConfig cfg;
  auto ds = meld::simulate_cohort(cfg);
  EXPECT_EQ(ds.n(), 529u);
  auto s = meld::summarize(ds);
  EXPECT_NEAR(s.event_fraction, 0.36, 0.06);
  EXPECT_NEAR(s.male_fraction, 0.61, 0.06);
  EXPECT_NEAR(s.age_mean, 51, 2.5);
  EXPECT_GT(s.meld_q1, 6.0);
  EXPECT_LT(s.meld_q3, 40.0);
  for (const char* name : {"sex", "age", "blood_type", "bmi", "etiology", "hcc", "meld"})
    EXPECT_TRUE(ds.find(name)) << name;
}

TEST(Simulate, DeterministicCsv) {
  meld::SimConfig cfg;
  cfg.seed = 99;
  std::ostringstream a, b;
  write_csv(a, meld::simulate_cohort(cfg));
  write_csv(b, meld::simulate_cohort(cfg));
  EXPECT_EQ(a.str(), b.str());
  cfg.seed = 100;
  std::ostringstream c;
  write_csv(c, meld::simulate_cohort(cfg));
  EXPECT_NE(a.str(), c.str());
}

TEST(Simulate, CsvRoundTrip) {
  for (bool labs : {false, true}) {
    meld::SimConfig cfg;
    cfg.meld_from_labs = labs;
    auto ds = meld::simulate_cohort(cfg);
    std::ostringstream out;
    write_csv(out, ds);
    ColumnSchema s;
    s.time = "time";
    s.event = "event";
    for (const auto& c : ds.covariates()) {
      s.covariates.push_back(c.name());
      if (!c.is_numeric()) s.levels[c.name()] = c.levels();
    }
    EXPECT_EQ(parse_csv_dataset(out.str(), s).data, ds);
  }
}

TEST(Simulate, LabModeUsesFormula) {
  meld::SimConfig cfg;
  cfg.meld_from_labs = true;
  cfg.n = 50;
  auto ds = meld::simulate_cohort(cfg);
  const auto& bili = ds.covariate(*ds.find("bilirubin")).values();
  const auto& inr = ds.covariate(*ds.find("inr")).values();
  const auto& creat = ds.covariate(*ds.find("creatinine")).values();
  const auto& meldv = ds.covariate(*ds.find("meld")).values();
  const auto& etio = ds.covariate(*ds.find("etiology"));
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const std::string& e = etio.levels()[static_cast<std::size_t>(etio.codes()[i])];
    const int flag = (e == "cholestatic" || e == "alcoholic") ? 0 : 1;
    EXPECT_EQ(meldv[i], meld::meld_score({bili[i], inr[i], creat[i], flag}));
  }
}

TEST(Simulate, NullHazardRarelySplits) {
  int leaves = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    meld::SimConfig cfg;
    cfg.seed = seed;
    cfg.hazard_ratio = 1.0;
    leaves += fit(meld::simulate_cohort(cfg), FitConfig{}).size() == 1;
  }
  EXPECT_GE(leaves, 36);
}

TEST(Simulate, InvalidConfigs) {
  meld::SimConfig cfg;
  cfg.n = 1;
  EXPECT_THROW(meld::simulate_cohort(cfg), std::invalid_argument);
  cfg = {};
  cfg.hazard_ratio = 0;
  EXPECT_THROW(meld::simulate_cohort(cfg), std::invalid_argument);
  cfg = {};
  cfg.censor_fraction = 0.01;  // admin censoring alone exceeds this
  EXPECT_THROW(meld::simulate_cohort(cfg), std::invalid_argument);
}

TEST(SimConfigParse, KeysAndErrors) {
  std::istringstream in("# cohort\nn = 100\nseed=7\nhazard_ratio = 2.5  # strong\netiology_hcv = 0.5\n"
                        "etiology_other = 0.11\nmeld_from_labs = true\n");
  auto cfg = meld::parse_config(in);
  EXPECT_EQ(cfg.n, 100u);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.hazard_ratio, 2.5);
  EXPECT_EQ(cfg.etiology_mix[0], 0.5);
  EXPECT_TRUE(cfg.meld_from_labs);

  std::istringstream bad_key("colour = red\n");
  EXPECT_THROW(meld::parse_config(bad_key), std::invalid_argument);
  std::istringstream bad_value("n = ten\n");
  EXPECT_THROW(meld::parse_config(bad_value), std::invalid_argument);
  std::istringstream big_seed("seed = 18446744073709551615\n");
  EXPECT_EQ(meld::parse_config(big_seed).seed, 18446744073709551615ull);
}

}  // namespace
}  // namespace ctree

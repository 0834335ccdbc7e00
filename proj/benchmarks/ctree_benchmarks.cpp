#include <benchmark/benchmark.h>

#include <random>

#include "ctree/influence.hpp"
#include "ctree/meld.hpp"
#include "ctree/partition.hpp"
#include "ctree/permstat.hpp"

namespace {

ctree::Dataset cohort(std::size_t n) {
  ctree::meld::SimConfig cfg;
  cfg.n = n;
  return ctree::meld::simulate_cohort(cfg);
}

void BM_LogrankScores(benchmark::State& state) {
  const auto ds = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ctree::logrank_scores(ds.response(), ds.weights()));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LogrankScores)->RangeMultiplier(4)->Range(128, 32768)->Complexity();

void BM_LinearStatisticOneHot(benchmark::State& state) {
  const auto ds = cohort(static_cast<std::size_t>(state.range(0)));
  const auto g = ctree::encode_covariate(ds.covariate(*ds.find("etiology")));
  const auto a = ctree::logrank_scores(ds.response(), ds.weights());
  for (auto _ : state) benchmark::DoNotOptimize(ctree::linear_statistic(g, a, ds.weights()));
}
BENCHMARK(BM_LinearStatisticOneHot)->RangeMultiplier(4)->Range(128, 32768);

void BM_BestSplitNumeric(benchmark::State& state) {
  const auto ds = cohort(static_cast<std::size_t>(state.range(0)));
  const auto a = ctree::logrank_scores(ds.response(), ds.weights());
  const auto& meld = ds.covariate(*ds.find("meld"));
  for (auto _ : state) benchmark::DoNotOptimize(ctree::best_split(meld, ds.weights(), a, 7));
}
BENCHMARK(BM_BestSplitNumeric)->RangeMultiplier(4)->Range(128, 32768);

void BM_MonteCarlo(benchmark::State& state) {
  const auto ds = cohort(529);
  const auto g = ctree::encode_covariate(ds.covariate(*ds.find("meld")));
  const auto a = ctree::logrank_scores(ds.response(), ds.weights());
  for (auto _ : state)
    benchmark::DoNotOptimize(ctree::pvalue_montecarlo(g, a, ds.weights(), static_cast<int>(state.range(0)), 1));
}
BENCHMARK(BM_MonteCarlo)->Arg(999)->Arg(9999)->Unit(benchmark::kMillisecond);

void BM_ExactEnumeration(benchmark::State& state) {
  const auto n = state.range(0);
  Eigen::MatrixXd g(n, 1);
  std::vector<double> a(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n), 1.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> norm;
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, 0) = norm(rng);
    a[static_cast<std::size_t>(i)] = norm(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ctree::pvalue_exact(g, a, w));
}
BENCHMARK(BM_ExactEnumeration)->DenseRange(6, 10, 2)->Unit(benchmark::kMillisecond);

void BM_FitCohort(benchmark::State& state) {
  const auto ds = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(ctree::fit(ds, ctree::FitConfig{}));
}
BENCHMARK(BM_FitCohort)->Arg(529)->Arg(6000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

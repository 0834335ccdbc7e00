#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ctree {

// T = vec(sum_i w_i g_i a_i) together with its conditional expectation and
// covariance under random permutation of the scores (the weights held fixed).
struct LinearStatistic {
  Eigen::VectorXd statistic;
  Eigen::VectorXd expectation;
  Eigen::MatrixXd covariance;
};

// Coordinates with variance at or below this are not informative and are
// skipped by the max-type standardization.
inline constexpr double kVarianceTolerance = 1e-10;

// g is n x p, a and w have length n. Requires sum(w) >= 2; throws
// std::invalid_argument otherwise or on a dimension mismatch.
LinearStatistic linear_statistic(const Eigen::MatrixXd& g, std::span<const double> a,
                                 std::span<const double> w);

// max_k |T_k - mu_k| / sqrt(sigma_kk) over informative coordinates; 0 when
// there are none.
double standardize_max(const LinearStatistic& ls);

// Number of coordinates with sigma_kk > kVarianceTolerance.
int informative_dims(const LinearStatistic& ls);

// Standard normal CDF. Evaluated through std::erfc (fdlibm-style rational
// approximations in every mainstream libm; absolute error far below 1e-7).
double normal_cdf(double x);

// 1 - (2 Phi(c) - 1)^dof, i.e. the max of dof independent |N(0,1)|
// exceeding c. dof = 0 gives 1. Computed through the upper tail to keep
// precision for small p.
double pvalue_asymptotic(double c_max, int dof);

// True when `candidate` reaches `observed` up to floating-point noise:
// resampled statistics that tie the observed one count as ">=".
bool reaches(double candidate, double observed);

// Monte Carlo permutation p-value (1 + #{b: c_b >= c_obs}) / (B + 1).
// Integer weights are expanded into a multiset of observations before
// permuting; zero-weight rows drop out. Replicate b draws from
// SplitMix64::stream(seed, b). Throws std::invalid_argument for
// non-integral weights or B < 1.
double pvalue_montecarlo(const Eigen::MatrixXd& g, std::span<const double> a,
                         std::span<const double> w, int replicates, std::uint64_t seed);

// Largest expanded sample pvalue_exact will enumerate (10! permutations).
inline constexpr int kMaxExactSize = 10;

// Exact permutation p-value: the share of all N! orderings of the scores
// whose c_max reaches the observed one. Weights must be integral (unit
// weights being the usual case) and expand to at most kMaxExactSize
// observations; otherwise throws std::invalid_argument.
double pvalue_exact(const Eigen::MatrixXd& g, std::span<const double> a, std::span<const double> w);

// Bonferroni: min(1, m * p_j) with m = p_raw.size().
std::vector<double> adjust_pvalues(std::span<const double> p_raw);

enum class TestMethod { Asymptotic, MonteCarlo, Exact };

const char* to_string(TestMethod method);

struct TestSpec {
  TestMethod method = TestMethod::Asymptotic;
  int replicates = 9999;
  std::uint64_t seed = 0;

  friend bool operator==(const TestSpec&, const TestSpec&) = default;
};

// Outcome of the permutation test of one covariate against the scores.
struct SplitTest {
  std::string covariate;
  double c_max = 0.0;
  int dof = 0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  TestMethod method = TestMethod::Asymptotic;
};

// c_max and the raw p-value of g against a under the given method;
// p_adjusted is left equal to p_raw.
SplitTest run_test(const Eigen::MatrixXd& g, std::span<const double> a, std::span<const double> w,
                   const TestSpec& spec);

}  // namespace ctree

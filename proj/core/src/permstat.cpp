#include "ctree/permstat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "ctree/rng.hpp"

namespace ctree {

LinearStatistic linear_statistic(const Eigen::MatrixXd& g, std::span<const double> a,
                                 std::span<const double> w) {
  const auto n = g.rows();
  if (static_cast<std::size_t>(n) != a.size() || a.size() != w.size())
    throw std::invalid_argument("linear_statistic: dimension mismatch");
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(wsum >= 2.0)) throw std::invalid_argument("linear_statistic: total case weight below 2");

  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), n);
  const Eigen::Map<const Eigen::VectorXd> av(a.data(), n);

  const double mean = wv.dot(av) / wsum;
  const double var = (wv.array() * (av.array() - mean).square()).sum() / wsum;

  const Eigen::VectorXd gsum = g.transpose() * wv;
  const Eigen::MatrixXd gwg = g.transpose() * wv.asDiagonal() * g;

  LinearStatistic ls;
  ls.statistic = g.transpose() * (wv.array() * av.array()).matrix();
  ls.expectation = gsum * mean;
  ls.covariance = (wsum / (wsum - 1.0)) * var * gwg -
                  (var / (wsum - 1.0)) * (gsum * gsum.transpose());
  return ls;
}

double standardize_max(const LinearStatistic& ls) {
  double best = 0.0;
  for (Eigen::Index k = 0; k < ls.statistic.size(); ++k) {
    const double v = ls.covariance(k, k);
    if (v <= kVarianceTolerance) continue;
    best = std::max(best, std::abs(ls.statistic(k) - ls.expectation(k)) / std::sqrt(v));
  }
  return best;
}

int informative_dims(const LinearStatistic& ls) {
  int count = 0;
  for (Eigen::Index k = 0; k < ls.covariance.rows(); ++k)
    if (ls.covariance(k, k) > kVarianceTolerance) ++count;
  return count;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double pvalue_asymptotic(double c_max, int dof) {
  if (dof <= 0 || !(c_max > 0.0)) return 1.0;
  const double two_sided = std::erfc(c_max / std::numbers::sqrt2);  // 2 (1 - Phi(c))
  const double p = -std::expm1(dof * std::log1p(-two_sided));
  return std::clamp(p, 0.0, 1.0);
}

bool reaches(double candidate, double observed) {
  return candidate >= observed - (1e-12 + 1e-10 * std::abs(observed));
}

namespace {

// Integer weights turned into an explicit multiset: row-major g and the
// matching scores, one entry per unit of weight.
struct Expanded {
  std::vector<double> g;
  std::vector<double> a;
  Eigen::Index p = 0;
  std::size_t size() const { return a.size(); }
};

Expanded expand(const Eigen::MatrixXd& g, std::span<const double> a, std::span<const double> w,
                const char* who) {
  Expanded e;
  e.p = g.cols();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double wi = w[i];
    if (!(wi >= 0.0) || wi != std::floor(wi))
      throw std::invalid_argument(std::string(who) + ": case weights must be non-negative integers");
    for (long r = 0; r < static_cast<long>(wi); ++r) {
      for (Eigen::Index k = 0; k < e.p; ++k) e.g.push_back(g(static_cast<Eigen::Index>(i), k));
      e.a.push_back(a[i]);
    }
  }
  return e;
}

struct Standardizer {
  std::vector<Eigen::Index> dims;
  std::vector<double> centre;
  std::vector<double> scale;

  explicit Standardizer(const LinearStatistic& ls) {
    for (Eigen::Index k = 0; k < ls.statistic.size(); ++k) {
      const double v = ls.covariance(k, k);
      if (v <= kVarianceTolerance) continue;
      dims.push_back(k);
      centre.push_back(ls.expectation(k));
      scale.push_back(1.0 / std::sqrt(v));
    }
  }

  // c_max of the expanded sample with scores read through `perm`.
  template <typename Perm>
  double operator()(const Expanded& e, const Perm& perm) const {
    double best = 0.0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      const Eigen::Index k = dims[d];
      double t = 0.0;
      for (std::size_t r = 0; r < e.size(); ++r)
        t += e.g[r * static_cast<std::size_t>(e.p) + static_cast<std::size_t>(k)] * e.a[perm[r]];
      best = std::max(best, std::abs(t - centre[d]) * scale[d]);
    }
    return best;
  }
};

}  // namespace

double pvalue_montecarlo(const Eigen::MatrixXd& g, std::span<const double> a,
                         std::span<const double> w, int replicates, std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("pvalue_montecarlo: replicate count must be >= 1");
  const Expanded e = expand(g, a, w, "pvalue_montecarlo");
  const LinearStatistic ls = linear_statistic(g, a, w);
  const double observed = standardize_max(ls);
  const Standardizer stat(ls);
  if (stat.dims.empty()) return 1.0;  // every replicate ties at 0

  std::vector<std::size_t> perm(e.size());
  long hits = 0;
  for (int b = 0; b < replicates; ++b) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    SplitMix64 rng = SplitMix64::stream(seed, static_cast<std::uint64_t>(b));
    for (std::size_t i = perm.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(perm[i - 1], perm[j]);
    }
    if (reaches(stat(e, perm), observed)) ++hits;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(replicates + 1);
}

double pvalue_exact(const Eigen::MatrixXd& g, std::span<const double> a, std::span<const double> w) {
  const Expanded e = expand(g, a, w, "pvalue_exact");
  if (e.size() > static_cast<std::size_t>(kMaxExactSize))
    throw std::invalid_argument("pvalue_exact: " + std::to_string(e.size()) +
                                " observations exceed the enumeration bound of " +
                                std::to_string(kMaxExactSize));
  const LinearStatistic ls = linear_statistic(g, a, w);
  const double observed = standardize_max(ls);
  const Standardizer stat(ls);
  if (stat.dims.empty()) return 1.0;

  std::vector<std::size_t> perm(e.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  long total = 0;
  long hits = 0;
  do {
    ++total;
    if (reaches(stat(e, perm), observed)) ++hits;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<double> adjust_pvalues(std::span<const double> p_raw) {
  const double m = static_cast<double>(p_raw.size());
  std::vector<double> out;
  out.reserve(p_raw.size());
  for (double p : p_raw) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("adjust_pvalues: p-value outside [0,1]");
    out.push_back(std::min(1.0, m * p));
  }
  return out;
}

const char* to_string(TestMethod method) {
  switch (method) {
    case TestMethod::Asymptotic: return "asymptotic";
    case TestMethod::MonteCarlo: return "montecarlo";
    case TestMethod::Exact: return "exact";
  }
  return "unknown";
}

SplitTest run_test(const Eigen::MatrixXd& g, std::span<const double> a, std::span<const double> w,
                   const TestSpec& spec) {
  SplitTest t;
  t.method = spec.method;
  const LinearStatistic ls = linear_statistic(g, a, w);
  t.c_max = standardize_max(ls);
  t.dof = informative_dims(ls);
  switch (spec.method) {
    case TestMethod::Asymptotic: t.p_raw = pvalue_asymptotic(t.c_max, t.dof); break;
    case TestMethod::MonteCarlo: t.p_raw = pvalue_montecarlo(g, a, w, spec.replicates, spec.seed); break;
    case TestMethod::Exact: t.p_raw = pvalue_exact(g, a, w); break;
  }
  t.p_adjusted = t.p_raw;
  return t;
}

}  // namespace ctree

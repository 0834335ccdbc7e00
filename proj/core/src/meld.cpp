#include "ctree/meld.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "ctree/csv.hpp"
#include "ctree/rng.hpp"

namespace ctree::meld {

double meld_score(const MeldRecord& r, bool clamp_labs) {
  if (!(r.bilirubin > 0.0) || !(r.inr > 0.0) || !(r.creatinine > 0.0))
    throw std::invalid_argument("meld_score: lab values must be positive");
  if (r.etiology_flag != 0 && r.etiology_flag != 1)
    throw std::invalid_argument("meld_score: etiology flag must be 0 or 1");
  auto lab = [clamp_labs](double v) { return clamp_labs ? std::max(v, 1.0) : v; };
  return 3.8 * std::log(lab(r.bilirubin)) + 11.2 * std::log(lab(r.inr)) +
         9.6 * std::log(lab(r.creatinine)) + 6.4 * r.etiology_flag;
}

namespace {

const std::vector<std::string> kEtiologyNames{"hcv", "alcoholic", "cryptogenic", "cholestatic", "other"};
// Level order of the emitted column (sorted, as load_csv would infer it).
const std::vector<std::string> kEtiologyLevels{"alcoholic", "cholestatic", "cryptogenic", "hcv", "other"};
const std::vector<std::string> kBloodLevels{"A", "AB", "B", "O"};
const std::vector<double> kBloodMix{0.40, 0.04, 0.11, 0.45};

// Nearest double to x rounded at `decimals` places.
double round_to(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(x * scale) / scale;
}

int draw_category(SplitMix64& rng, const std::vector<double>& probs) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
    if (u < probs[k]) return static_cast<int>(k);
    u -= probs[k];
  }
  return static_cast<int>(probs.size() - 1);
}

double truncated_normal(SplitMix64& rng, double mean, double sd, double lo, double hi) {
  for (;;) {
    const double x = rng.normal(mean, sd);
    if (x >= lo && x <= hi) return x;
  }
}

// P(event) for hazard h, drop-out rate lambda, administrative censoring
// Uniform(0, L).
double event_probability(double h, double lambda, double followup) {
  const double k = h + lambda;
  const double x = k * followup;
  const double admin = x < 1e-8 ? x / 2.0 : 1.0 + std::expm1(-x) / x;  // 1 - (1 - e^-x)/x
  return h / k * admin;
}

double mean_event_probability(const std::vector<double>& hazards, double lambda, double followup) {
  double s = 0.0;
  for (double h : hazards) s += event_probability(h, lambda, followup);
  return s / static_cast<double>(hazards.size());
}

double solve_dropout_rate(const std::vector<double>& hazards, double target_events, double followup) {
  const double at_zero = mean_event_probability(hazards, 0.0, followup);
  if (target_events > at_zero)
    throw std::invalid_argument(
        "censoring target infeasible: administrative censoring alone leaves an event fraction of " +
        std::to_string(at_zero) + ", below the requested " + std::to_string(target_events));
  double lo = 0.0;
  double hi = 1e-4;
  while (mean_event_probability(hazards, hi, followup) > target_events) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_event_probability(hazards, mid, followup) > target_events) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.n < 2) throw std::invalid_argument("simulation needs n >= 2");
  if (!(cfg.hazard_ratio > 0.0) || !(cfg.age_hazard_ratio > 0.0) || !(cfg.hcc_hazard_ratio > 0.0))
    throw std::invalid_argument("hazard ratios must be positive");
  if (!(cfg.base_hazard > 0.0)) throw std::invalid_argument("base_hazard must be positive");
  if (!(cfg.max_followup > 0.0)) throw std::invalid_argument("max_followup must be positive");
  if (!(cfg.censor_fraction > 0.0 && cfg.censor_fraction < 1.0))
    throw std::invalid_argument("censor_fraction must lie in (0, 1)");
  if (!(cfg.male_fraction >= 0.0 && cfg.male_fraction <= 1.0))
    throw std::invalid_argument("male_fraction must lie in [0, 1]");
  if (!(cfg.hcc_prevalence >= 0.0 && cfg.hcc_prevalence <= 1.0))
    throw std::invalid_argument("hcc_prevalence must lie in [0, 1]");
  if (!(cfg.age_sd > 0.0) || !(cfg.age_min < cfg.age_max))
    throw std::invalid_argument("age distribution is degenerate");
  if (cfg.etiology_mix.size() != kEtiologyNames.size())
    throw std::invalid_argument("etiology mix needs 5 probabilities");
  double total = 0.0;
  for (double p : cfg.etiology_mix) {
    if (!(p >= 0.0)) throw std::invalid_argument("etiology probabilities must be non-negative");
    total += p;
  }
  if (!(total > 0.0)) throw std::invalid_argument("etiology mix sums to zero");
}

SimConfig parse_config(std::istream& in, SimConfig base) {
  SimConfig cfg = std::move(base);
  std::map<std::string, double*> reals{
      {"meld_threshold", &cfg.meld_threshold}, {"hazard_ratio", &cfg.hazard_ratio},
      {"base_hazard", &cfg.base_hazard},       {"censor_fraction", &cfg.censor_fraction},
      {"max_followup", &cfg.max_followup},     {"male_fraction", &cfg.male_fraction},
      {"age_mean", &cfg.age_mean},             {"age_sd", &cfg.age_sd},
      {"age_min", &cfg.age_min},               {"age_max", &cfg.age_max},
      {"hcc_prevalence", &cfg.hcc_prevalence}, {"age_threshold", &cfg.age_threshold},
      {"age_hazard_ratio", &cfg.age_hazard_ratio}, {"hcc_hazard_ratio", &cfg.hcc_hazard_ratio},
  };
  for (std::size_t k = 0; k < kEtiologyNames.size(); ++k)
    reals.emplace("etiology_" + kEtiologyNames[k], &cfg.etiology_mix[k]);

  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto bad = [&] {
      return std::invalid_argument("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    };

    if (auto it = reals.find(key); it != reals.end()) {
      if (!csv::parse_double(value, *it->second)) throw bad();
    } else if (key == "n" || key == "seed") {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || ptr != value.data() + value.size()) throw bad();
      if (key == "n") cfg.n = static_cast<std::size_t>(v);
      else cfg.seed = v;
    } else if (key == "meld_from_labs" || key == "clamp_labs") {
      bool flag = false;
      if (value == "true" || value == "1") flag = true;
      else if (value != "false" && value != "0") throw bad();
      (key == "meld_from_labs" ? cfg.meld_from_labs : cfg.clamp_labs) = flag;
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

Dataset simulate_cohort(const SimConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.n;
  SplitMix64 rng = SplitMix64::stream(cfg.seed, 0);

  std::vector<int> sex(n), blood(n), etiology(n);
  std::vector<double> age(n), bmi(n), hcc(n), meld(n), bili, inr, creat;
  if (cfg.meld_from_labs) {
    bili.resize(n);
    inr.resize(n);
    creat.resize(n);
  }
  std::vector<double> hazard(n), death(n), admin(n);

  for (std::size_t i = 0; i < n; ++i) {
    sex[i] = rng.uniform() < cfg.male_fraction ? 1 : 0;
    age[i] = round_to(truncated_normal(rng, cfg.age_mean, cfg.age_sd, cfg.age_min, cfg.age_max), 1);
    blood[i] = draw_category(rng, kBloodMix);
    bmi[i] = round_to(truncated_normal(rng, 26.0, 4.5, 15.0, 50.0), 1);
    const int etio = draw_category(rng, cfg.etiology_mix);
    const std::string& etio_name = kEtiologyNames[static_cast<std::size_t>(etio)];
    etiology[i] = static_cast<int>(
        std::find(kEtiologyLevels.begin(), kEtiologyLevels.end(), etio_name) - kEtiologyLevels.begin());
    hcc[i] = rng.uniform() < cfg.hcc_prevalence ? 1.0 : 0.0;

    if (cfg.meld_from_labs) {
      bili[i] = round_to(std::exp(rng.normal(std::log(2.5), 0.9)), 2);
      inr[i] = round_to(std::exp(rng.normal(std::log(1.4), 0.25)), 2);
      creat[i] = round_to(std::exp(rng.normal(std::log(1.0), 0.4)), 2);
      bili[i] = std::max(bili[i], 0.01);
      inr[i] = std::max(inr[i], 0.01);
      creat[i] = std::max(creat[i], 0.01);
      const int flag = (etio_name == "cholestatic" || etio_name == "alcoholic") ? 0 : 1;
      meld[i] = meld_score({bili[i], inr[i], creat[i], flag}, cfg.clamp_labs);
    } else {
      double x = 0.0;
      do {
        x = 6.0 + std::exp(rng.normal(std::log(9.5), 0.55));
      } while (x > 40.0);
      meld[i] = round_to(x, 1);
    }

    double h = cfg.base_hazard;
    if (meld[i] >= cfg.meld_threshold) h *= cfg.hazard_ratio;
    if (age[i] > cfg.age_threshold) h *= cfg.age_hazard_ratio;
    if (hcc[i] == 1.0) h *= cfg.hcc_hazard_ratio;
    hazard[i] = h;
    death[i] = rng.exponential(h);
    admin[i] = rng.uniform() * cfg.max_followup;
  }

  const double dropout = solve_dropout_rate(hazard, 1.0 - cfg.censor_fraction, cfg.max_followup);
  SplitMix64 drop_rng = SplitMix64::stream(cfg.seed, 1);
  std::vector<Survival> response(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double leave = drop_rng.exponential(dropout);
    const double censor = std::min(admin[i], leave);
    const bool event = death[i] <= censor;
    const double t = event ? death[i] : censor;
    response[i] = {std::max(1.0, std::ceil(t)), event};
  }

  std::vector<Covariate> cols;
  cols.push_back(Covariate::categorical("sex", {"F", "M"}, sex));
  cols.push_back(Covariate::numeric("age", age));
  cols.push_back(Covariate::categorical("blood_type", kBloodLevels, blood));
  cols.push_back(Covariate::numeric("bmi", bmi));
  cols.push_back(Covariate::categorical("etiology", kEtiologyLevels, etiology));
  cols.push_back(Covariate::numeric("hcc", hcc));
  cols.push_back(Covariate::numeric("meld", meld));
  if (cfg.meld_from_labs) {
    cols.push_back(Covariate::numeric("bilirubin", bili));
    cols.push_back(Covariate::numeric("inr", inr));
    cols.push_back(Covariate::numeric("creatinine", creat));
  }
  return Dataset(std::move(cols), std::move(response));
}

namespace {

// Linear-interpolation quantile (type 7).
double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

CohortSummary summarize(const Dataset& cohort) {
  CohortSummary s;
  s.n = cohort.n();
  if (s.n == 0) return s;
  double events = 0.0;
  for (const Survival& r : cohort.response()) events += r.event ? 1.0 : 0.0;
  s.event_fraction = events / static_cast<double>(s.n);

  if (auto j = cohort.find("sex")) {
    const Covariate& c = cohort.covariate(*j);
    if (auto male = c.level_index("M"))
      s.male_fraction = static_cast<double>(std::count(c.codes().begin(), c.codes().end(), *male)) /
                        static_cast<double>(s.n);
  }
  if (auto j = cohort.find("age"); j && cohort.covariate(*j).is_numeric()) {
    const auto& a = cohort.covariate(*j).values();
    s.age_mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(s.n);
    double ss = 0.0;
    for (double x : a) ss += (x - s.age_mean) * (x - s.age_mean);
    s.age_sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
  }
  if (auto j = cohort.find("meld"); j && cohort.covariate(*j).is_numeric()) {
    const auto& m = cohort.covariate(*j).values();
    s.meld_q1 = quantile(m, 0.25);
    s.meld_median = quantile(m, 0.5);
    s.meld_q3 = quantile(m, 0.75);
  }
  return s;
}

}  // namespace ctree::meld

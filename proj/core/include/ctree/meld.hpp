#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctree/data.hpp"

namespace ctree::meld {

struct MeldRecord {
  double bilirubin = 1.0;   // mg/dL
  double inr = 1.0;
  double creatinine = 1.0;  // mg/dL
  int etiology_flag = 0;    // 0 cholestatic or alcoholic, 1 otherwise
};

// 3.8 ln(bilirubin) + 11.2 ln(INR) + 9.6 ln(creatinine) + 6.4 etiology.
// With clamp_labs, lab values below 1.0 are raised to 1.0 first. Throws
// std::invalid_argument for non-positive labs or a flag outside {0, 1}.
double meld_score(const MeldRecord& r, bool clamp_labs = false);

// Synthetic waiting-list cohort.
//
// Covariates: sex (F/M), age (years), blood_type (A/AB/B/O), bmi,
// etiology (alcoholic/cholestatic/cryptogenic/hcv/other), hcc (0/1) and
// meld; with meld_from_labs also bilirubin, inr and creatinine.
//
// MELD is drawn as 6 + LogNormal(ln 9.5, 0.55), redrawn until <= 40, and
// rounded to one decimal (median about 15.5). In lab mode it is instead
// computed by meld_score from log-normal bilirubin, INR and creatinine.
//
// Survival is exponential with hazard
//   base_hazard * hazard_ratio^[meld >= meld_threshold]
//               * age_hazard_ratio^[age > age_threshold]
//               * hcc_hazard_ratio^[hcc = 1].
// Censoring is the earlier of administrative censoring, Uniform(0,
// max_followup) to mimic staggered entry, and an exponential drop-out
// (transplant or delisting) whose rate is solved so that the expected
// censored fraction equals censor_fraction. Times are rounded up to whole
// days.
struct SimConfig {
  std::size_t n = 529;
  std::uint64_t seed = 1;
  double meld_threshold = 16.0;
  double hazard_ratio = 3.0;
  double base_hazard = 4e-4;  // deaths per day below the threshold
  double censor_fraction = 0.64;
  double max_followup = 3200.0;  // days

  double male_fraction = 0.61;
  double age_mean = 51.0;
  double age_sd = 13.0;
  double age_min = 18.0;
  double age_max = 75.0;
  // hcv, alcoholic, cryptogenic, cholestatic, other
  std::vector<double> etiology_mix{0.47, 0.17, 0.10, 0.12, 0.14};
  double hcc_prevalence = 0.15;

  double age_threshold = 33.2;
  double age_hazard_ratio = 1.0;
  double hcc_hazard_ratio = 1.0;

  bool meld_from_labs = false;
  bool clamp_labs = false;
};

// Throws std::invalid_argument for n < 2, non-positive rates or ratios,
// fractions outside (0, 1), or a malformed etiology mix.
void validate(const SimConfig& cfg);

// Reads flat `key = value` lines ('#' starts a comment) on top of `base`.
// Keys are the SimConfig field names; the etiology mix uses etiology_hcv,
// etiology_alcoholic, etiology_cryptogenic, etiology_cholestatic and
// etiology_other. Throws std::invalid_argument on unknown keys or bad values.
SimConfig parse_config(std::istream& in, SimConfig base = {});

// Throws std::invalid_argument on an invalid config or when the censoring
// target is unreachable (fewer censored than administrative censoring alone
// produces).
Dataset simulate_cohort(const SimConfig& cfg);

struct CohortSummary {
  std::size_t n = 0;
  double event_fraction = 0.0;
  double male_fraction = 0.0;
  double age_mean = 0.0;
  double age_sd = 0.0;
  double meld_q1 = 0.0;
  double meld_median = 0.0;
  double meld_q3 = 0.0;
};

CohortSummary summarize(const Dataset& cohort);

}  // namespace ctree::meld

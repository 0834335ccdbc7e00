#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace ctree {

enum class CovariateKind { Numeric, Categorical, Ordinal };

const char* to_string(CovariateKind kind);

// One covariate column. Numeric columns hold finite reals; categorical and
// ordinal columns hold level indices into `levels()`. Ordinal columns are
// encoded by their level index 0..K-1 and split with `<=`.
class Covariate {
 public:
  static Covariate numeric(std::string name, std::vector<double> values);
  static Covariate categorical(std::string name, std::vector<std::string> levels,
                               std::vector<int> codes);
  static Covariate ordinal(std::string name, std::vector<std::string> levels,
                           std::vector<int> codes);

  const std::string& name() const { return name_; }
  CovariateKind kind() const { return kind_; }
  bool is_numeric() const { return kind_ == CovariateKind::Numeric; }
  std::size_t size() const { return is_numeric() ? values_.size() : codes_.size(); }

  // Empty for numeric covariates.
  const std::vector<std::string>& levels() const { return levels_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<int>& codes() const { return codes_; }

  // Numeric value, or the level index for categorical/ordinal columns.
  double score(std::size_t i) const {
    return is_numeric() ? values_[i] : static_cast<double>(codes_[i]);
  }
  std::optional<int> level_index(std::string_view level) const;

  // Row k of the result is row rows[k] of this; indices may repeat.
  Covariate take(std::span<const std::size_t> rows) const;

  friend bool operator==(const Covariate&, const Covariate&) = default;

 private:
  Covariate() = default;

  std::string name_;
  CovariateKind kind_ = CovariateKind::Numeric;
  std::vector<std::string> levels_;
  std::vector<double> values_;
  std::vector<int> codes_;
};

// Right-censored survival outcome; event == false means censored at `time`.
struct Survival {
  double time = 0.0;
  bool event = false;

  friend bool operator==(const Survival&, const Survival&) = default;
};

using CaseWeights = std::vector<double>;

// Throws std::invalid_argument on negative or non-finite weights.
void validate_weights(std::span<const double> w);

// The learning sample: covariate columns, survival response and case
// weights, all of length n.
class Dataset {
 public:
  Dataset(std::vector<Covariate> covariates, std::vector<Survival> response);
  Dataset(std::vector<Covariate> covariates, std::vector<Survival> response,
          CaseWeights weights);

  std::size_t n() const { return response_.size(); }
  std::size_t m() const { return covariates_.size(); }

  const std::vector<Covariate>& covariates() const { return covariates_; }
  const Covariate& covariate(std::size_t j) const { return covariates_.at(j); }
  const std::vector<Survival>& response() const { return response_; }
  const CaseWeights& weights() const { return weights_; }

  std::optional<std::size_t> find(std::string_view name) const;

  // Keep only the named covariates, in the given order.
  Dataset select(const std::vector<std::string>& names) const;
  // Row k of the result is row rows[k] of this; indices may repeat or be
  // left out.
  Dataset take(std::span<const std::size_t> rows) const;
  // take() restricted to a reordering of all n rows.
  Dataset permuted(std::span<const std::size_t> order) const;
  Dataset with_weights(CaseWeights weights) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Covariate> covariates_;
  std::vector<Survival> response_;
  CaseWeights weights_;
};

// Column roles for CSV ingestion. Covariates are numeric unless listed in
// `categorical` (levels inferred as the sorted distinct strings), in
// `levels` (explicit level order) or in `ordinal` (explicit ordered levels).
struct ColumnSchema {
  std::string time;
  std::string event;
  std::vector<std::string> covariates;
  std::set<std::string> categorical;
  std::map<std::string, std::vector<std::string>> levels;
  std::map<std::string, std::vector<std::string>> ordinal;
  std::optional<std::string> weights;
};

struct LoadResult {
  Dataset data;
  std::size_t raw_rows = 0;
  std::size_t dropped = 0;
};

// Listwise deletion: rows with a missing ("" or "NA") or unparseable value
// in any declared column are dropped and counted. Throws DataError for a
// missing file, absent columns, event codes outside {0,1,true,false},
// negative times or weights, undeclared categorical levels, or when no
// rows remain.
LoadResult load_csv(const std::string& path, const ColumnSchema& schema);
LoadResult parse_csv_dataset(std::string_view text, const ColumnSchema& schema);

// Writes time, event, covariates (and a weight column when any weight is
// not 1) in the dialect read by load_csv.
void write_csv(std::ostream& out, const Dataset& ds, const std::string& time_column = "time",
               const std::string& event_column = "event",
               const std::string& weight_column = "weight");

// Binary split predicates. A threshold sends x <= cutoff left; a level set
// sends the listed levels left and every other declared level right.
struct Threshold {
  double cutoff = 0.0;
  friend bool operator==(const Threshold&, const Threshold&) = default;
};
struct LevelSet {
  std::vector<std::string> left;
  std::vector<std::string> right;
  friend bool operator==(const LevelSet&, const LevelSet&) = default;
};
struct Split {
  std::string covariate;
  std::variant<Threshold, LevelSet> rule;
  friend bool operator==(const Split&, const Split&) = default;
};

// left_i = w_i where the predicate holds, else 0; right = w - left.
std::pair<CaseWeights, CaseWeights> subset_weights(const Dataset& ds,
                                                   std::span<const double> w,
                                                   const Split& split);

// Covariate values for routing a single observation through a tree.
using CovariateValue = std::variant<double, std::string>;
using Observation = std::unordered_map<std::string, CovariateValue>;

Observation observation(const Dataset& ds, std::size_t row);

}  // namespace ctree

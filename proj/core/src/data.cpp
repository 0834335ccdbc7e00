#include "ctree/data.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "ctree/csv.hpp"
#include "ctree/error.hpp"

namespace ctree {

const char* to_string(CovariateKind kind) {
  switch (kind) {
    case CovariateKind::Numeric: return "numeric";
    case CovariateKind::Categorical: return "categorical";
    case CovariateKind::Ordinal: return "ordinal";
  }
  return "unknown";
}

namespace {

void check_levels(const std::string& name, const std::vector<std::string>& levels,
                  const std::vector<int>& codes) {
  if (levels.size() < 2)
    throw std::invalid_argument("covariate '" + name + "' needs at least 2 levels");
  std::vector<std::string> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("covariate '" + name + "' has duplicate levels");
  const int k = static_cast<int>(levels.size());
  for (int c : codes)
    if (c < 0 || c >= k)
      throw std::invalid_argument("covariate '" + name + "' has a level index out of range");
}

}  // namespace

Covariate Covariate::numeric(std::string name, std::vector<double> values) {
  for (double v : values)
    if (!std::isfinite(v))
      throw std::invalid_argument("covariate '" + name + "' has a non-finite value");
  Covariate c;
  c.name_ = std::move(name);
  c.kind_ = CovariateKind::Numeric;
  c.values_ = std::move(values);
  return c;
}

Covariate Covariate::categorical(std::string name, std::vector<std::string> levels,
                                 std::vector<int> codes) {
  check_levels(name, levels, codes);
  Covariate c;
  c.name_ = std::move(name);
  c.kind_ = CovariateKind::Categorical;
  c.levels_ = std::move(levels);
  c.codes_ = std::move(codes);
  return c;
}

Covariate Covariate::ordinal(std::string name, std::vector<std::string> levels,
                             std::vector<int> codes) {
  Covariate c = categorical(std::move(name), std::move(levels), std::move(codes));
  c.kind_ = CovariateKind::Ordinal;
  return c;
}

std::optional<int> Covariate::level_index(std::string_view level) const {
  auto it = std::find(levels_.begin(), levels_.end(), level);
  if (it == levels_.end()) return std::nullopt;
  return static_cast<int>(it - levels_.begin());
}

Covariate Covariate::take(std::span<const std::size_t> rows) const {
  Covariate c = *this;
  if (is_numeric()) {
    c.values_.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) c.values_[k] = values_.at(rows[k]);
  } else {
    c.codes_.resize(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) c.codes_[k] = codes_.at(rows[k]);
  }
  return c;
}

void validate_weights(std::span<const double> w) {
  for (double v : w)
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("case weights must be finite and non-negative");
}

Dataset::Dataset(std::vector<Covariate> covariates, std::vector<Survival> response)
    : Dataset(std::move(covariates), std::move(response), {}) {}

Dataset::Dataset(std::vector<Covariate> covariates, std::vector<Survival> response,
                 CaseWeights weights)
    : covariates_(std::move(covariates)),
      response_(std::move(response)),
      weights_(std::move(weights)) {
  if (weights_.empty()) weights_.assign(response_.size(), 1.0);
  if (weights_.size() != response_.size())
    throw std::invalid_argument("weights and response differ in length");
  validate_weights(weights_);
  for (const Survival& s : response_)
    if (!std::isfinite(s.time) || s.time < 0.0)
      throw std::invalid_argument("survival times must be finite and non-negative");
  std::set<std::string> names;
  for (const Covariate& c : covariates_) {
    if (c.size() != response_.size())
      throw std::invalid_argument("covariate '" + c.name() + "' differs in length from the response");
    if (!names.insert(c.name()).second)
      throw std::invalid_argument("duplicate covariate name '" + c.name() + "'");
  }
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
  for (std::size_t j = 0; j < covariates_.size(); ++j)
    if (covariates_[j].name() == name) return j;
  return std::nullopt;
}

Dataset Dataset::select(const std::vector<std::string>& names) const {
  std::vector<Covariate> cols;
  cols.reserve(names.size());
  for (const auto& name : names) {
    auto j = find(name);
    if (!j) throw std::invalid_argument("unknown covariate '" + name + "'");
    cols.push_back(covariates_[*j]);
  }
  return Dataset(std::move(cols), response_, weights_);
}

Dataset Dataset::take(std::span<const std::size_t> rows) const {
  std::vector<Covariate> cols;
  cols.reserve(m());
  for (const Covariate& c : covariates_) cols.push_back(c.take(rows));
  std::vector<Survival> resp(rows.size());
  CaseWeights w(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    resp[k] = response_.at(rows[k]);
    w[k] = weights_.at(rows[k]);
  }
  return Dataset(std::move(cols), std::move(resp), std::move(w));
}

Dataset Dataset::permuted(std::span<const std::size_t> order) const {
  if (order.size() != n()) throw std::invalid_argument("permutation length mismatch");
  return take(order);
}

Dataset Dataset::with_weights(CaseWeights weights) const {
  return Dataset(covariates_, response_, std::move(weights));
}

namespace {

bool is_missing(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s.empty() || s == "NA";
}

std::string trimmed(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return std::string(s);
}

std::optional<bool> parse_event(std::string_view raw) {
  const std::string s = trimmed(raw);
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  return std::nullopt;
}

struct ColumnPlan {
  std::string name;
  std::size_t index = 0;
  CovariateKind kind = CovariateKind::Numeric;
  std::vector<std::string> levels;  // declared; empty means infer
};

}  // namespace

LoadResult parse_csv_dataset(std::string_view text, const ColumnSchema& schema) {
  if (schema.time.empty() || schema.event.empty())
    throw DataError("schema must name a time column and an event column");
  if (schema.covariates.empty()) throw DataError("schema must name at least one covariate");

  std::vector<csv::Row> rows = csv::parse(text);
  if (rows.empty()) throw DataError("csv has no header row");
  const csv::Row header = rows.front();

  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t time_col = column(schema.time);
  const std::size_t event_col = column(schema.event);
  std::optional<std::size_t> weight_col;
  if (schema.weights) weight_col = column(*schema.weights);

  std::vector<ColumnPlan> plan;
  for (const auto& name : schema.covariates) {
    ColumnPlan p{name, column(name), CovariateKind::Numeric, {}};
    if (auto it = schema.ordinal.find(name); it != schema.ordinal.end()) {
      p.kind = CovariateKind::Ordinal;
      p.levels = it->second;
    } else if (auto lv = schema.levels.find(name); lv != schema.levels.end()) {
      p.kind = CovariateKind::Categorical;
      p.levels = lv->second;
    } else if (schema.categorical.count(name)) {
      p.kind = CovariateKind::Categorical;
    }
    if (p.kind == CovariateKind::Ordinal && p.levels.empty())
      throw DataError("ordinal covariate '" + name + "' needs declared levels");
    plan.push_back(std::move(p));
  }

  LoadResult result{Dataset({}, {}), 0, 0};
  std::vector<std::vector<double>> numeric(plan.size());
  std::vector<std::vector<std::string>> labels(plan.size());
  std::vector<Survival> response;
  CaseWeights weights;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    ++result.raw_rows;
    if (row.size() != header.size())
      throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                      " fields, header has " + std::to_string(header.size()));

    bool drop = false;
    double t = 0.0;
    if (is_missing(row[time_col]) || !csv::parse_double(row[time_col], t)) drop = true;
    else if (t < 0.0)
      throw DataError("row " + std::to_string(r + 1) + ": negative survival time");

    bool ev = false;
    if (is_missing(row[event_col])) {
      drop = true;
    } else if (auto e = parse_event(row[event_col])) {
      ev = *e;
    } else {
      throw DataError("row " + std::to_string(r + 1) + ": event value '" + row[event_col] +
                      "' is not one of 0, 1, true, false");
    }

    double wt = 1.0;
    if (weight_col) {
      if (is_missing(row[*weight_col]) || !csv::parse_double(row[*weight_col], wt)) drop = true;
      else if (wt < 0.0)
        throw DataError("row " + std::to_string(r + 1) + ": negative case weight");
    }

    std::vector<double> nums(plan.size(), 0.0);
    std::vector<std::string> labs(plan.size());
    for (std::size_t j = 0; j < plan.size() && !drop; ++j) {
      const std::string& cell = row[plan[j].index];
      if (is_missing(cell)) {
        drop = true;
      } else if (plan[j].kind == CovariateKind::Numeric) {
        if (!csv::parse_double(cell, nums[j])) drop = true;
      } else {
        labs[j] = trimmed(cell);
        if (!plan[j].levels.empty() &&
            std::find(plan[j].levels.begin(), plan[j].levels.end(), labs[j]) == plan[j].levels.end())
          throw DataError("row " + std::to_string(r + 1) + ": level '" + labs[j] +
                          "' is not declared for covariate '" + plan[j].name + "'");
      }
    }
    if (drop) {
      ++result.dropped;
      continue;
    }
    response.push_back({t, ev});
    weights.push_back(wt);
    for (std::size_t j = 0; j < plan.size(); ++j) {
      if (plan[j].kind == CovariateKind::Numeric) numeric[j].push_back(nums[j]);
      else labels[j].push_back(std::move(labs[j]));
    }
  }

  if (response.empty()) throw DataError("no complete rows remain after excluding missing values");

  std::vector<Covariate> cols;
  cols.reserve(plan.size());
  for (std::size_t j = 0; j < plan.size(); ++j) {
    const ColumnPlan& p = plan[j];
    if (p.kind == CovariateKind::Numeric) {
      cols.push_back(Covariate::numeric(p.name, std::move(numeric[j])));
      continue;
    }
    std::vector<std::string> levels = p.levels;
    if (levels.empty()) {
      std::set<std::string> distinct(labels[j].begin(), labels[j].end());
      levels.assign(distinct.begin(), distinct.end());
    }
    if (levels.size() < 2)
      throw DataError("categorical covariate '" + p.name + "' has fewer than 2 levels");
    std::vector<int> codes;
    codes.reserve(labels[j].size());
    for (const auto& l : labels[j])
      codes.push_back(static_cast<int>(std::find(levels.begin(), levels.end(), l) - levels.begin()));
    try {
      cols.push_back(p.kind == CovariateKind::Ordinal
                         ? Covariate::ordinal(p.name, std::move(levels), std::move(codes))
                         : Covariate::categorical(p.name, std::move(levels), std::move(codes)));
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what());
    }
  }

  try {
    result.data = Dataset(std::move(cols), std::move(response), std::move(weights));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return result;
}

LoadResult load_csv(const std::string& path, const ColumnSchema& schema) {
  return parse_csv_dataset(csv::read_file(path), schema);
}

void write_csv(std::ostream& out, const Dataset& ds, const std::string& time_column,
               const std::string& event_column, const std::string& weight_column) {
  const bool write_weights =
      std::any_of(ds.weights().begin(), ds.weights().end(), [](double w) { return w != 1.0; });
  csv::Row header{time_column, event_column};
  for (const Covariate& c : ds.covariates()) header.push_back(c.name());
  if (write_weights) header.push_back(weight_column);
  csv::write_row(out, header);

  csv::Row row;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    row.clear();
    row.push_back(csv::format_double(ds.response()[i].time));
    row.push_back(ds.response()[i].event ? "1" : "0");
    for (const Covariate& c : ds.covariates()) {
      if (c.is_numeric()) row.push_back(csv::format_double(c.values()[i]));
      else row.push_back(c.levels()[c.codes()[i]]);
    }
    if (write_weights) row.push_back(csv::format_double(ds.weights()[i]));
    csv::write_row(out, row);
  }
}

std::pair<CaseWeights, CaseWeights> subset_weights(const Dataset& ds, std::span<const double> w,
                                                   const Split& split) {
  if (w.size() != ds.n()) throw std::invalid_argument("weight vector length differs from n");
  auto j = ds.find(split.covariate);
  if (!j) throw std::invalid_argument("split references unknown covariate '" + split.covariate + "'");
  const Covariate& cov = ds.covariate(*j);

  std::vector<char> goes_left(ds.n(), 0);
  if (const auto* t = std::get_if<Threshold>(&split.rule)) {
    if (!cov.is_numeric())
      throw std::invalid_argument("threshold split on non-numeric covariate '" + cov.name() + "'");
    for (std::size_t i = 0; i < ds.n(); ++i) goes_left[i] = cov.values()[i] <= t->cutoff;
  } else {
    const auto& set = std::get<LevelSet>(split.rule);
    if (cov.is_numeric())
      throw std::invalid_argument("level split on numeric covariate '" + cov.name() + "'");
    std::vector<char> left_level(cov.levels().size(), 0);
    for (const auto& l : set.left) {
      auto k = cov.level_index(l);
      if (!k) throw std::invalid_argument("split level '" + l + "' unknown for '" + cov.name() + "'");
      left_level[*k] = 1;
    }
    for (std::size_t i = 0; i < ds.n(); ++i) goes_left[i] = left_level[cov.codes()[i]];
  }

  CaseWeights left(w.size(), 0.0), right(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    left[i] = goes_left[i] ? w[i] : 0.0;
    right[i] = w[i] - left[i];
  }
  return {std::move(left), std::move(right)};
}

Observation observation(const Dataset& ds, std::size_t row) {
  Observation obs;
  for (const Covariate& c : ds.covariates()) {
    if (c.is_numeric()) obs.emplace(c.name(), c.values().at(row));
    else obs.emplace(c.name(), c.levels().at(c.codes().at(row)));
  }
  return obs;
}

}  // namespace ctree

#include "ctree/cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ctree/cli/tree_document.hpp"
#include "ctree/csv.hpp"
#include "ctree/error.hpp"
#include "ctree/km.hpp"
#include "ctree/meld.hpp"
#include "ctree/partition.hpp"

namespace ctree::cli {

namespace fs = std::filesystem;

namespace {

// Raised for flag values CLI11 accepts syntactically but we reject.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

// "name=a|b|c" -> (name, [a, b, c])
std::pair<std::string, std::vector<std::string>> parse_level_decl(const std::string& decl) {
  const auto eq = decl.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError("level declaration '" + decl + "' must look like name=A|B|C");
  auto levels = split_list(decl.substr(eq + 1), '|');
  if (levels.size() < 2) throw UsageError("level declaration '" + decl + "' needs at least two levels");
  return {decl.substr(0, eq), std::move(levels)};
}

TestSpec parse_test_spec(const std::string& s) {
  TestSpec spec;
  if (s == "asymptotic") return spec;
  if (s == "exact") {
    spec.method = TestMethod::Exact;
    return spec;
  }
  const auto parts = split_list(s, ':');
  if (parts.size() == 3 && parts[0] == "mc") {
    try {
      std::size_t used = 0;
      const long b = std::stol(parts[1], &used);
      if (used != parts[1].size() || b < 1) throw std::invalid_argument("B");
      const unsigned long long seed = std::stoull(parts[2], &used);
      if (used != parts[2].size() || parts[2].front() == '-') throw std::invalid_argument("seed");
      spec.method = TestMethod::MonteCarlo;
      spec.replicates = static_cast<int>(b);
      spec.seed = seed;
      return spec;
    } catch (const std::exception&) {
    }
  }
  throw UsageError("--test must be asymptotic, exact or mc:B:seed (got '" + s + "')");
}

// Writes to a sibling temporary file and renames it into place.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path.string());
  }
}

TreeDocument read_document(const std::string& path) { return parse_document(csv::read_file(path)); }

// Survival response and leaf assignment of every data row, or a list of
// row-level errors.
struct Routed {
  std::vector<int> leaf;
  std::vector<std::string> errors;
};

Routed route_rows(const TreeDocument& doc, const std::vector<csv::Row>& rows) {
  Routed r;
  const csv::Row& header = rows.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col.emplace(header[k], k);

  for (std::size_t i = 1; i < rows.size(); ++i) {
    const csv::Row& row = rows[i];
    const std::size_t index = i - 1;
    if (row.size() != header.size()) {
      r.errors.push_back("row " + std::to_string(index) + ": field count differs from header");
      r.leaf.push_back(0);
      continue;
    }
    Observation obs;
    for (const CovariateInfo& c : doc.tree.covariates()) {
      auto it = col.find(c.name);
      if (it == col.end()) continue;
      const std::string& cell = row[it->second];
      if (cell.empty() || cell == "NA") continue;
      obs.emplace(c.name, cell);
    }
    try {
      r.leaf.push_back(doc.tree.predict_node(obs));
    } catch (const std::invalid_argument& e) {
      r.errors.push_back("row " + std::to_string(index) + ": " + e.what());
      r.leaf.push_back(0);
    }
  }
  return r;
}

std::vector<csv::Row> read_rows(const std::string& path) {
  std::vector<csv::Row> rows = csv::parse(csv::read_file(path));
  if (rows.empty()) throw DataError(path + ": no header row");
  // Drop blank lines.
  std::erase_if(rows, [](const csv::Row& r) { return r.size() == 1 && r[0].empty(); });
  return rows;
}

int report_row_errors(const std::vector<std::string>& errors, std::ostream& err) {
  for (const auto& e : errors) err << "error: " << e << '\n';
  err << errors.size() << " row(s) could not be routed; no output written\n";
  return kDataError;
}

// --- fit ---------------------------------------------------------------

struct FitArgs {
  std::string data, time, event, covariates, categorical, weights, test = "asymptotic", out;
  std::vector<std::string> levels, ordered;
  double alpha = 0.05;
  double minsplit = 20.0;
  double minbucket = 7.0;
  int max_depth = -1;
  bool quiet = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  ColumnSchema schema;
  schema.time = a.time;
  schema.event = a.event;
  schema.covariates = split_list(a.covariates, ',');
  if (schema.covariates.empty()) throw UsageError("--covariates must name at least one column");
  for (const auto& c : split_list(a.categorical, ',')) schema.categorical.insert(c);
  for (const auto& d : a.levels) schema.levels.insert(parse_level_decl(d));
  for (const auto& d : a.ordered) schema.ordinal.insert(parse_level_decl(d));
  if (!a.weights.empty()) schema.weights = a.weights;

  FitConfig cfg;
  cfg.alpha = a.alpha;
  cfg.minsplit = a.minsplit;
  cfg.minbucket = a.minbucket;
  if (a.max_depth >= 0) cfg.max_depth = a.max_depth;
  cfg.test = parse_test_spec(a.test);
  try {
    validate(cfg);
  } catch (const FitError& e) {
    throw UsageError(e.what());
  }

  const std::string bytes = csv::read_file(a.data);
  LoadResult loaded = parse_csv_dataset(bytes, schema);
  err << "loaded " << loaded.data.n() << " of " << loaded.raw_rows << " rows (" << loaded.dropped
      << " dropped for missing values)\n";

  Tree tree = fit(loaded.data, cfg);
  TreeDocument doc{kFormatVersion, cfg, a.time, a.event, std::move(tree), {}};
  doc.provenance.input_hash = fnv1a64_hex(bytes);
  if (cfg.test.method == TestMethod::MonteCarlo) doc.provenance.seed = cfg.test.seed;

  write_atomic(a.out, serialize(doc));
  if (!a.quiet) out << render_text(doc);
  return kOk;
}

// --- predict -----------------------------------------------------------

int cmd_predict(const std::string& tree_path, const std::string& data_path, const std::string& out_path,
                std::ostream& err) {
  const TreeDocument doc = read_document(tree_path);
  const auto rows = read_rows(data_path);
  const Routed routed = route_rows(doc, rows);
  if (!routed.errors.empty()) return report_row_errors(routed.errors, err);

  std::ostringstream csv_out;
  csv::write_row(csv_out, {"row", "leaf", "median"});
  for (std::size_t i = 0; i < routed.leaf.size(); ++i) {
    const TreeNode& leaf = doc.tree.node(routed.leaf[i]);
    csv::write_row(csv_out, {std::to_string(i), std::to_string(leaf.id),
                             leaf.km_median ? csv::format_double(*leaf.km_median) : ""});
  }
  write_atomic(out_path, csv_out.str());
  return kOk;
}

// --- km ----------------------------------------------------------------

int cmd_km(const std::string& tree_path, const std::string& data_path, const std::string& out_dir,
           std::ostream& out, std::ostream& err) {
  const TreeDocument doc = read_document(tree_path);
  const auto rows = read_rows(data_path);
  Routed routed = route_rows(doc, rows);

  const csv::Row& header = rows.front();
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("column '" + name + "' not found in " + data_path);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t tcol = column(doc.time_column);
  const std::size_t ecol = column(doc.event_column);

  std::vector<Survival> response(routed.leaf.size());
  for (std::size_t i = 0; i < routed.leaf.size(); ++i) {
    const csv::Row& row = rows[i + 1];
    if (row.size() != header.size()) continue;  // already reported by route_rows
    double t = 0.0;
    if (!csv::parse_double(row[tcol], t) || t < 0.0) {
      routed.errors.push_back("row " + std::to_string(i) + ": invalid survival time");
      continue;
    }
    const std::string& e = row[ecol];
    if (e != "0" && e != "1" && e != "true" && e != "false") {
      routed.errors.push_back("row " + std::to_string(i) + ": invalid event value '" + e + "'");
      continue;
    }
    response[i] = {t, e == "1" || e == "true"};
  }
  if (!routed.errors.empty()) return report_row_errors(routed.errors, err);

  std::vector<std::pair<fs::path, std::string>> files;
  for (int id : doc.tree.leaf_ids()) {
    CaseWeights w(response.size(), 0.0);
    for (std::size_t i = 0; i < response.size(); ++i)
      if (routed.leaf[i] == id) w[i] = 1.0;
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) {
      err << "warning: leaf " << id << " receives no rows; no curve written\n";
      continue;
    }
    const KMCurve curve = km_estimate(response, w);
    std::ostringstream s;
    csv::write_row(s, {"time", "survival"});
    for (const KMStep& step : curve.steps)
      csv::write_row(s, {csv::format_double(step.time), csv::format_double(step.survival)});
    files.emplace_back(fs::path(out_dir) / ("leaf_" + std::to_string(id) + ".csv"), s.str());
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir);
  for (const auto& [path, content] : files) {
    write_atomic(path, content);
    out << path.string() << '\n';
  }
  return kOk;
}

// --- export-dot --------------------------------------------------------

int cmd_export_dot(const std::string& tree_path, const std::string& out_path) {
  write_atomic(out_path, render_dot(read_document(tree_path)));
  return kOk;
}

// --- simulate ----------------------------------------------------------

int cmd_simulate(const meld::SimConfig& cfg, const std::string& out_path, std::ostream& out) {
  const Dataset cohort = meld::simulate_cohort(cfg);
  std::ostringstream s;
  write_csv(s, cohort);
  write_atomic(out_path, s.str());

  const meld::CohortSummary sum = meld::summarize(cohort);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "n = %zu\nevent fraction = %.4f\nmale fraction = %.4f\nage = %.2f +- %.2f\n"
                "MELD quartiles = %.2f / %.2f / %.2f\n",
                sum.n, sum.event_fraction, sum.male_fraction, sum.age_mean, sum.age_sd, sum.meld_q1,
                sum.meld_median, sum.meld_q3);
  out << buf;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conditional-inference survival trees with log-rank scores"};
  app.name(args.empty() ? "ctree" : args.front());
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a survival tree from a CSV file");
  fit_cmd->add_option("--data", fa.data, "Input CSV")->required();
  fit_cmd->add_option("--time", fa.time, "Survival time column")->required();
  fit_cmd->add_option("--event", fa.event, "Event indicator column (0/1/true/false)")->required();
  fit_cmd->add_option("--covariates", fa.covariates, "Comma-separated covariate columns")->required();
  fit_cmd->add_option("--categorical", fa.categorical, "Comma-separated unordered categorical columns");
  fit_cmd->add_option("--levels", fa.levels, "Categorical column with explicit level order: name=A|B|C");
  fit_cmd->add_option("--ordered", fa.ordered, "Ordinal column with ordered levels: name=low|mid|high");
  fit_cmd->add_option("--weights", fa.weights, "Case weight column");
  fit_cmd->add_option("--alpha", fa.alpha, "Significance level for the stopping rule");
  fit_cmd->add_option("--minsplit", fa.minsplit, "Minimum node weight to attempt a split");
  fit_cmd->add_option("--minbucket", fa.minbucket, "Minimum child weight");
  fit_cmd->add_option("--max-depth", fa.max_depth, "Maximum depth (unbounded when omitted)");
  fit_cmd->add_option("--test", fa.test, "asymptotic | exact | mc:B:seed");
  fit_cmd->add_option("--out", fa.out, "Output tree JSON")->required();
  fit_cmd->add_flag("--quiet", fa.quiet, "Do not print the text rendering");

  std::string tree_path, data_path, out_path, out_dir;
  auto* predict_cmd = app.add_subcommand("predict", "Route CSV rows to tree leaves");
  predict_cmd->add_option("--tree", tree_path, "Tree JSON")->required();
  predict_cmd->add_option("--data", data_path, "Input CSV")->required();
  predict_cmd->add_option("--out", out_path, "Output CSV (row, leaf, median)")->required();

  auto* dot_cmd = app.add_subcommand("export-dot", "Render a tree as a Graphviz digraph");
  dot_cmd->add_option("--tree", tree_path, "Tree JSON")->required();
  dot_cmd->add_option("--out", out_path, "Output DOT file")->required();

  auto* km_cmd = app.add_subcommand("km", "Write one Kaplan-Meier curve CSV per leaf");
  km_cmd->add_option("--tree", tree_path, "Tree JSON")->required();
  km_cmd->add_option("--data", data_path, "Input CSV")->required();
  km_cmd->add_option("--out-dir", out_dir, "Directory for leaf_<id>.csv files")->required();

  meld::SimConfig sim;
  std::string sim_config_path;
  std::size_t sim_n = sim.n;
  std::uint64_t sim_seed = sim.seed;
  double threshold = sim.meld_threshold, hr = sim.hazard_ratio, censor = sim.censor_fraction,
         base_hazard = sim.base_hazard, age_ratio = sim.age_hazard_ratio, hcc_ratio = sim.hcc_hazard_ratio;
  bool labs = false, clamp = false;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic waiting-list cohort");
  sim_cmd->add_option("--config", sim_config_path, "Flat key = value config file (flags override it)");
  auto* o_n = sim_cmd->add_option("--n", sim_n, "Cohort size")->capture_default_str();
  auto* o_seed = sim_cmd->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  auto* o_thr = sim_cmd->add_option("--threshold", threshold, "MELD hazard threshold")->capture_default_str();
  auto* o_hr = sim_cmd->add_option("--hazard-ratio", hr, "Hazard multiplier at MELD >= threshold")->capture_default_str();
  auto* o_cens = sim_cmd->add_option("--censor-frac", censor, "Target censored fraction")->capture_default_str();
  auto* o_base = sim_cmd->add_option("--base-hazard", base_hazard, "Deaths per day below the threshold")->capture_default_str();
  auto* o_age = sim_cmd->add_option("--age-effect", age_ratio, "Hazard multiplier for age > 33.2")->capture_default_str();
  auto* o_hcc = sim_cmd->add_option("--hcc-effect", hcc_ratio, "Hazard multiplier for HCC")->capture_default_str();
  auto* o_labs = sim_cmd->add_flag("--labs", labs, "Generate lab values and compute MELD from them");
  auto* o_clamp = sim_cmd->add_flag("--clamp-labs", clamp, "Clamp lab values below 1.0 (with --labs)");
  sim_cmd->add_option("--out", out_path, "Output CSV")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fa, out, err);
    if (predict_cmd->parsed()) return cmd_predict(tree_path, data_path, out_path, err);
    if (dot_cmd->parsed()) return cmd_export_dot(tree_path, out_path);
    if (km_cmd->parsed()) return cmd_km(tree_path, data_path, out_dir, out, err);
    if (sim_cmd->parsed()) {
      if (!sim_config_path.empty()) {
        std::ifstream in(sim_config_path);
        if (!in) throw UsageError("cannot open config file " + sim_config_path);
        try {
          sim = meld::parse_config(in, sim);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      if (o_n->count()) sim.n = sim_n;
      if (o_seed->count()) sim.seed = sim_seed;
      if (o_thr->count()) sim.meld_threshold = threshold;
      if (o_hr->count()) sim.hazard_ratio = hr;
      if (o_cens->count()) sim.censor_fraction = censor;
      if (o_base->count()) sim.base_hazard = base_hazard;
      if (o_age->count()) sim.age_hazard_ratio = age_ratio;
      if (o_hcc->count()) sim.hcc_hazard_ratio = hcc_ratio;
      if (o_labs->count()) sim.meld_from_labs = labs;
      if (o_clamp->count()) sim.clamp_labs = clamp;
      try {
        meld::validate(sim);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      try {
        return cmd_simulate(sim, out_path, out);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());  // infeasible censoring target
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const FitError& e) {
    err << "error: " << e.what() << '\n';
    return kFitError;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kUsageError;
}

}  // namespace ctree::cli

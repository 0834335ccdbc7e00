#include "ctree/cli/tree_document.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "ctree/csv.hpp"
#include "ctree/error.hpp"

namespace ctree::cli {

using json = nlohmann::ordered_json;

namespace {

json split_to_json(const Split& split) {
  json j;
  j["covariate"] = split.covariate;
  if (const auto* t = std::get_if<Threshold>(&split.rule)) {
    j["type"] = "threshold";
    j["cutoff"] = t->cutoff;
  } else {
    const auto& set = std::get<LevelSet>(split.rule);
    j["type"] = "levels";
    j["left"] = set.left;
    j["right"] = set.right;
  }
  return j;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

[[noreturn]] void malformed(const std::string& what) {
  throw DataError("malformed tree document: " + what);
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) malformed(std::string("missing field '") + key + "'");
  return obj.at(key);
}

double number(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_number()) malformed(std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

std::optional<double> nullable_number(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) malformed(std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

int integer(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_number_integer()) malformed(std::string("field '") + key + "' is not an integer");
  return v.get<int>();
}

std::string text(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_string()) malformed(std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

std::vector<std::string> strings(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_array()) malformed(std::string("field '") + key + "' is not an array");
  std::vector<std::string> out;
  for (const json& s : v) {
    if (!s.is_string()) malformed(std::string("field '") + key + "' holds a non-string");
    out.push_back(s.get<std::string>());
  }
  return out;
}

CovariateKind kind_from_string(const std::string& s) {
  for (CovariateKind k : {CovariateKind::Numeric, CovariateKind::Categorical, CovariateKind::Ordinal})
    if (s == to_string(k)) return k;
  malformed("unknown covariate kind '" + s + "'");
}

Split split_from_json(const json& j) {
  Split split;
  split.covariate = text(j, "covariate");
  const std::string type = text(j, "type");
  if (type == "threshold") split.rule = Threshold{number(j, "cutoff")};
  else if (type == "levels") split.rule = LevelSet{strings(j, "left"), strings(j, "right")};
  else malformed("unknown split type '" + type + "'");
  return split;
}

std::string format_p(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", p);
  return buf;
}

std::string join_levels(const std::vector<std::string>& levels) {
  std::string s = "{";
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (k) s += ", ";
    s += levels[k];
  }
  return s + "}";
}

std::string median_text(const TreeNode& nd) {
  return nd.km_median ? csv::format_double(*nd.km_median) : "NA";
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string edge_label(const Split& split, bool left) {
  if (const auto* t = std::get_if<Threshold>(&split.rule))
    return (left ? "≤ " : "> ") + csv::format_double(t->cutoff);
  const auto& set = std::get<LevelSet>(split.rule);
  return "∈ " + join_levels(left ? set.left : set.right);
}

std::string serialize(const TreeDocument& doc) {
  json j;
  j["format_version"] = doc.format_version;

  json cfg;
  cfg["alpha"] = doc.config.alpha;
  cfg["minsplit"] = doc.config.minsplit;
  cfg["minbucket"] = doc.config.minbucket;
  cfg["max_depth"] = doc.config.max_depth ? json(*doc.config.max_depth) : json(nullptr);
  json test;
  test["method"] = to_string(doc.config.test.method);
  if (doc.config.test.method == TestMethod::MonteCarlo) {
    test["replicates"] = doc.config.test.replicates;
    test["seed"] = doc.config.test.seed;
  }
  cfg["test"] = test;
  j["config"] = cfg;

  j["response"] = {{"time", doc.time_column}, {"event", doc.event_column}};

  json covs = json::array();
  for (const CovariateInfo& c : doc.tree.covariates()) {
    json cj;
    cj["name"] = c.name;
    cj["kind"] = to_string(c.kind);
    if (c.kind != CovariateKind::Numeric) cj["levels"] = c.levels;
    covs.push_back(cj);
  }
  j["covariates"] = covs;

  json nodes = json::array();
  for (const TreeNode& nd : doc.tree.nodes()) {
    json nj;
    nj["id"] = nd.id;
    nj["depth"] = nd.depth;
    nj["kind"] = nd.is_leaf() ? "leaf" : "internal";
    nj["n"] = nd.n_effective;
    nj["events"] = nd.events;
    nj["km_median"] = optional_number(nd.km_median);
    nj["p_adjusted"] = optional_number(nd.p_adjusted);
    if (nd.is_leaf()) {
      nj["stop_reason"] = to_string(nd.stop_reason);
    } else {
      nj["split"] = split_to_json(*nd.split);
      nj["children"] = {nd.left, nd.right};
    }
    nodes.push_back(nj);
  }
  j["nodes"] = nodes;

  json prov;
  prov["input_hash"] = doc.provenance.input_hash;
  prov["seed"] = doc.provenance.seed ? json(*doc.provenance.seed) : json(nullptr);
  prov["tool_version"] = doc.provenance.tool_version;
  j["provenance"] = prov;

  return j.dump(2) + "\n";
}

TreeDocument parse_document(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!j.is_object()) malformed("top level is not an object");
  const int version = integer(j, "format_version");
  if (version != kFormatVersion) malformed("unsupported format_version " + std::to_string(version));

  FitConfig cfg;
  const json& cj = field(j, "config");
  cfg.alpha = number(cj, "alpha");
  cfg.minsplit = number(cj, "minsplit");
  cfg.minbucket = number(cj, "minbucket");
  if (!field(cj, "max_depth").is_null()) cfg.max_depth = integer(cj, "max_depth");
  const json& tj = field(cj, "test");
  const std::string method = text(tj, "method");
  if (method == "asymptotic") {
    cfg.test.method = TestMethod::Asymptotic;
  } else if (method == "exact") {
    cfg.test.method = TestMethod::Exact;
  } else if (method == "montecarlo") {
    cfg.test.method = TestMethod::MonteCarlo;
    cfg.test.replicates = integer(tj, "replicates");
    const json& seed = field(tj, "seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
      malformed("test seed is not a non-negative integer");
    cfg.test.seed = seed.get<std::uint64_t>();
  } else {
    malformed("unknown test method '" + method + "'");
  }

  const json& rj = field(j, "response");
  std::string time_col = text(rj, "time");
  std::string event_col = text(rj, "event");

  std::vector<CovariateInfo> covs;
  const json& cov_list = field(j, "covariates");
  if (!cov_list.is_array()) malformed("'covariates' is not an array");
  for (const json& c : cov_list) {
    CovariateInfo info{text(c, "name"), kind_from_string(text(c, "kind")), {}};
    if (info.kind != CovariateKind::Numeric) info.levels = strings(c, "levels");
    covs.push_back(std::move(info));
  }

  std::vector<TreeNode> nodes;
  const json& node_list = field(j, "nodes");
  if (!node_list.is_array() || node_list.empty()) malformed("'nodes' is not a non-empty array");
  for (const json& nj : node_list) {
    TreeNode nd;
    nd.id = integer(nj, "id");
    nd.depth = integer(nj, "depth");
    nd.n_effective = number(nj, "n");
    nd.events = number(nj, "events");
    nd.km_median = nullable_number(nj, "km_median");
    nd.p_adjusted = nullable_number(nj, "p_adjusted");
    const std::string kind = text(nj, "kind");
    if (kind == "leaf") {
      auto reason = stop_reason_from_string(text(nj, "stop_reason"));
      if (!reason) malformed("unknown stop_reason in node " + std::to_string(nd.id));
      nd.stop_reason = *reason;
    } else if (kind == "internal") {
      nd.split = split_from_json(field(nj, "split"));
      const json& ch = field(nj, "children");
      if (!ch.is_array() || ch.size() != 2 || !ch[0].is_number_integer() || !ch[1].is_number_integer())
        malformed("node " + std::to_string(nd.id) + " needs two integer children");
      nd.left = ch[0].get<int>();
      nd.right = ch[1].get<int>();
    } else {
      malformed("unknown node kind '" + kind + "'");
    }
    nodes.push_back(std::move(nd));
  }

  Provenance prov;
  const json& pj = field(j, "provenance");
  prov.input_hash = text(pj, "input_hash");
  const json& seed = field(pj, "seed");
  if (!seed.is_null()) {
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0))
      malformed("provenance seed is not a non-negative integer");
    prov.seed = seed.get<std::uint64_t>();
  }
  prov.tool_version = text(pj, "tool_version");

  try {
    return TreeDocument{version, cfg, std::move(time_col), std::move(event_col),
                        Tree(std::move(covs), std::move(nodes)), std::move(prov)};
  } catch (const std::invalid_argument& e) {
    malformed(e.what());
  }
}

std::string render_text(const TreeDocument& doc) {
  std::ostringstream out;
  const Tree& tree = doc.tree;

  auto summary = [](const TreeNode& nd) {
    return "n = " + csv::format_double(nd.n_effective) + ", events = " + csv::format_double(nd.events) +
           ", median = " + median_text(nd);
  };

  // Depth-first, left before right.
  struct Item {
    int id;
    std::string label;
  };
  std::vector<Item> stack{{tree.root().id, "root"}};
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    const TreeNode& nd = tree.node(item.id);
    out << std::string(static_cast<std::size_t>(2 * nd.depth), ' ') << '[' << nd.id << "] " << item.label;
    if (nd.is_leaf()) {
      out << ": " << summary(nd) << '\n';
      continue;
    }
    out << " (" << summary(nd) << ")\n";
    const Split& s = *nd.split;
    const std::string p = ", p = " + format_p(nd.p_adjusted.value_or(1.0));
    stack.push_back({nd.right, s.covariate + ' ' + edge_label(s, false) + p});
    stack.push_back({nd.left, s.covariate + ' ' + edge_label(s, true) + p});
  }
  return out.str();
}

std::string render_dot(const TreeDocument& doc) {
  std::ostringstream out;
  out << "digraph ctree {\n";
  out << "  node [fontname=\"Helvetica\"];\n";
  out << "  edge [fontname=\"Helvetica\"];\n";
  auto lines = [](std::initializer_list<std::string> parts) {
    std::string s;
    for (const std::string& p : parts) {
      if (!s.empty()) s += "\\n";
      s += dot_escape(p);
    }
    return s;
  };
  for (const TreeNode& nd : doc.tree.nodes()) {
    if (nd.is_leaf()) {
      out << "  n" << nd.id << " [shape=box, label=\""
          << lines({std::to_string(nd.id), "n = " + csv::format_double(nd.n_effective),
                    "median = " + median_text(nd)})
          << "\"];\n";
    } else {
      out << "  n" << nd.id << " [shape=ellipse, label=\""
          << lines({std::to_string(nd.id), nd.split->covariate,
                    "p = " + format_p(nd.p_adjusted.value_or(1.0))})
          << "\"];\n";
    }
  }
  for (const TreeNode& nd : doc.tree.nodes()) {
    if (nd.is_leaf()) continue;
    out << "  n" << nd.id << " -> n" << nd.left << " [label=\"" << dot_escape(edge_label(*nd.split, true))
        << "\"];\n";
    out << "  n" << nd.id << " -> n" << nd.right << " [label=\"" << dot_escape(edge_label(*nd.split, false))
        << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

}  // namespace ctree::cli

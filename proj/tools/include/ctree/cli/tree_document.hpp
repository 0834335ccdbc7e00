#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "ctree/partition.hpp"

namespace ctree::cli {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct Provenance {
  std::string input_hash;             // "fnv1a64:<16 hex digits>" of the training CSV bytes
  std::optional<std::uint64_t> seed;  // Monte Carlo seed, when one was used
  std::string tool_version = kToolVersion;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// Canonical on-disk form of a fitted tree. DOT and text renderings are
// derived from it.
struct TreeDocument {
  int format_version = kFormatVersion;
  FitConfig config;
  std::string time_column;
  std::string event_column;
  Tree tree;
  Provenance provenance;
};

// Pretty-printed JSON with a trailing newline. Doubles use the shortest
// representation that parses back to the same value, so
// serialize(parse_document(serialize(d))) == serialize(d).
std::string serialize(const TreeDocument& doc);

// Throws DataError on malformed JSON or a document that violates the
// schema (unknown version, dangling child ids, bad split records).
TreeDocument parse_document(std::string_view json_text);

// Indented listing, one line per node:
//   [2] meld ≤ 15.9, p = 1.234e-12
std::string render_text(const TreeDocument& doc);

// Graphviz digraph; nodes and edges emitted in id order.
std::string render_dot(const TreeDocument& doc);

std::string fnv1a64_hex(std::string_view bytes);

// Edge label of a split, e.g. "≤ 16" / "> 16" or "∈ {A, B}".
std::string edge_label(const Split& split, bool left);

}  // namespace ctree::cli

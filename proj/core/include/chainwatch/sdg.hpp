#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chainwatch/fingerprints.hpp"
#include "chainwatch/trace.hpp"

namespace chainwatch {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t {
  kStatement,
  kEntry,
  kActualIn,
  kFormalIn,
  kFormalOut,
  kActualOut,
};

enum class EdgeLabel : std::uint8_t { kControl, kData, kCall, kParamIn, kParamOut };

std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeLabel label);
std::optional<NodeKind> parse_node_kind(std::string_view s);
std::optional<EdgeLabel> parse_edge_label(std::string_view s);

/// Labels followed by data-flow queries. Control edges are not.
constexpr bool is_flow_label(EdgeLabel l) { return l != EdgeLabel::kControl; }

struct SdgNode {
  NodeId id = 0;
  NodeKind kind = NodeKind::kStatement;
  std::optional<InstructionCall> instruction;  // statements only
};

struct SdgEdge {
  NodeId src = 0;
  NodeId dst = 0;
  EdgeLabel label = EdgeLabel::kData;

  friend bool operator==(const SdgEdge&, const SdgEdge&) = default;
};

class SdgError : public FormatError {
 public:
  enum class Kind { kMalformed, kDuplicateNode, kDanglingEndpoint, kIllegalLabel };
  SdgError(Kind kind, const std::string& what) : FormatError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// System dependence graph. Call edges run from a call-site statement to an
/// entry node, param_in from actual_in to formal_in, param_out from
/// formal_out to actual_out. Duplicate edges collapse.
class Sdg {
 public:
  std::string name;

  void add_node(SdgNode node);
  /// Both endpoints must already exist.
  void add_edge(SdgEdge edge);

  const SdgNode* find(NodeId id) const;
  std::span<const SdgNode> nodes() const { return nodes_; }
  std::span<const SdgEdge> edges() const { return edges_; }
  std::size_t count(EdgeLabel label) const;
  bool has_edge(NodeId src, NodeId dst, EdgeLabel label) const;

  /// Successors over flow labels, ascending by node id, no repeats.
  std::span<const NodeId> flow_successors(NodeId id) const;

 private:
  std::vector<SdgNode> nodes_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<SdgEdge> edges_;
  std::unordered_map<NodeId, std::vector<NodeId>> flow_adj_;
};

/// Text format, one item per line, `#` comments:
///
///   sdg <name>
///   node <id> <kind> [record fields for statements]
///   edge <src> <dst> <label>
Sdg parse_sdg(std::istream& in, const Vocabulary& vocab = Vocabulary::defaults());
Sdg load_sdg(const std::filesystem::path& path,
             const Vocabulary& vocab = Vocabulary::defaults());
void write_sdg(std::ostream& out, const Sdg& sdg,
               const Vocabulary& vocab = Vocabulary::defaults());

struct VulnQuery {
  ExploitId exploit_id = 0;
  std::vector<InstructionCall> sources;
  std::vector<InstructionCall> sinks;
};

/// Source and sink sets from the role annotations. Throws FingerprintError
/// if either role is missing.
VulnQuery lower_fingerprint(const FingerprintSpec& fp);

/// Node/template equality on api_name, category and package.
bool template_matches(const InstructionCall& node, const InstructionCall& tmpl);

using InstructionSequence = std::vector<InstructionCall>;

struct MatchedPath {
  NodeId source = 0;
  NodeId sink = 0;
  std::vector<NodeId> nodes;  // full path, source first
  InstructionSequence sequence;
};

/// One shortest flow path per reachable (source, sink) node pair with
/// source != sink, ordered by (source id, sink id). Ties between equally
/// short paths go to the lexicographically smallest node-id sequence.
std::vector<MatchedPath> match_query_paths(const Sdg& sdg, const VulnQuery& query);

/// Statement instructions of each matched path, duplicates removed, first
/// occurrence order kept.
std::vector<InstructionSequence> match_query(const Sdg& sdg, const VulnQuery& query);

}  // namespace chainwatch

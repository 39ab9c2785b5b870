#include "chainwatch/sdg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace chainwatch {
namespace {

constexpr std::array<std::string_view, 6> kNodeKindNames = {
    "statement", "entry", "actual_in", "formal_in", "formal_out", "actual_out"};
constexpr std::array<std::string_view, 5> kEdgeLabelNames = {
    "control", "data", "call", "param_in", "param_out"};

NodeId parse_node_id(std::string_view s, std::size_t lineno) {
  NodeId id = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SdgError(SdgError::Kind::kMalformed,
                   "line " + std::to_string(lineno) + ": bad node id '" + std::string(s) + "'");
  }
  return id;
}

// Splits off the first `n` whitespace-separated words; the remainder is
// returned untouched.
std::vector<std::string_view> leading_words(std::string_view line, std::size_t n,
                                            std::string_view& rest) {
  std::vector<std::string_view> words;
  std::size_t pos = 0;
  while (words.size() < n) {
    pos = line.find_first_not_of(" \t\r", pos);
    if (pos == std::string_view::npos) break;
    auto end = line.find_first_of(" \t\r", pos);
    if (end == std::string_view::npos) end = line.size();
    words.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  rest = pos >= line.size() ? std::string_view{} : line.substr(pos);
  return words;
}

}  // namespace

std::string_view to_string(NodeKind kind) { return kNodeKindNames.at(static_cast<std::size_t>(kind)); }
std::string_view to_string(EdgeLabel label) {
  return kEdgeLabelNames.at(static_cast<std::size_t>(label));
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
  for (std::size_t i = 0; i < kNodeKindNames.size(); ++i) {
    if (kNodeKindNames[i] == s) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

std::optional<EdgeLabel> parse_edge_label(std::string_view s) {
  for (std::size_t i = 0; i < kEdgeLabelNames.size(); ++i) {
    if (kEdgeLabelNames[i] == s) return static_cast<EdgeLabel>(i);
  }
  return std::nullopt;
}

void Sdg::add_node(SdgNode node) {
  if (index_.contains(node.id)) {
    throw SdgError(SdgError::Kind::kDuplicateNode, "duplicate node " + std::to_string(node.id));
  }
  if (node.instruction && node.kind != NodeKind::kStatement) {
    throw SdgError(SdgError::Kind::kMalformed,
                   "node " + std::to_string(node.id) + ": only statements carry instructions");
  }
  index_.emplace(node.id, nodes_.size());
  nodes_.push_back(std::move(node));
}

void Sdg::add_edge(SdgEdge edge) {
  const auto* src = find(edge.src);
  const auto* dst = find(edge.dst);
  const auto desc = std::to_string(edge.src) + " -> " + std::to_string(edge.dst) + " (" +
                    std::string(to_string(edge.label)) + ")";
  if (src == nullptr || dst == nullptr) {
    throw SdgError(SdgError::Kind::kDanglingEndpoint,
                   "edge " + desc + " references missing node " +
                       std::to_string(src == nullptr ? edge.src : edge.dst));
  }
  auto require = [&](NodeKind s, NodeKind d) {
    if (src->kind != s || dst->kind != d) {
      throw SdgError(SdgError::Kind::kIllegalLabel,
                     "edge " + desc + " must run " + std::string(to_string(s)) + " -> " +
                         std::string(to_string(d)) + ", got " +
                         std::string(to_string(src->kind)) + " -> " +
                         std::string(to_string(dst->kind)));
    }
  };
  switch (edge.label) {
    case EdgeLabel::kCall: require(NodeKind::kStatement, NodeKind::kEntry); break;
    case EdgeLabel::kParamIn: require(NodeKind::kActualIn, NodeKind::kFormalIn); break;
    case EdgeLabel::kParamOut: require(NodeKind::kFormalOut, NodeKind::kActualOut); break;
    case EdgeLabel::kControl:
    case EdgeLabel::kData: break;
  }
  if (has_edge(edge.src, edge.dst, edge.label)) return;
  edges_.push_back(edge);
  if (is_flow_label(edge.label)) {
    auto& succ = flow_adj_[edge.src];
    auto it = std::lower_bound(succ.begin(), succ.end(), edge.dst);
    if (it == succ.end() || *it != edge.dst) succ.insert(it, edge.dst);
  }
}

const SdgNode* Sdg::find(NodeId id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::size_t Sdg::count(EdgeLabel label) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [&](const SdgEdge& e) { return e.label == label; }));
}

bool Sdg::has_edge(NodeId src, NodeId dst, EdgeLabel label) const {
  return std::find(edges_.begin(), edges_.end(), SdgEdge{src, dst, label}) != edges_.end();
}

std::span<const NodeId> Sdg::flow_successors(NodeId id) const {
  auto it = flow_adj_.find(id);
  if (it == flow_adj_.end()) return {};
  return it->second;
}

Sdg parse_sdg(std::istream& in, const Vocabulary& vocab) {
  Sdg sdg;
  std::vector<std::pair<SdgEdge, std::size_t>> edges;
  std::string line;
  std::size_t lineno = 0;
  auto malformed = [&](const std::string& msg) {
    return SdgError(SdgError::Kind::kMalformed, "line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view rest;
    auto head = leading_words(line, 1, rest);
    if (head.empty() || head[0].front() == '#') continue;
    if (head[0] == "sdg") {
      auto name = leading_words(rest, 1, rest);
      if (name.empty()) throw malformed("sdg line without a name");
      sdg.name = std::string(name[0]);
    } else if (head[0] == "node") {
      auto words = leading_words(rest, 2, rest);
      if (words.size() != 2) throw malformed("expected 'node <id> <kind> [fields]'");
      SdgNode node;
      node.id = parse_node_id(words[0], lineno);
      auto kind = parse_node_kind(words[1]);
      if (!kind) throw malformed("unknown node kind '" + std::string(words[1]) + "'");
      node.kind = *kind;
      if (rest.find_first_not_of(" \t\r") != std::string_view::npos) {
        try {
          node.instruction = parse_trace_record(rest, vocab);
        } catch (const TraceError& e) {
          throw malformed("node " + std::to_string(node.id) + ": " + e.what());
        }
      }
      try {
        sdg.add_node(std::move(node));
      } catch (const SdgError& e) {
        throw SdgError(e.kind(), "line " + std::to_string(lineno) + ": " + e.what());
      }
    } else if (head[0] == "edge") {
      auto words = leading_words(rest, 3, rest);
      if (words.size() != 3 || rest.find_first_not_of(" \t\r") != std::string_view::npos) {
        throw malformed("expected 'edge <src> <dst> <label>'");
      }
      auto label = parse_edge_label(words[2]);
      if (!label) throw malformed("unknown edge label '" + std::string(words[2]) + "'");
      edges.emplace_back(SdgEdge{parse_node_id(words[0], lineno), parse_node_id(words[1], lineno), *label},
                         lineno);
    } else {
      throw malformed("unknown directive '" + std::string(head[0]) + "'");
    }
  }
  for (const auto& [edge, at] : edges) {
    try {
      sdg.add_edge(edge);
    } catch (const SdgError& e) {
      throw SdgError(e.kind(), "line " + std::to_string(at) + ": " + e.what());
    }
  }
  return sdg;
}

Sdg load_sdg(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw SdgError(SdgError::Kind::kMalformed, "cannot open SDG file " + path.string());
  try {
    auto sdg = parse_sdg(in, vocab);
    if (sdg.name.empty()) sdg.name = path.stem().string();
    return sdg;
  } catch (const SdgError& e) {
    throw SdgError(e.kind(), path.string() + ": " + e.what());
  }
}

void write_sdg(std::ostream& out, const Sdg& sdg, const Vocabulary& vocab) {
  if (!sdg.name.empty()) out << "sdg " << sdg.name << '\n';
  for (const auto& node : sdg.nodes()) {
    out << "node " << node.id << ' ' << to_string(node.kind);
    if (node.instruction) out << ' ' << format_trace_record(*node.instruction, vocab);
    out << '\n';
  }
  for (const auto& e : sdg.edges()) {
    out << "edge " << e.src << ' ' << e.dst << ' ' << to_string(e.label) << '\n';
  }
}

VulnQuery lower_fingerprint(const FingerprintSpec& fp) {
  VulnQuery q;
  q.exploit_id = fp.exploit_id;
  for (std::size_t i = 0; i < fp.templates.size(); ++i) {
    const auto role = i < fp.roles.size() ? fp.roles[i] : TemplateRole::kNone;
    if (role == TemplateRole::kSource) q.sources.push_back(fp.templates[i]);
    if (role == TemplateRole::kSink) q.sinks.push_back(fp.templates[i]);
  }
  if (q.sources.empty()) {
    throw FingerprintError("fingerprint " + std::to_string(fp.exploit_id) +
                           " has no template annotated role=source");
  }
  if (q.sinks.empty()) {
    throw FingerprintError("fingerprint " + std::to_string(fp.exploit_id) +
                           " has no template annotated role=sink");
  }
  return q;
}

bool template_matches(const InstructionCall& node, const InstructionCall& tmpl) {
  return node.api_name == tmpl.api_name && node.category == tmpl.category &&
         node.package == tmpl.package;
}

std::vector<MatchedPath> match_query_paths(const Sdg& sdg, const VulnQuery& query) {
  auto matches_any = [](const SdgNode& n, const std::vector<InstructionCall>& templates) {
    if (n.kind != NodeKind::kStatement || !n.instruction) return false;
    return std::any_of(templates.begin(), templates.end(),
                       [&](const InstructionCall& t) { return template_matches(*n.instruction, t); });
  };

  std::vector<NodeId> sources, sinks;
  for (const auto& n : sdg.nodes()) {
    if (matches_any(n, query.sources)) sources.push_back(n.id);
    if (matches_any(n, query.sinks)) sinks.push_back(n.id);
  }
  std::sort(sources.begin(), sources.end());
  std::sort(sinks.begin(), sinks.end());

  std::vector<MatchedPath> out;
  std::unordered_map<NodeId, NodeId> parent;
  for (NodeId s : sources) {
    // Breadth-first with ascending successor order yields, for each reached
    // node, the lexicographically smallest among its shortest paths.
    parent.clear();
    parent.emplace(s, s);
    std::deque<NodeId> queue{s};
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      for (NodeId v : sdg.flow_successors(u)) {
        if (parent.emplace(v, u).second) queue.push_back(v);
      }
    }
    for (NodeId k : sinks) {
      if (k == s || !parent.contains(k)) continue;
      MatchedPath path;
      path.source = s;
      path.sink = k;
      for (NodeId v = k;; v = parent.at(v)) {
        path.nodes.push_back(v);
        if (v == s) break;
      }
      std::reverse(path.nodes.begin(), path.nodes.end());
      for (NodeId v : path.nodes) {
        const auto* node = sdg.find(v);
        if (node->kind == NodeKind::kStatement && node->instruction) {
          path.sequence.push_back(*node->instruction);
        }
      }
      out.push_back(std::move(path));
    }
  }
  return out;
}

std::vector<InstructionSequence> match_query(const Sdg& sdg, const VulnQuery& query) {
  std::vector<InstructionSequence> out;
  for (auto& path : match_query_paths(sdg, query)) {
    if (std::find(out.begin(), out.end(), path.sequence) == out.end()) {
      out.push_back(std::move(path.sequence));
    }
  }
  return out;
}

}  // namespace chainwatch

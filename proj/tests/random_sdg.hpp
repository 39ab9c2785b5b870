#pragma once

#include <random>
#include <string>
#include <vector>

#include "chainwatch/sdg.hpp"
#include "oracles/oracles.hpp"
#include "support.hpp"

namespace testing_support {

inline const char* kSourceRecord =
    "api_name=readLine category=invokevirtual scope=Primordial package=Ljava/io/BufferedReader "
    "inputs= outputs=Ljava/lang/String";
inline const char* kSinkRecord =
    "api_name=executeQuery category=invokeinterface scope=Primordial package=Ljava/sql/Statement "
    "inputs=Ljava/lang/String outputs=Ljava/sql/ResultSet";

inline chainwatch::VulnQuery sqli_query() {
  chainwatch::VulnQuery q;
  q.exploit_id = 4;
  q.sources.push_back(parse(kSourceRecord));
  q.sinks.push_back(parse(kSinkRecord));
  return q;
}

/// Up to `max_nodes` nodes of mixed kinds; statements are sources, sinks or
/// plain calls. Edges are random but respect the endpoint rules of the
/// interprocedural labels.
inline chainwatch::Sdg random_sdg(std::mt19937_64& rng, std::size_t max_nodes = 12) {
  using namespace chainwatch;
  std::uniform_int_distribution<std::size_t> count(2, max_nodes);
  const auto n = count(rng);
  Sdg g;
  g.name = "random";
  std::vector<SdgNode> nodes;
  for (NodeId id = 0; id < n; ++id) {
    SdgNode node;
    node.id = id;
    const auto r = rng() % 10;
    if (r < 6) {
      node.kind = NodeKind::kStatement;
      const auto which = rng() % 4;
      node.instruction = which == 0   ? parse(kSourceRecord)
                         : which == 1 ? parse(kSinkRecord)
                                      : random_call(rng);
    } else {
      const NodeKind others[] = {NodeKind::kEntry, NodeKind::kActualIn, NodeKind::kFormalIn,
                                 NodeKind::kFormalOut, NodeKind::kActualOut};
      node.kind = others[rng() % 5];
    }
    nodes.push_back(node);
    g.add_node(node);
  }
  std::uniform_int_distribution<std::size_t> pick(0, n - 1), n_edges(0, 2 * n);
  for (auto k = n_edges(rng); k > 0; --k) {
    const auto a = pick(rng), b = pick(rng);
    const auto& na = nodes[a];
    const auto& nb = nodes[b];
    EdgeLabel label = rng() % 4 == 0 ? EdgeLabel::kControl : EdgeLabel::kData;
    if (na.kind == NodeKind::kStatement && nb.kind == NodeKind::kEntry && rng() % 2) label = EdgeLabel::kCall;
    if (na.kind == NodeKind::kActualIn && nb.kind == NodeKind::kFormalIn) label = EdgeLabel::kParamIn;
    if (na.kind == NodeKind::kFormalOut && nb.kind == NodeKind::kActualOut) label = EdgeLabel::kParamOut;
    g.add_edge({na.id, nb.id, label});
  }
  return g;
}

inline oracle::Graph to_graph(const chainwatch::Sdg& sdg) {
  oracle::Graph g;
  for (const auto& n : sdg.nodes()) {
    g.nodes.push_back(n.id);
    if (n.instruction) g.statements.insert(n.id);
  }
  for (const auto& e : sdg.edges()) {
    if (e.label != chainwatch::EdgeLabel::kControl) g.flow[e.src].insert(e.dst);
  }
  return g;
}

}  // namespace testing_support

#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "chainwatch/sdg.hpp"
#include "random_sdg.hpp"

using namespace chainwatch;
using testing_support::data_dir;

TEST(Sdg, TwoFunctionFixtureEdgeCounts) {
  auto g = load_sdg(data_dir() / "fixtures" / "two_function.sdg");
  EXPECT_EQ(g.name, "two_function");
  EXPECT_EQ(g.nodes().size(), 10u);
  EXPECT_EQ(g.count(EdgeLabel::kCall), 1u);
  EXPECT_EQ(g.count(EdgeLabel::kParamIn), 1u);
  EXPECT_EQ(g.count(EdgeLabel::kParamOut), 1u);
  EXPECT_TRUE(g.has_edge(3, 7, EdgeLabel::kParamIn));
  std::ostringstream out;
  write_sdg(out, g);
  std::istringstream in(out.str());
  auto again = parse_sdg(in);
  EXPECT_EQ(again.edges().size(), g.edges().size());
  EXPECT_EQ(again.nodes().size(), g.nodes().size());
}

TEST(Sdg, StructuralErrors) {
  auto kind_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_sdg(in);
    } catch (const SdgError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "accepted: " << text;
    return SdgError::Kind::kMalformed;
  };
  using K = SdgError::Kind;
  EXPECT_EQ(kind_of("node 0 entry\nnode 0 entry\n"), K::kDuplicateNode);
  EXPECT_EQ(kind_of("node 0 entry\nedge 0 1 data\n"), K::kDanglingEndpoint);
  EXPECT_EQ(kind_of("node 0 entry\nnode 1 entry\nedge 0 1 param_in\n"), K::kIllegalLabel);
  EXPECT_EQ(kind_of("node 0 entry\nnode 1 formal_in\nedge 0 1 call\n"), K::kIllegalLabel);
  EXPECT_EQ(kind_of("node 0 blob\n"), K::kMalformed);
  EXPECT_EQ(kind_of("node 0 entry\nedge 0 0 sideways\n"), K::kMalformed);
  EXPECT_EQ(kind_of("node 0 statement api_name=x\n"), K::kMalformed);
}

TEST(Sdg, SqlInjectionFixtureSequence) {
  auto g = load_sdg(data_dir() / "fixtures" / "sqli.sdg");
  EXPECT_LE(g.nodes().size(), 8u);
  std::ifstream in(data_dir() / "fixtures" / "sqli.fp");
  auto specs = parse_fingerprint_specs(in, Vocabulary::defaults());
  ASSERT_EQ(specs.size(), 1u);
  auto q = lower_fingerprint(specs[0]);
  ASSERT_EQ(q.sources.size(), 1u);
  ASSERT_EQ(q.sinks.size(), 1u);
  EXPECT_EQ(q.sources[0].api_name, "readLine");
  EXPECT_EQ(q.sinks[0].api_name, "executeQuery");
  auto seqs = match_query(g, q);
  ASSERT_EQ(seqs.size(), 1u);
  std::vector<std::string> names;
  for (const auto& c : seqs[0]) names.push_back(c.api_name);
  EXPECT_EQ(names, (std::vector<std::string>{"readLine", "concat", "executeQuery"}));
}

TEST(Sdg, LoweringNeedsBothRoles) {
  FingerprintSpec spec;
  spec.exploit_id = 1;
  spec.templates = {testing_support::parse(testing_support::kSourceRecord)};
  spec.roles = {TemplateRole::kSource};
  EXPECT_THROW(lower_fingerprint(spec), FingerprintError);
  spec.roles = {TemplateRole::kSink};
  EXPECT_THROW(lower_fingerprint(spec), FingerprintError);
}

TEST(Sdg, TwoPathsOrderedBySourceThenSink) {
  std::istringstream in(std::string("node 0 entry\n") +
                        "node 5 statement " + testing_support::kSourceRecord + "\n" +
                        "node 2 statement " + testing_support::kSourceRecord + "\n" +
                        "node 3 statement " + testing_support::kSinkRecord + "\n" +
                        "node 9 statement " + testing_support::kSinkRecord + "\n" +
                        "edge 5 9 data\nedge 2 3 data\nedge 0 2 control\nedge 0 5 control\n");
  auto g = parse_sdg(in);
  auto paths = match_query_paths(g, testing_support::sqli_query());
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].source, 2u);
  EXPECT_EQ(paths[0].sink, 3u);
  EXPECT_EQ(paths[1].source, 5u);
  EXPECT_EQ(paths[1].sink, 9u);
  // Identical instruction sequences collapse.
  EXPECT_EQ(match_query(g, testing_support::sqli_query()).size(), 1u);
}

TEST(Sdg, ControlEdgesCarryNoFlow) {
  std::istringstream in(std::string("node 1 statement ") + testing_support::kSourceRecord + "\n" +
                        "node 2 statement " + testing_support::kSinkRecord + "\n" + "edge 1 2 control\n");
  EXPECT_TRUE(match_query(parse_sdg(in), testing_support::sqli_query()).empty());
}

TEST(Sdg, AgreesWithBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(2024);
  const auto q = testing_support::sqli_query();
  for (int round = 0; round < 100; ++round) {
    auto g = testing_support::random_sdg(rng);
    auto og = testing_support::to_graph(g);
    std::vector<std::uint32_t> sources, sinks;
    for (const auto& n : g.nodes()) {
      if (!n.instruction) continue;
      if (template_matches(*n.instruction, q.sources[0])) sources.push_back(n.id);
      if (template_matches(*n.instruction, q.sinks[0])) sinks.push_back(n.id);
    }
    auto want = oracle::all_paths(og, sources, sinks);
    auto got = match_query_paths(g, q);
    ASSERT_EQ(got.size(), want.size()) << "round " << round;
    for (const auto& p : got) {
      auto it = want.find({p.source, p.sink});
      ASSERT_NE(it, want.end());
      EXPECT_EQ(p.nodes, it->second);
    }
  }
}

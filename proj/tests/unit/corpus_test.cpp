#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "chainwatch/corpus.hpp"
#include "chainwatch/synth.hpp"
#include "support.hpp"

using namespace chainwatch;
namespace fs = std::filesystem;

namespace {

InstructionCall call(const std::string& name) {
  return testing_support::parse("api_name=" + name +
                                " category=invokestatic scope=Application package=Ljava/lang/Integer inputs=I outputs=I");
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("chainwatch_corpus_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Labels, FormatAndParse) {
  LabelSet s;
  EXPECT_EQ(format_labels(s), "-");
  s.set(3);
  s.set(0);
  s.set(78);
  EXPECT_EQ(format_labels(s), "0,3,78");
  EXPECT_EQ(parse_labels("0,3,78"), s);
  EXPECT_EQ(parse_labels("-"), LabelSet{});
  EXPECT_THROW(parse_labels("79"), FormatError);
  EXPECT_THROW(parse_labels("1,,2"), FormatError);
  EXPECT_THROW(parse_labels("x"), FormatError);
  EXPECT_THROW(parse_labels(""), FormatError);
}

TEST(CallLabeler, UnionOverExploits) {
  CallLabeler labeler;
  labeler.add_sequence({call("a"), call("b")}, 2);
  labeler.add_sequence({call("b"), call("c")}, 5);
  auto b = labeler.labels_for(call("b"));
  EXPECT_TRUE(b.test(2));
  EXPECT_TRUE(b.test(5));
  EXPECT_EQ(b.count(), 2u);
  EXPECT_EQ(labeler.labels_for(call("a")).count(), 1u);
  EXPECT_FALSE(labeler.contains(call("z")));
  // Same name, different record: not the same instruction.
  auto other = call("a");
  other.scope = Scope::kPrimordial;
  EXPECT_FALSE(labeler.contains(other));
}

TEST(EmitCorpus, BenignOnlyTracesHaveZeroLabels) {
  std::vector<InstructionCall> filler{call("f1"), call("f2"), call("f3")};
  PaddingConfig cfg;
  cfg.benign_traces = 25;
  cfg.benign_min_length = 2;
  cfg.benign_max_length = 6;
  cfg.seed = 9;
  auto traces = emit_corpus({}, 0, cfg, filler);
  ASSERT_EQ(traces.size(), 25u);
  for (const auto& t : traces) {
    EXPECT_GE(t.trace.calls.size(), 2u);
    EXPECT_LE(t.trace.calls.size(), 6u);
    EXPECT_TRUE(t.planted.none());
    ASSERT_EQ(t.labels.size(), t.trace.calls.size());
    for (const auto& l : t.labels) EXPECT_TRUE(l.none());
  }
}

TEST(EmitCorpus, PaddingKeepsSequenceOrderAndRatio) {
  InstructionSequence seq{call("s0"), call("s1"), call("s2"), call("s3")};
  std::vector<InstructionCall> filler{call("f1"), call("f2")};
  PaddingConfig cfg;
  cfg.benign_ratio = 0.5;
  cfg.repeat = 10;
  cfg.seed = 3;
  std::vector<InstructionSequence> seqs{seq};
  auto traces = emit_corpus(seqs, 11, cfg, filler);
  ASSERT_EQ(traces.size(), 10u);
  for (const auto& t : traces) {
    EXPECT_EQ(t.trace.calls.size(), 8u);
    EXPECT_TRUE(t.planted.test(11));
    std::size_t next = 0;
    for (std::size_t i = 0; i < t.trace.calls.size(); ++i) {
      if (next < seq.size() && t.trace.calls[i].api_name == seq[next].api_name) {
        EXPECT_TRUE(t.labels[i].test(11));
        ++next;
      } else {
        EXPECT_TRUE(t.labels[i].none());
      }
    }
    EXPECT_EQ(next, seq.size());
  }
  auto again = emit_corpus(seqs, 11, cfg, filler);
  for (std::size_t i = 0; i < traces.size(); ++i) EXPECT_EQ(again[i].trace.calls, traces[i].trace.calls);
}

TEST(EmitCorpus, RejectsBadConfig) {
  std::vector<InstructionSequence> seqs{{call("s0")}};
  std::vector<InstructionCall> filler{call("f")};
  PaddingConfig cfg;
  cfg.benign_ratio = 1.0;
  EXPECT_THROW(emit_corpus(seqs, 0, cfg, filler), Error);
  cfg.benign_ratio = 0.3;
  EXPECT_THROW(emit_corpus(seqs, 0, cfg, {}), Error);
  PaddingConfig benign;
  benign.benign_traces = 2;
  EXPECT_THROW(emit_corpus({}, 0, benign, {}), Error);
  benign.benign_min_length = 5;
  benign.benign_max_length = 4;
  EXPECT_THROW(emit_corpus({}, 0, benign, filler), Error);
}

TEST(Corpus, WriteReadRoundTripAndSplit) {
  std::vector<LabeledTrace> traces;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 41; ++i) {
    LabeledTrace t;
    for (int k = 0; k < 1 + i % 4; ++k) {
      t.trace.calls.push_back(testing_support::random_call(rng));
      LabelSet l;
      if (k % 2 == 0) l.set(i % 79);
      t.labels.push_back(l);
      t.planted |= l;
    }
    traces.push_back(std::move(t));
  }
  auto dir = scratch("roundtrip");
  write_corpus(dir, traces, 0.85, 17);
  auto train = read_corpus(dir, Split::kTrain);
  auto test = read_corpus(dir, Split::kTest);
  EXPECT_NEAR(static_cast<double>(train.size()), 0.85 * 41, 1.0);
  EXPECT_EQ(train.size() + test.size(), 41u);

  std::ifstream mf(dir / "manifest.json");
  auto manifest = nlohmann::json::parse(mf);
  EXPECT_EQ(manifest["traces"].size(), 41u);

  // Every written trace is one of the inputs with the same labels.
  std::size_t found = 0;
  for (const auto* part : {&train, &test}) {
    for (const auto& t : *part) {
      for (const auto& orig : traces) {
        if (orig.trace.calls == t.trace.calls && orig.labels == t.labels) {
          ++found;
          break;
        }
      }
    }
  }
  EXPECT_EQ(found, 41u);
  fs::remove_all(dir);
}

TEST(Corpus, LabelCountMismatchIsRejected) {
  auto dir = scratch("mismatch");
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  {
    std::ofstream(dir / "train" / "000000.trace")
        << "api_name=a category=invokestatic scope=Application package=Ljava/lang/Integer inputs= outputs=\n";
    std::ofstream(dir / "train" / "000000.labels") << "-\n-\n";
    std::ofstream(dir / "manifest.json")
        << R"({"traces":[{"name":"000000","split":"train","source":"x","planted":[]}]})";
  }
  EXPECT_THROW(read_corpus(dir, Split::kTrain), FormatError);
  fs::remove_all(dir);
}

TEST(Dataset, GeneratedFromSynthProgramsIsDeterministic) {
  SynthConfig sc;
  sc.exploits = 5;
  auto bundle = synthesize(sc);
  DatasetConfig dc;
  dc.padding.benign_ratio = 0.4;
  dc.padding.repeat = 3;
  dc.padding.benign_traces = 10;
  dc.seed = 4;
  auto a = scratch("ds_a"), b = scratch("ds_b");
  auto sa = generate_dataset(bundle.programs, bundle.fingerprints, dc, a);
  auto sb = generate_dataset(bundle.programs, bundle.fingerprints, dc, b);
  EXPECT_EQ(sa.sequences_per_exploit.size(), 5u);
  EXPECT_EQ(sa.sequences, sb.sequences);
  EXPECT_GT(sa.filler_pool, 0u);
  EXPECT_EQ(sa.train_traces + sa.test_traces, sa.sequences * 3 + 10);

  auto ta = read_corpus(a, Split::kTrain), tb = read_corpus(b, Split::kTrain);
  ASSERT_EQ(ta.size(), tb.size());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    EXPECT_EQ(ta[i].trace.calls, tb[i].trace.calls);
    EXPECT_EQ(ta[i].labels, tb[i].labels);
  }

  // Examples skip white-listed calls.
  EmbeddingTable table;
  auto all = make_examples(ta, table);
  auto kept = make_examples(ta, table, &bundle.whitelist);
  std::size_t listed = 0;
  for (const auto& t : ta)
    for (const auto& c : t.trace.calls) listed += bundle.whitelist.contains(c.api_name);
  EXPECT_EQ(all.size(), kept.size() + listed);
  fs::remove_all(a);
  fs::remove_all(b);
}

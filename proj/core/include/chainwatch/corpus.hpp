#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chainwatch/classifier.hpp"
#include "chainwatch/fingerprints.hpp"
#include "chainwatch/sdg.hpp"

namespace chainwatch {

/// A trace plus per-call targets and the exploits planted in it.
struct LabeledTrace {
  Trace trace;
  std::vector<LabelSet> labels;  // one per call
  LabelSet planted;
};

/// Per-call label lookup: every exploit whose vulnerable sequences contain
/// the instruction, keyed on all of its record fields.
class CallLabeler {
 public:
  void add_sequence(const InstructionSequence& seq, ExploitId exploit);
  LabelSet labels_for(const InstructionCall& call) const;
  bool contains(const InstructionCall& call) const;
  std::size_t size() const { return labels_.size(); }

 private:
  std::map<std::string, LabelSet, std::less<>> labels_;
};

struct PaddingConfig {
  /// Fraction of calls in each emitted vulnerable trace that are filler,
  /// in [0, 1).
  double benign_ratio = 0.0;
  /// Traces emitted per sequence, each with its own filler draw.
  std::size_t repeat = 1;
  /// Benign-only mode: number of filler-only traces to emit.
  std::size_t benign_traces = 0;
  std::size_t benign_min_length = 3;
  std::size_t benign_max_length = 10;
  std::uint64_t seed = 0;
};

/// Builds labelled traces for one exploit's sequences. With empty
/// `sequences` and benign_traces > 0 this emits filler-only traces with
/// all-zero labels. Filler calls are drawn from `filler`; labels come from
/// `labeler` (when null, each sequence call gets {exploit_id}).
std::vector<LabeledTrace> emit_corpus(std::span<const InstructionSequence> sequences,
                                      ExploitId exploit_id, const PaddingConfig& config,
                                      std::span<const InstructionCall> filler,
                                      const CallLabeler* labeler = nullptr);

struct DatasetConfig {
  PaddingConfig padding;
  double split = 0.85;  // fraction of traces in train/
  std::uint64_t seed = 0;
};

struct DatasetSummary {
  std::size_t sequences = 0;
  std::size_t train_traces = 0;
  std::size_t test_traces = 0;
  std::size_t benign_traces = 0;
  std::size_t filler_pool = 0;
  std::map<ExploitId, std::size_t> sequences_per_exploit;
};

/// Runs every fingerprint's query over every SDG, labels calls, pads with
/// filler drawn from statements that match no template, and writes the
/// corpus under `out_dir` (train/, test/, manifest.json).
DatasetSummary generate_dataset(std::span<const Sdg> programs,
                                std::span<const FingerprintSpec> fingerprints,
                                const DatasetConfig& config,
                                const std::filesystem::path& out_dir,
                                const Vocabulary& vocab = Vocabulary::defaults());

enum class Split { kTrain, kTest };

/// Writes `NNNNNN.trace` / `NNNNNN.labels` pairs and manifest.json. The
/// first round(split * n) traces of a seeded shuffle go to train/.
void write_corpus(const std::filesystem::path& out_dir, std::span<const LabeledTrace> traces,
                  double split, std::uint64_t seed,
                  const Vocabulary& vocab = Vocabulary::defaults());

std::vector<LabeledTrace> read_corpus(const std::filesystem::path& dir, Split split,
                                      const Vocabulary& vocab = Vocabulary::defaults());

/// Labels file: one line per call, comma-separated exploit ids or `-`.
std::string format_labels(const LabelSet& labels);
LabelSet parse_labels(std::string_view line);

/// Per-call training examples for a set of traces.
std::vector<Example> make_examples(std::span<const LabeledTrace> traces,
                                   const EmbeddingTable& table, const WhiteList* whitelist = nullptr);

}  // namespace chainwatch

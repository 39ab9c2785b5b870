#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "chainwatch/fingerprints.hpp"
#include "chainwatch/sdg.hpp"

namespace chainwatch {

struct SynthConfig {
  std::size_t exploits = 79;   // at most 79
  std::size_t variants = 2;    // SDG programs per exploit
  std::size_t distractors = 6; // benign statements per program
  std::uint64_t seed = 7;
};

struct SynthBundle {
  std::vector<FingerprintSpec> fingerprints;
  std::vector<Sdg> programs;
  WhiteList whitelist;
};

/// Toy stand-in for a test-suite corpus: exploits spread over 23 CWE ids
/// (2, 1, 2, 1, 10, 1, 14, 3, 3, 5, 6, 1, 1, 1, 2, 10, 6, 1, 1, 1, 3, 1, 3),
/// each a source -> propagation -> sink chain with a unique (source, sink)
/// pair, and small SDG programs that realise each chain intra- or
/// inter-procedurally next to benign and white-listed statements.
SynthBundle synthesize(const SynthConfig& config);

/// Writes fingerprints.txt, whitelist.txt and sdg/NNN.sdg.
void write_synth(const std::filesystem::path& dir, const SynthBundle& bundle,
                 const Vocabulary& vocab = Vocabulary::defaults());

}  // namespace chainwatch

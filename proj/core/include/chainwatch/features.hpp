#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chainwatch/trace.hpp"

namespace chainwatch {

inline constexpr std::size_t kEmbeddingDim = 10;
inline constexpr std::size_t kMaxNameTokens = 7;

// Feature vector layout: [name 70 | category 9 | scope 2 | package 22 |
// inputs 24 | outputs 24].
inline constexpr std::size_t kNameDim = kEmbeddingDim * kMaxNameTokens;
inline constexpr std::size_t kNameOffset = 0;
inline constexpr std::size_t kCategoryOffset = kNameOffset + kNameDim;
inline constexpr std::size_t kScopeOffset = kCategoryOffset + kCategoryCount;
inline constexpr std::size_t kPackageOffset = kScopeOffset + kScopeCount;
inline constexpr std::size_t kInputOffset = kPackageOffset + kPackageCount;
inline constexpr std::size_t kOutputOffset = kInputOffset + kIoTypeCount;
inline constexpr std::size_t kFeatureDim = kOutputOffset + kIoTypeCount;
static_assert(kFeatureDim == 151);

using FeatureVector = std::array<double, kFeatureDim>;
using Embedding = std::array<double, kEmbeddingDim>;

/// Lowercase token -> 10-d vector. Immutable after load.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  /// Text format: `token v0 ... v9` per line; blank and `#` lines skipped.
  static EmbeddingTable load(const std::filesystem::path& path);
  static EmbeddingTable parse(std::istream& in);

  void insert(std::string token, const Embedding& vec);
  const Embedding* find(std::string_view token) const;
  std::size_t size() const { return table_.size(); }

  /// Stored vector, or the hash fallback for out-of-vocabulary tokens.
  Embedding lookup(std::string_view token) const;

 private:
  std::unordered_map<std::string, Embedding> table_;
};

/// FNV-1a 64-bit seeds an mt19937_64; ten draws of (u >> 11) * 2^-53 mapped
/// to [-1, 1), then scaled to unit length.
Embedding hash_embed(std::string_view token);

/// camelCase / underscore / digit / punctuation boundaries, lowercased,
/// first seven tokens kept.
std::vector<std::string> tokenize_api_name(std::string_view name);

std::array<double, kNameDim> embed_name(std::span<const std::string> tokens,
                                        const EmbeddingTable& table);

/// One-hot of `index` in a vector of `size`. Throws DimensionError when out
/// of range.
std::vector<double> one_hot(std::size_t index, std::size_t size);

std::array<double, kIoTypeCount> freq_vector(const IoCounts& counts);
/// Tallies identifiers against the vocabulary; unknown ids throw TraceError.
std::array<double, kIoTypeCount> freq_vector(std::span<const std::string> types,
                                             const IdVocabulary& vocab);

FeatureVector encode(const InstructionCall& call, const EmbeddingTable& table);

}  // namespace chainwatch

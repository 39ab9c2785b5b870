#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "chainwatch/classifier.hpp"

namespace chainwatch {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  Confusion& operator+=(const Confusion& o);
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

// A zero denominator yields 0.
double precision(const Confusion& c);
double recall(const Confusion& c);
double accuracy(const Confusion& c);
double f1(const Confusion& c);

/// Per-label 2x2 update. Throws DimensionError when the three lengths differ.
void accumulate(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> target,
                std::span<Confusion> table);
void accumulate(const LabelSet& pred, const LabelSet& target, std::span<Confusion> table);

/// Element-wise sum of two tables of equal length.
std::vector<Confusion> merge(std::span<const Confusion> a, std::span<const Confusion> b);

struct MacroScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

/// Unweighted mean over all labels of the table.
MacroScores macro_average(std::span<const Confusion> table);
/// Unweighted mean over the listed labels only.
MacroScores macro_average(std::span<const Confusion> table, std::span<const std::size_t> labels);

/// Pools label rows into groups (e.g. exploits -> CWE id) by summing counts.
std::map<std::string, Confusion> pool(std::span<const Confusion> table,
                                      const std::map<std::string, std::vector<std::uint32_t>>& groups);

}  // namespace chainwatch

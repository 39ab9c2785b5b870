#include "chainwatch/metrics.hpp"

namespace chainwatch {
namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

double precision(const Confusion& c) { return ratio(c.tp, c.tp + c.fp); }
double recall(const Confusion& c) { return ratio(c.tp, c.tp + c.fn); }
double accuracy(const Confusion& c) { return ratio(c.tp + c.tn, c.total()); }

// Harmonic mean of precision and recall, written over the counts so that a
// single division rounds the result.
double f1(const Confusion& c) { return ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn); }

void accumulate(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> target,
                std::span<Confusion> table) {
  if (pred.size() != target.size() || pred.size() != table.size()) {
    throw DimensionError("accumulate: prediction, target and table lengths differ (" +
                         std::to_string(pred.size()) + ", " + std::to_string(target.size()) +
                         ", " + std::to_string(table.size()) + ")");
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool t = target[i] != 0;
    auto& c = table[i];
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
}

void accumulate(const LabelSet& pred, const LabelSet& target, std::span<Confusion> table) {
  if (table.size() != kExploitCount) {
    throw DimensionError("accumulate: table must have 79 rows");
  }
  for (std::size_t i = 0; i < kExploitCount; ++i) {
    auto& c = table[i];
    if (pred[i] && target[i]) ++c.tp;
    else if (pred[i]) ++c.fp;
    else if (target[i]) ++c.fn;
    else ++c.tn;
  }
}

std::vector<Confusion> merge(std::span<const Confusion> a, std::span<const Confusion> b) {
  if (a.size() != b.size()) throw DimensionError("merge: tables differ in length");
  std::vector<Confusion> out(a.begin(), a.end());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

MacroScores macro_average(std::span<const Confusion> table) {
  MacroScores m;
  if (table.empty()) return m;
  for (const auto& c : table) {
    m.precision += precision(c);
    m.recall += recall(c);
    m.f1 += f1(c);
    m.accuracy += accuracy(c);
  }
  const double n = static_cast<double>(table.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  m.accuracy /= n;
  return m;
}

MacroScores macro_average(std::span<const Confusion> table, std::span<const std::size_t> labels) {
  std::vector<Confusion> subset;
  subset.reserve(labels.size());
  for (auto i : labels) {
    if (i >= table.size()) throw DimensionError("macro_average: label index out of range");
    subset.push_back(table[i]);
  }
  return macro_average(subset);
}

std::map<std::string, Confusion> pool(std::span<const Confusion> table,
                                      const std::map<std::string, std::vector<std::uint32_t>>& groups) {
  std::map<std::string, Confusion> out;
  for (const auto& [name, members] : groups) {
    auto& c = out[name];
    for (auto m : members) c += table[m];
  }
  return out;
}

}  // namespace chainwatch

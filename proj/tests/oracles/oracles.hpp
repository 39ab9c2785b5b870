#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of these call into the library code they check.

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b);
/// 0 when either side has zero norm.
double cosine(const Vec& a, const Vec& b);

/// FNV-1a 64 of the bytes, seeding mt19937_64; ten draws mapped to [-1, 1)
/// and scaled to unit length.
std::array<double, 10> hash_embed(const std::string& token);

/// (exploit id, trace offset) pairs.
using Alarm = std::pair<std::uint32_t, std::size_t>;

struct NaiveFingerprint {
  std::uint32_t id = 0;
  std::vector<Vec> templates;
};

/// Per exploit, walks the trace once looking for its templates in order;
/// completing the list records an alarm and starts over. `skip[i]` marks
/// calls that are never compared (white-listed).
std::set<Alarm> naive_alarms(const std::vector<NaiveFingerprint>& db, const std::vector<Vec>& trace,
                             const std::vector<bool>& skip, double threshold);

/// Layer sizes 151 150 100 79; params laid out W1 b1 W2 b2 W3 b3, weights
/// out x in row-major.
Vec mlp_forward(const std::vector<double>& params, const Vec& x);

struct Graph {
  std::vector<std::uint32_t> nodes;                               // all ids
  std::set<std::uint32_t> statements;                             // ids with an instruction
  std::map<std::uint32_t, std::set<std::uint32_t>> flow;          // non-control edges
};

/// For every (source, sink) pair with source != sink: among all simple
/// paths, the shortest, ties broken by the lexicographically smallest id
/// list. Enumerated exhaustively.
std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::uint32_t>> all_paths(
    const Graph& g, const std::vector<std::uint32_t>& sources, const std::vector<std::uint32_t>& sinks);

struct Counts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};
double precision(const Counts& c);
double recall(const Counts& c);
double f1(const Counts& c);
double accuracy(const Counts& c);

}  // namespace oracle

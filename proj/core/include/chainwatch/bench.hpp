#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chainwatch/engine.hpp"

namespace chainwatch {

struct LatencyStats {
  double min_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
  double mean_us = 0.0;
  std::size_t samples = 0;
};

/// Percentiles by nearest rank over a copy of `samples_us`.
LatencyStats summarize_latency(std::vector<double> samples_us);

struct BenchReport {
  LatencyStats engine_latency;
  LatencyStats naive_latency;
  double engine_comparisons_per_call = 0.0;  // per non-white-listed call
  double naive_comparisons_per_call = 0.0;
  double comparison_ratio = 0.0;  // naive / engine
  double speedup = 0.0;           // naive mean latency / engine mean latency
  std::size_t parameter_count = 0;
  std::size_t traces = 0;
  std::size_t calls = 0;
  std::size_t repetitions = 0;
  /// Traces on which the naive monitor compares at least once. Traces made
  /// only of white-listed calls are left out of the two counts below.
  std::size_t traces_compared = 0;
  /// Traces where the engine did not make strictly fewer comparisons.
  std::size_t traces_without_reduction = 0;
  /// Traces where engine comparisons exceeded naive comparisons.
  std::size_t traces_violating_bound = 0;
};

/// Times every call of every trace through both engines. One untimed
/// warm-up pass, then `repetitions` (>= 3) timed passes; latency samples are
/// per call, wall clock. Comparison counters come from the first pass.
BenchReport run_bench(const Engine& engine, const Engine& naive, std::span<const Trace> traces,
                      std::size_t repetitions, std::size_t parameter_count = kParameterCount);

}  // namespace chainwatch

#include "chainwatch/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace chainwatch {
namespace {

using Clock = std::chrono::steady_clock;

struct PassResult {
  std::vector<std::uint64_t> comparisons_per_trace;
  std::uint64_t comparisons = 0;
  std::uint64_t encoded = 0;
};

// Runs one pass; appends per-call latencies when `samples` is non-null.
PassResult run_pass(const Engine& engine, std::span<const Trace> traces,
                    std::vector<double>* samples) {
  PassResult r;
  for (const auto& trace : traces) {
    auto session = engine.session();
    for (const auto& call : trace.calls) {
      const auto t0 = Clock::now();
      session.observe(call);
      const auto t1 = Clock::now();
      if (samples != nullptr) {
        samples->push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
      }
    }
    r.comparisons_per_trace.push_back(session.summary().comparisons);
    r.comparisons += session.summary().comparisons;
    r.encoded += session.summary().encoded;
  }
  return r;
}

}  // namespace

LatencyStats summarize_latency(std::vector<double> samples_us) {
  LatencyStats s;
  s.samples = samples_us.size();
  if (samples_us.empty()) return s;
  std::sort(samples_us.begin(), samples_us.end());
  auto rank = [&](double q) {
    const auto n = samples_us.size();
    auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    return samples_us[std::clamp<std::size_t>(idx, 1, n) - 1];
  };
  s.min_us = samples_us.front();
  s.median_us = rank(0.5);
  s.p99_us = rank(0.99);
  s.mean_us = std::accumulate(samples_us.begin(), samples_us.end(), 0.0) /
              static_cast<double>(samples_us.size());
  return s;
}

BenchReport run_bench(const Engine& engine, const Engine& naive, std::span<const Trace> traces,
                      std::size_t repetitions, std::size_t parameter_count) {
  if (repetitions < 3) throw Error("bench needs at least 3 repetitions");
  BenchReport report;
  report.repetitions = repetitions;
  report.traces = traces.size();
  report.parameter_count = parameter_count;
  for (const auto& t : traces) report.calls += t.calls.size();

  // Warm-up, untimed; its counters are deterministic and reused below.
  const auto engine_counts = run_pass(engine, traces, nullptr);
  const auto naive_counts = run_pass(naive, traces, nullptr);

  std::vector<double> engine_samples, naive_samples;
  engine_samples.reserve(report.calls * repetitions);
  naive_samples.reserve(report.calls * repetitions);
  for (std::size_t r = 0; r < repetitions; ++r) {
    run_pass(engine, traces, &engine_samples);
    run_pass(naive, traces, &naive_samples);
  }
  report.engine_latency = summarize_latency(std::move(engine_samples));
  report.naive_latency = summarize_latency(std::move(naive_samples));

  auto per_call = [](const PassResult& p) {
    return p.encoded == 0 ? 0.0 : static_cast<double>(p.comparisons) / static_cast<double>(p.encoded);
  };
  report.engine_comparisons_per_call = per_call(engine_counts);
  report.naive_comparisons_per_call = per_call(naive_counts);
  report.comparison_ratio = report.engine_comparisons_per_call == 0.0
                                ? std::numeric_limits<double>::infinity()
                                : report.naive_comparisons_per_call /
                                      report.engine_comparisons_per_call;
  report.speedup = report.engine_latency.mean_us == 0.0
                       ? 0.0
                       : report.naive_latency.mean_us / report.engine_latency.mean_us;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto e = engine_counts.comparisons_per_trace[i];
    const auto n = naive_counts.comparisons_per_trace[i];
    if (n == 0) continue;
    ++report.traces_compared;
    if (e >= n) ++report.traces_without_reduction;
    if (e > n) ++report.traces_violating_bound;
  }
  return report;
}

}  // namespace chainwatch

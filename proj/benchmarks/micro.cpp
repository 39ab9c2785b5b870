#include <benchmark/benchmark.h>

#include <random>

#include "chainwatch/engine.hpp"
#include "chainwatch/synth.hpp"

using namespace chainwatch;

namespace {

struct World {
  SynthBundle bundle = synthesize({});
  EmbeddingTable table = EmbeddingTable::load(std::string(CHAINWATCH_DATA_DIR) + "/embeddings.txt");
  FingerprintDb db;
  MlpModel model = MlpModel::glorot_uniform(1);
  std::vector<InstructionCall> calls;

  World() {
    for (const auto& fp : bundle.fingerprints) db.add(fp, table);
    for (const auto& p : bundle.programs)
      for (const auto& n : p.nodes())
        if (n.instruction) calls.push_back(*n.instruction);
    std::shuffle(calls.begin(), calls.end(), std::mt19937_64(4));
  }
};

const World& world() {
  static const World w;
  return w;
}

void BM_Encode(benchmark::State& state) {
  const auto& w = world();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(encode(w.calls[i++ % w.calls.size()], w.table));
  }
}
BENCHMARK(BM_Encode);

void BM_Forward(benchmark::State& state) {
  const auto& w = world();
  const auto x = encode(w.calls.front(), w.table);
  for (auto _ : state) benchmark::DoNotOptimize(forward(w.model, x));
}
BENCHMARK(BM_Forward);

void BM_MonitorStepAll(benchmark::State& state) {
  const auto& w = world();
  StateTable table(w.db);
  const auto ids = w.db.ids();
  std::vector<FeatureVector> xs;
  for (const auto& c : w.calls) xs.push_back(encode(c, w.table));
  std::vector<MonitorEvent> events;
  std::size_t i = 0;
  for (auto _ : state) {
    events.clear();
    table.step(ids, xs[i % xs.size()], i, kDefaultCosineThreshold, events);
    ++i;
  }
}
BENCHMARK(BM_MonitorStepAll);

// Per call through the whole pipeline; arg 0 = naive, 1 = classifier-gated.
void BM_Observe(benchmark::State& state) {
  const auto& w = world();
  ModelNominator nominator(w.model, w.db, 0.5);
  Engine engine(w.db, w.bundle.whitelist, w.table, state.range(0) ? &nominator : nullptr, {});
  auto session = engine.session();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(session.observe(w.calls[i++ % w.calls.size()]));
  state.counters["comparisons_per_call"] = session.summary().comparisons_per_encoded_call();
}
BENCHMARK(BM_Observe)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();

// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chainwatch/bench.hpp"
#include "chainwatch/corpus.hpp"
#include "chainwatch/engine.hpp"
#include "chainwatch/evaluate.hpp"
#include "chainwatch/synth.hpp"
#include "metric_fixtures.hpp"
#include "oracles/oracles.hpp"
#include "random_sdg.hpp"
#include "support.hpp"

using namespace chainwatch;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::vector<double> vec(const FeatureVector& x) { return {x.begin(), x.end()}; }

Outcome encoding() {
  Outcome o{true, ""};
  auto check = [&](bool ok, const std::string& what) {
    if (!ok && o.pass) o.detail = what;
    o.pass = o.pass && ok;
  };
  check(kNameOffset == 0 && kCategoryOffset == 70 && kScopeOffset == 79 && kPackageOffset == 81 &&
            kInputOffset == 103 && kOutputOffset == 127 && kFeatureDim == 151,
        "layout offsets");

  const char* names[9] = {"binaryop",     "conversion",    "getCaughtException",
                          "getstatic",    "invokeinterface", "invokespecial",
                          "invokestatic", "invokevirtual", "phi"};
  EmbeddingTable table;
  for (std::size_t r = 0; r < 9; ++r) {
    const auto cat = parse_category(names[r]);
    check(cat.has_value(), std::string("category ") + names[r]);
    if (!cat) continue;
    InstructionCall c = testing_support::parse(std::string("api_name=x category=") + names[r] +
                                               " scope=Primordial package=Ljava/lang/String inputs= outputs=");
    const auto x = encode(c, table);
    for (std::size_t k = 0; k < 9; ++k) {
      check(x[kCategoryOffset + k] == (k == r ? 1.0 : 0.0), std::string("one-hot row ") + names[r]);
    }
  }

  const auto log = testing_support::parse(
      "api_name=log category=invokevirtual scope=Primordial package=Ljava/util/logging/Logger "
      "inputs=Ljava/util/logging/Level,Ljava/lang/String,Ljava/lang/Throwable outputs=V");
  const auto x = encode(log, table);
  const auto& io = Vocabulary::defaults().io_types.ids();
  const char* order[4] = {"Ljava/lang/String", "Ljava/util/logging/Level", "Ljava/lang/Throwable",
                          "Ljava/io/File"};
  for (std::size_t k = 0; k < 4; ++k) check(io.size() > k && io[k] == order[k], "io vocabulary order");
  check(x[kInputOffset] == 1.0 && x[kInputOffset + 1] == 1.0 && x[kInputOffset + 2] == 1.0 &&
            x[kInputOffset + 3] == 0.0,
        "log frequency vector");
  if (o.pass) o.detail = "layout [70|9|2|22|24|24], 9x9 one-hot table, log -> 1,1,1,0";
  return o;
}

Outcome gradients() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0, weakest_flip = 1e300;
  for (int i = 0; i < 20; ++i) {
    const auto model = MlpModel::glorot_uniform(100 + i);
    std::vector<double> x(kFeatureDim);
    for (auto& v : x) v = u(rng);
    LabelSet t;
    for (std::size_t k = 0; k < kExploitCount; ++k) t[k] = rng() % 8 == 0;
    worst = std::max(worst, grad_check(model, x, t, 1e-5, i).max_relative_error);

    const auto block = static_cast<Block>(i % kBlockCount);
    auto flipped = [block](const MlpModel& m, std::span<const double> xx, const LabelSet& tt) {
      auto g = gradient(m, xx, tt);
      const auto off = MlpModel::block_offset(block);
      for (std::size_t k = off; k < off + MlpModel::block_size(block); ++k) g[k] = -g[k];
      return g;
    };
    weakest_flip =
        std::min(weakest_flip, grad_check(model, x, t, 1e-5, i, 20, flipped).max_relative_error);
  }
  return {worst <= 1e-4 && weakest_flip > 1e-1,
          "max rel err " + fmt(worst) + " over 20 pairs; sign flip min " + fmt(weakest_flip)};
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(3);
  EmbeddingTable table;
  WhiteList whitelist{"phi"};
  const auto phi = testing_support::parse(
      "api_name=phi category=phi scope=Primordial package=Ljava/lang/Integer inputs=I,I outputs=I");
  std::size_t agree = 0, alarms = 0;
  for (int round = 0; round < 100; ++round) {
    FingerprintDb db;
    std::vector<oracle::NaiveFingerprint> odb;
    std::vector<ExploitId> ids(kExploitCount);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<ExploitId>(i);
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto n = 1 + rng() % 10;
    for (std::size_t e = 0; e < n; ++e) {
      FingerprintSpec spec;
      spec.exploit_id = ids[e];
      spec.cwe_id = "CWE-" + std::to_string(rng() % 5);
      for (auto len = 1 + rng() % 6; len > 0; --len) {
        spec.templates.push_back(testing_support::random_call(rng));
      }
      db.add(spec, table);
      oracle::NaiveFingerprint o{spec.exploit_id, {}};
      for (const auto& c : spec.templates) o.templates.push_back(vec(encode(c, table)));
      odb.push_back(o);
    }

    Trace trace;
    const auto length = 1 + rng() % 200;
    while (trace.calls.size() < length) {
      const auto r = rng() % 10;
      if (r < 3) {
        const auto& fp = db.fingerprints()[rng() % db.size()];
        for (const auto& c : fp.templates) {
          if (trace.calls.size() < length) trace.calls.push_back(c);
        }
      } else if (r < 4) {
        trace.calls.push_back(phi);
      } else {
        trace.calls.push_back(testing_support::random_call(rng));
      }
    }
    std::vector<oracle::Vec> xs;
    std::vector<bool> skip;
    for (const auto& c : trace.calls) {
      xs.push_back(vec(encode(c, table)));
      skip.push_back(whitelist.contains(c.api_name));
    }

    AllExploitsNominator all(db);
    Engine engine(db, whitelist, table, &all, {});
    std::set<oracle::Alarm> got;
    for (const auto& a : engine.detect(trace).alarms) got.insert({a.exploit_id, a.trace_offset});
    const auto want = oracle::naive_alarms(odb, xs, skip, kDefaultCosineThreshold);
    agree += got == want;
    alarms += want.size();
  }
  return {agree == 100, std::to_string(agree) + "/100 databases agree, " + std::to_string(alarms) +
                            " oracle alarms"};
}

// Synthesises `exploits` fingerprints, writes a padded corpus and trains on
// its train split.
struct Trained {
  SynthBundle bundle;
  EmbeddingTable table;
  FingerprintDb db;
  MlpModel model;
  DatasetSummary summary;
  std::vector<LabeledTrace> train;
  std::vector<LabeledTrace> test;
  std::size_t examples = 0;
};

Trained build_and_train(std::size_t exploits, std::size_t repeat, std::size_t benign,
                        const fs::path& dir) {
  Trained t;
  SynthConfig sc;
  sc.exploits = exploits;
  t.bundle = synthesize(sc);
  t.table = EmbeddingTable::load(testing_support::data_dir() / "embeddings.txt");
  for (const auto& fp : t.bundle.fingerprints) t.db.add(fp, t.table);

  DatasetConfig dc;
  dc.padding.benign_ratio = 0.4;
  dc.padding.repeat = repeat;
  dc.padding.benign_traces = benign;
  dc.padding.seed = 11;
  dc.split = 0.85;
  dc.seed = 5;
  fs::remove_all(dir);
  t.summary = generate_dataset(t.bundle.programs, t.bundle.fingerprints, dc, dir);
  t.train = read_corpus(dir, Split::kTrain);
  t.test = read_corpus(dir, Split::kTest);

  const auto examples = make_examples(t.train, t.table, &t.bundle.whitelist);
  t.examples = examples.size();
  TrainConfig tc;
  tc.learning_rate = 0.5;
  tc.epochs = 30;
  t.model = train(examples, tc);
  return t;
}

Outcome end_to_end(const fs::path& work) {
  const auto t = build_and_train(20, 100, 400, work / "corpus20");
  std::size_t fewest = SIZE_MAX;
  for (const auto& [id, n] : t.summary.sequences_per_exploit) fewest = std::min(fewest, n * 100);
  ModelNominator nominator(t.model, t.db, 0.5);
  Engine engine(t.db, t.bundle.whitelist, t.table, &nominator, {});
  const auto report = evaluate_alarms(engine, t.test);
  const double share = static_cast<double>(t.train.size()) /
                       static_cast<double>(t.train.size() + t.test.size());
  const bool ok = report.macro.f1 >= 0.95 && fewest >= 200 && std::abs(share - 0.85) < 0.01;
  return {ok, "held-out macro-F1 " + fmt(report.macro.f1) + " over " + std::to_string(report.labels.size()) +
                  " exploits, " + std::to_string(t.train.size()) + " train / " +
                  std::to_string(t.test.size()) + " test traces, >= " + std::to_string(fewest) +
                  " traces per exploit"};
}

std::pair<std::uint64_t, std::uint64_t> count_comparisons(const Engine& engine,
                                                          std::span<const LabeledTrace> traces) {
  std::uint64_t comparisons = 0, encoded = 0;
  for (const auto& t : traces) {
    const auto r = engine.detect(t.trace);
    comparisons += r.summary.comparisons;
    encoded += r.summary.encoded;
  }
  return {comparisons, encoded};
}

Outcome comparison_reduction(const Trained& t) {
  const auto start = Clock::now();
  ModelNominator nominator(t.model, t.db, 0.5);
  Engine engine(t.db, t.bundle.whitelist, t.table, &nominator, {});
  Engine naive(t.db, t.bundle.whitelist, t.table, nullptr, {});
  const auto e1 = count_comparisons(engine, t.test);
  const auto e2 = count_comparisons(engine, t.test);
  const auto n = count_comparisons(naive, t.test);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const double ratio = e1.first == 0 ? 0.0
                                     : static_cast<double>(n.first) / static_cast<double>(e1.first);
  const bool ok = t.db.size() == 79 && ratio >= 8.0 && e1 == e2 && seconds < 60.0;
  return {ok, "ratio " + fmt(ratio) + " (naive " + std::to_string(n.first) + ", engine " +
                  std::to_string(e1.first) + " comparisons over " + std::to_string(e1.second) +
                  " calls), repeat identical: " + (e1 == e2 ? "yes" : "no") + ", counted in " +
                  fmt(seconds, 3) + " s"};
}

Outcome metrics() {
  std::size_t matched = 0;
  for (const auto& f : testing_support::kMetricFixtures) {
    const Confusion c{f.tp, f.fp, f.tn, f.fn};
    matched += precision(c) == f.precision.value() && recall(c) == f.recall.value() &&
               f1(c) == f.f1.value() && accuracy(c) == f.accuracy.value();
  }
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::uint64_t> d(0, 30);
  std::vector<Confusion> table(kExploitCount);
  for (auto& c : table) {
    c = {d(rng), d(rng), d(rng), d(rng)};
    if (rng() % 5 == 0) c.tp = c.fn = 0;
  }
  const auto m = macro_average(table);
  double p = 0, r = 0, f = 0, a = 0;
  for (const auto& c : table) {
    const oracle::Counts o{c.tp, c.fp, c.tn, c.fn};
    p += oracle::precision(o);
    r += oracle::recall(o);
    f += oracle::f1(o);
    a += oracle::accuracy(o);
  }
  const double err = std::max({std::abs(m.precision - p / 79), std::abs(m.recall - r / 79),
                               std::abs(m.f1 - f / 79), std::abs(m.accuracy - a / 79)});
  return {matched == 10 && err <= 1e-12,
          std::to_string(matched) + "/10 fixtures exact, macro deviation " + fmt(err)};
}

Outcome sdg_matching() {
  const auto g = load_sdg(testing_support::data_dir() / "fixtures" / "sqli.sdg");
  std::ifstream in(testing_support::data_dir() / "fixtures" / "sqli.fp");
  const auto specs = parse_fingerprint_specs(in, Vocabulary::defaults());
  const auto seqs = match_query(g, lower_fingerprint(specs.at(0)));
  std::vector<std::string> names;
  if (seqs.size() == 1) {
    for (const auto& c : seqs[0]) names.push_back(c.api_name);
  }
  const bool fixture = g.nodes().size() <= 8 &&
                       names == std::vector<std::string>{"readLine", "concat", "executeQuery"};

  std::mt19937_64 rng(7);
  const auto q = testing_support::sqli_query();
  std::size_t agree = 0, paths = 0;
  for (int round = 0; round < 200; ++round) {
    const auto sdg = testing_support::random_sdg(rng, 12);
    std::vector<std::uint32_t> sources, sinks;
    for (const auto& n : sdg.nodes()) {
      if (!n.instruction) continue;
      if (template_matches(*n.instruction, q.sources[0])) sources.push_back(n.id);
      if (template_matches(*n.instruction, q.sinks[0])) sinks.push_back(n.id);
    }
    const auto want = oracle::all_paths(testing_support::to_graph(sdg), sources, sinks);
    const auto got = match_query_paths(sdg, q);
    bool same = got.size() == want.size();
    for (const auto& p : got) {
      auto it = want.find({p.source, p.sink});
      same = same && it != want.end() && it->second == p.nodes;
    }
    agree += same;
    paths += want.size();
  }
  std::string shown;
  for (const auto& n : names) shown += (shown.empty() ? "" : ",") + n;
  return {fixture && agree == 200, "fixture [" + shown + "], " + std::to_string(agree) +
                                       "/200 random graphs agree (" + std::to_string(paths) + " paths)"};
}

Outcome pipeline_ordering(const Trained& t) {
  std::mt19937_64 rng(8);
  std::vector<InstructionCall> listed, plain;
  for (const auto& p : t.bundle.programs) {
    for (const auto& n : p.nodes()) {
      if (!n.instruction) continue;
      (t.bundle.whitelist.contains(n.instruction->api_name) ? listed : plain).push_back(*n.instruction);
    }
  }
  Trace trace;
  std::vector<bool> mask(1000, false);
  std::fill(mask.begin(), mask.begin() + 300, true);
  std::shuffle(mask.begin(), mask.end(), rng);
  for (bool w : mask) {
    const auto& pool = w ? listed : plain;
    trace.calls.push_back(pool[rng() % pool.size()]);
  }
  ModelNominator nominator(t.model, t.db, 0.5);
  Engine engine(t.db, t.bundle.whitelist, t.table, &nominator, {});
  const auto s = engine.detect(trace).summary;
  const bool ok = s.calls == 1000 && s.whitelisted == 300 && s.classifier_invocations == 700 &&
                  s.comparisons_on_whitelisted == 0;
  return {ok, "classifier invocations " + std::to_string(s.classifier_invocations) +
                  ", white-listed " + std::to_string(s.whitelisted) + ", comparisons on white-listed " +
                  std::to_string(s.comparisons_on_whitelisted)};
}

Outcome latency(const Trained& t) {
  ModelNominator nominator(t.model, t.db, 0.5);
  Engine engine(t.db, t.bundle.whitelist, t.table, &nominator, {});
  Engine naive(t.db, t.bundle.whitelist, t.table, nullptr, {});
  std::vector<Trace> traces;
  for (const auto& lt : t.test) traces.push_back(lt.trace);
  const auto r = run_bench(engine, naive, traces, 3);
  const bool soft = r.engine_latency.median_us < 100.0;
  const bool hard = r.traces_compared > 0 && r.traces_without_reduction == 0;
  return {hard, "median " + fmt(r.engine_latency.median_us) + " us (soft target " +
                    (soft ? "met" : "missed") + "), naive median " + fmt(r.naive_latency.median_us) +
                    " us, " + std::to_string(r.traces_compared - r.traces_without_reduction) + "/" +
                    std::to_string(r.traces_compared) + " traces with fewer comparisons than naive"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Runs the acceptance criteria and prints one line per criterion."};
  fs::path work = fs::temp_directory_path() / "chainwatch_acceptance";
  app.add_option("--work-dir", work, "Scratch directory for generated corpora");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  int failed = 0;
  auto run = [&](const std::string& name, double limit_s, const std::function<Outcome()>& fn) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_time = limit_s <= 0.0 || s < limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "PASS " : "FAIL ") << name << " (" << fmt(s, 3) << " s";
    if (limit_s > 0.0) std::cout << ", limit " << limit_s << " s";
    std::cout << "): " << o.detail << (in_time ? "" : " [over time]") << std::endl;
  };

  run("1 encoding", 1.0, encoding);
  run("2 gradients", 10.0, gradients);
  run("3 oracle-equivalence", 30.0, oracle_equivalence);
  run("4 end-to-end", 300.0, [&] { return end_to_end(work); });

  // Criteria 5, 8 and 9 share one trained 79-exploit setup.
  std::optional<Trained> full;
  {
    const auto start = Clock::now();
    try {
      full = build_and_train(79, 10, 200, work / "corpus79");
      std::cout << "setup 79-exploit corpus and classifier: "
                << fmt(std::chrono::duration<double>(Clock::now() - start).count(), 3) << " s, "
                << full->examples << " training examples" << std::endl;
    } catch (const std::exception& e) {
      std::cout << "setup 79-exploit corpus raised: " << e.what() << std::endl;
    }
  }
  auto with_full = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!full) return {false, "79-exploit setup unavailable"};
      return fn(*full);
    };
  };
  run("5 comparison-reduction", 60.0, with_full(comparison_reduction));
  run("6 metrics", 0.0, metrics);
  run("7 sdg-matching", 10.0, sdg_matching);
  run("8 pipeline-ordering", 0.0, with_full(pipeline_ordering));
  run("9 latency", 0.0, with_full(latency));

  std::cout << (9 - failed) << "/9 criteria passed" << std::endl;
  return failed;
}

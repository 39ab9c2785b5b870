#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "chainwatch/bench.hpp"
#include "chainwatch/corpus.hpp"
#include "chainwatch/engine.hpp"
#include "chainwatch/evaluate.hpp"
#include "chainwatch/synth.hpp"

namespace cli {
namespace fs = std::filesystem;
using nlohmann::json;
using namespace chainwatch;

namespace {

Vocabulary load_vocab(const Options& o) {
  return o.paths.vocab_dir.empty() ? Vocabulary::defaults() : Vocabulary::load_dir(o.paths.vocab_dir);
}

EmbeddingTable load_table(const Options& o) {
  return o.paths.embeddings.empty() ? EmbeddingTable{} : EmbeddingTable::load(o.paths.embeddings);
}

// Files as given; directories contribute their `ext` files in name order.
std::vector<fs::path> expand(const std::vector<std::string>& inputs, std::string_view ext) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    if (!fs::is_directory(in)) {
      if (!fs::exists(in)) throw Error("no such file: " + in);
      out.emplace_back(in);
      continue;
    }
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(in)) {
      if (e.is_regular_file() && e.path().extension() == ext) found.push_back(e.path());
    }
    std::sort(found.begin(), found.end());
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw Error("cannot write " + path);
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

EngineConfig engine_config(const Options& o) {
  EngineConfig c;
  c.model = o.paths.model;
  c.fingerprints = o.paths.fingerprints;
  c.whitelist = o.paths.whitelist;
  c.embeddings = o.paths.embeddings;
  c.vocab_dir = o.paths.vocab_dir;
  c.threshold_classify = o.threshold_classify;
  c.threshold_cosine = o.threshold_cosine;
  c.halt_on_alarm = o.halt_on_alarm;
  c.seed = o.seed;
  c.validate();
  return c;
}

json summary_json(const SessionSummary& s) {
  return {{"calls", s.calls},
          {"whitelisted", s.whitelisted},
          {"encoded", s.encoded},
          {"classifier_invocations", s.classifier_invocations},
          {"empty_candidate_calls", s.empty_candidate_calls},
          {"monitor_steps", s.monitor_steps},
          {"comparisons", s.comparisons},
          {"comparisons_on_whitelisted", s.comparisons_on_whitelisted},
          {"comparisons_per_encoded_call", s.comparisons_per_encoded_call()},
          {"alarms", s.alarms}};
}

void add_summary(SessionSummary& total, const SessionSummary& s) {
  total.calls += s.calls;
  total.whitelisted += s.whitelisted;
  total.encoded += s.encoded;
  total.classifier_invocations += s.classifier_invocations;
  total.empty_candidate_calls += s.empty_candidate_calls;
  total.monitor_steps += s.monitor_steps;
  total.comparisons += s.comparisons;
  total.comparisons_on_whitelisted += s.comparisons_on_whitelisted;
  total.alarms += s.alarms;
}

std::vector<LabelSet> read_label_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<LabelSet> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_labels(line));
  }
  return out;
}

json row_json(const Confusion& c) {
  return {{"tp", c.tp},
          {"fp", c.fp},
          {"fn", c.fn},
          {"tn", c.tn},
          {"precision", precision(c)},
          {"recall", recall(c)},
          {"f1", f1(c)},
          {"accuracy", accuracy(c)}};
}

void print_report(std::ostream& out, const EvalReport& r, const FingerprintDb* db, bool as_json,
                  const std::string& level) {
  std::map<std::string, std::vector<std::uint32_t>> groups;
  if (db != nullptr) {
    for (auto id : r.labels) {
      if (db->contains(static_cast<ExploitId>(id))) groups[db->at(static_cast<ExploitId>(id)).cwe_id].push_back(static_cast<std::uint32_t>(id));
    }
  }
  const auto pooled = pool(r.table, groups);

  if (as_json) {
    json j;
    j["level"] = level;
    j["items"] = r.items;
    j["labels"] = r.labels;
    json rows = json::array();
    for (auto id : r.labels) {
      auto row = row_json(r.table[id]);
      row["exploit_id"] = id;
      if (db != nullptr && db->contains(static_cast<ExploitId>(id))) {
        row["cwe_id"] = db->at(static_cast<ExploitId>(id)).cwe_id;
      }
      rows.push_back(row);
    }
    j["per_exploit"] = rows;
    json cwe = json::object();
    for (const auto& [name, c] : pooled) cwe[name] = row_json(c);
    j["per_cwe_pooled"] = cwe;
    j["macro"] = {{"precision", r.macro.precision},
                  {"recall", r.macro.recall},
                  {"f1", r.macro.f1},
                  {"accuracy", r.macro.accuracy}};
    out << j.dump(2) << '\n';
    return;
  }

  auto line = [&](const std::string& name, const std::string& cwe, double p, double rc, double f,
                  double a) {
    out << std::left << std::setw(10) << name << std::setw(10) << cwe << std::right << std::fixed
        << std::setprecision(4) << std::setw(10) << p << std::setw(10) << rc << std::setw(10) << f
        << std::setw(10) << a << '\n';
  };
  out << "# " << level << "-level, " << r.items << " items\n";
  out << std::left << std::setw(10) << "exploit" << std::setw(10) << "cwe" << std::right
      << std::setw(10) << "precision" << std::setw(10) << "recall" << std::setw(10) << "f1"
      << std::setw(10) << "accuracy" << '\n';
  for (auto id : r.labels) {
    const auto& c = r.table[id];
    std::string cwe = "-";
    if (db != nullptr && db->contains(static_cast<ExploitId>(id))) cwe = db->at(static_cast<ExploitId>(id)).cwe_id;
    line(std::to_string(id), cwe, precision(c), recall(c), f1(c), accuracy(c));
  }
  line("macro", "", r.macro.precision, r.macro.recall, r.macro.f1, r.macro.accuracy);
  if (!pooled.empty()) {
    out << "# per CWE, pooled counts\n";
    for (const auto& [name, c] : pooled) line("pooled", name, precision(c), recall(c), f1(c), accuracy(c));
  }
}

}  // namespace

int run_encode(const Options& o) {
  const auto vocab = load_vocab(o);
  const auto table = load_table(o);
  Output out(o.paths.out);
  auto& os = out.get();
  os << std::setprecision(17);
  for (const auto& path : expand(o.inputs, ".trace")) {
    const auto trace = read_trace_file(path.string(), vocab);
    for (const auto& call : trace.calls) {
      const auto x = encode(call, table);
      for (std::size_t i = 0; i < x.size(); ++i) os << (i == 0 ? "" : " ") << x[i];
      os << '\n';
    }
  }
  return kClean;
}

int run_train(const Options& o) {
  const auto vocab = load_vocab(o);
  const auto table = load_table(o);
  const auto whitelist = o.paths.whitelist.empty() ? WhiteList{} : WhiteList::load(o.paths.whitelist);
  const auto traces = read_corpus(o.corpus, Split::kTrain, vocab);
  const auto examples = make_examples(traces, table, &whitelist);

  TrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch;
  cfg.seed = o.seed;
  TrainLog log;
  const auto model = train(examples, cfg, &log);
  save_model(model, o.paths.out);

  json j = {{"model", o.paths.out},
            {"traces", traces.size()},
            {"examples", examples.size()},
            {"epochs", cfg.epochs},
            {"batch", cfg.batch_size},
            {"lr", cfg.learning_rate},
            {"seed", cfg.seed},
            {"parameter_count", kParameterCount},
            {"initial_loss", log.initial_loss},
            {"final_loss", log.epoch_loss.empty() ? log.initial_loss : log.epoch_loss.back()},
            {"epoch_loss", log.epoch_loss}};
  std::cout << j.dump() << '\n';
  return kClean;
}

int run_detect(const Options& o, bool naive) {
  const auto config = engine_config(o);
  const auto res = EngineResources::load(config);
  std::unique_ptr<Nominator> nominator;
  if (!naive) nominator = std::make_unique<ModelNominator>(*res.model, res.db, config.threshold_classify);
  const Engine engine(res.db, res.whitelist, res.embeddings, nominator.get(), config);

  Output out(o.paths.out);
  SessionSummary total;
  std::size_t traces = 0;
  for (const auto& path : expand(o.inputs, ".trace")) {
    const auto trace = read_trace_file(path.string(), res.vocab);
    auto session = engine.session();
    for (const auto& call : trace.calls) {
      for (const auto& a : session.observe(call)) {
        json rec = {{"trace", path.string()},
                    {"offset", a.trace_offset},
                    {"exploit_id", a.exploit_id},
                    {"cwe_id", std::string(a.cwe_id)},
                    {"similarity", a.similarity}};
        out.get() << rec.dump() << '\n';
      }
      if (session.summary().halted) break;
    }
    add_summary(total, session.summary());
    ++traces;
  }
  auto summary = summary_json(total);
  summary["mode"] = naive ? "naive" : "engine";
  summary["traces"] = traces;
  summary["fingerprints"] = res.db.size();
  std::cerr << summary.dump() << '\n';
  return total.alarms > 0 ? kAlarms : kClean;
}

int run_gen_dataset(const Options& o) {
  const auto vocab = load_vocab(o);
  std::vector<Sdg> programs;
  for (const auto& p : expand(o.sdg, ".sdg")) programs.push_back(load_sdg(p, vocab));
  std::ifstream fp(o.paths.fingerprints);
  if (!fp) throw Error("cannot open " + o.paths.fingerprints);
  const auto specs = parse_fingerprint_specs(fp, vocab);

  DatasetConfig cfg;
  cfg.padding.benign_ratio = o.benign_ratio;
  cfg.padding.repeat = o.repeat;
  cfg.padding.benign_traces = o.benign_traces;
  cfg.split = o.split;
  cfg.seed = o.seed;
  const auto s = generate_dataset(programs, specs, cfg, o.paths.out, vocab);

  json per = json::object();
  for (const auto& [id, n] : s.sequences_per_exploit) per[std::to_string(id)] = n;
  json j = {{"out", o.paths.out},
            {"programs", programs.size()},
            {"fingerprints", specs.size()},
            {"sequences", s.sequences},
            {"train_traces", s.train_traces},
            {"test_traces", s.test_traces},
            {"benign_traces", s.benign_traces},
            {"filler_pool", s.filler_pool},
            {"sequences_per_exploit", per}};
  std::cout << j.dump() << '\n';
  return kClean;
}

int run_eval(const Options& o) {
  if (!o.pred.empty() || !o.truth.empty()) {
    if (o.pred.empty() || o.truth.empty()) throw Error("--pred and --truth go together");
    const auto pred = read_label_file(o.pred);
    const auto truth = read_label_file(o.truth);
    if (pred.size() != truth.size()) {
      throw Error("--pred has " + std::to_string(pred.size()) + " lines, --truth has " +
                  std::to_string(truth.size()));
    }
    EvalReport r;
    r.table.assign(kExploitCount, Confusion{});
    LabelSet seen;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      chainwatch::accumulate(pred[i], truth[i], r.table);
      seen |= pred[i] | truth[i];
    }
    for (std::size_t i = 0; i < kExploitCount; ++i) {
      if (seen[i]) r.labels.push_back(i);
    }
    r.items = pred.size();
    r.macro = macro_average(r.table, r.labels);
    std::unique_ptr<FingerprintDb> db;
    if (!o.paths.fingerprints.empty()) {
      db = std::make_unique<FingerprintDb>(load_fingerprints(o.paths.fingerprints, load_table(o), load_vocab(o)));
    }
    print_report(std::cout, r, db.get(), o.json, "label");
    return kClean;
  }

  if (o.corpus.empty() || o.paths.model.empty()) {
    throw Error("eval needs --pred/--truth, or --corpus with --model");
  }
  const auto split = o.which == "train" ? Split::kTrain : Split::kTest;
  if (o.level == "call") {
    const auto vocab = load_vocab(o);
    const auto table = load_table(o);
    const auto whitelist = o.paths.whitelist.empty() ? WhiteList{} : WhiteList::load(o.paths.whitelist);
    const auto traces = read_corpus(o.corpus, split, vocab);
    const auto model = load_model(o.paths.model);
    const auto r = evaluate_classifier(model, make_examples(traces, table, &whitelist), o.threshold_classify);
    std::unique_ptr<FingerprintDb> db;
    if (!o.paths.fingerprints.empty()) {
      db = std::make_unique<FingerprintDb>(load_fingerprints(o.paths.fingerprints, table, vocab));
    }
    print_report(std::cout, r, db.get(), o.json, "call");
    return kClean;
  }
  if (o.paths.fingerprints.empty()) throw Error("trace-level eval needs --fingerprints");
  const auto config = engine_config(o);
  const auto res = EngineResources::load(config);
  const ModelNominator nominator(*res.model, res.db, config.threshold_classify);
  const Engine engine(res.db, res.whitelist, res.embeddings, &nominator, config);
  const auto traces = read_corpus(o.corpus, split, res.vocab);
  print_report(std::cout, evaluate_alarms(engine, traces), &res.db, o.json, "trace");
  return kClean;
}

int run_bench(const Options& o) {
  const auto config = engine_config(o);
  const auto res = EngineResources::load(config);
  const ModelNominator nominator(*res.model, res.db, config.threshold_classify);
  const Engine engine(res.db, res.whitelist, res.embeddings, &nominator, config);
  const Engine naive(res.db, res.whitelist, res.embeddings, nullptr, config);
  std::vector<Trace> traces;
  for (auto& lt : read_corpus(o.corpus, o.which == "train" ? Split::kTrain : Split::kTest, res.vocab)) {
    traces.push_back(std::move(lt.trace));
  }
  const auto r = chainwatch::run_bench(engine, naive, traces, o.repetitions);

  auto lat = [](const LatencyStats& s) {
    return json{{"min_us", s.min_us},
                {"median_us", s.median_us},
                {"p99_us", s.p99_us},
                {"mean_us", s.mean_us},
                {"samples", s.samples}};
  };
  json j = {{"traces", r.traces},
            {"calls", r.calls},
            {"repetitions", r.repetitions},
            {"fingerprints", res.db.size()},
            {"parameter_count", r.parameter_count},
            {"engine_latency", lat(r.engine_latency)},
            {"naive_latency", lat(r.naive_latency)},
            {"engine_comparisons_per_call", r.engine_comparisons_per_call},
            {"naive_comparisons_per_call", r.naive_comparisons_per_call},
            {"comparison_ratio", r.comparison_ratio},
            {"speedup", r.speedup},
            {"traces_compared", r.traces_compared},
            {"traces_without_reduction", r.traces_without_reduction},
            {"traces_violating_bound", r.traces_violating_bound}};
  Output out(o.paths.out);
  out.get() << j.dump(2) << '\n';
  return kClean;
}

int run_synth(const Options& o) {
  SynthConfig cfg;
  cfg.exploits = o.exploits;
  cfg.variants = o.variants;
  cfg.distractors = o.distractors;
  cfg.seed = o.synth_seed;
  const auto bundle = synthesize(cfg);
  write_synth(o.paths.out, bundle, load_vocab(o));
  json j = {{"out", o.paths.out},
            {"fingerprints", bundle.fingerprints.size()},
            {"programs", bundle.programs.size()},
            {"whitelist", bundle.whitelist.size()}};
  std::cout << j.dump() << '\n';
  return kClean;
}

}  // namespace cli

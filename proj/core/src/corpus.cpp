#include "chainwatch/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace chainwatch {
namespace {

std::string call_key(const InstructionCall& c) {
  std::string key = c.api_name;
  key += '|';
  key += std::to_string(static_cast<int>(c.category));
  key += '|';
  key += std::to_string(static_cast<int>(c.scope));
  key += '|';
  key += std::to_string(c.package);
  for (const auto* counts : {&c.inputs, &c.outputs}) {
    key += '|';
    for (auto n : *counts) {
      key += std::to_string(n);
      key += ',';
    }
  }
  return key;
}

std::string trace_name(std::size_t index) {
  std::string s = std::to_string(index);
  return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

std::string_view split_dir(Split s) { return s == Split::kTrain ? "train" : "test"; }

}  // namespace

void CallLabeler::add_sequence(const InstructionSequence& seq, ExploitId exploit) {
  for (const auto& call : seq) labels_[call_key(call)].set(exploit);
}

LabelSet CallLabeler::labels_for(const InstructionCall& call) const {
  auto it = labels_.find(call_key(call));
  return it == labels_.end() ? LabelSet{} : it->second;
}

bool CallLabeler::contains(const InstructionCall& call) const {
  return labels_.contains(call_key(call));
}

std::vector<LabeledTrace> emit_corpus(std::span<const InstructionSequence> sequences,
                                      ExploitId exploit_id, const PaddingConfig& config,
                                      std::span<const InstructionCall> filler,
                                      const CallLabeler* labeler) {
  if (exploit_id >= kExploitCount) throw Error("exploit_id outside the label space");
  if (!(config.benign_ratio >= 0.0 && config.benign_ratio < 1.0)) {
    throw Error("benign ratio must lie in [0, 1)");
  }
  if (sequences.empty() && config.benign_traces == 0) {
    throw Error("emit_corpus needs sequences or benign-only traces");
  }
  if (filler.empty() && (config.benign_traces > 0 || config.benign_ratio > 0.0)) {
    throw Error("padding needs a non-empty filler pool");
  }
  if (config.benign_min_length == 0 || config.benign_min_length > config.benign_max_length) {
    throw Error("benign trace length range is empty");
  }

  std::mt19937_64 rng(config.seed * 0x100000001B3ULL + exploit_id);
  std::uniform_int_distribution<std::size_t> pick_filler(0, filler.empty() ? 0 : filler.size() - 1);
  auto filler_labels = [&](const InstructionCall& c) {
    return labeler != nullptr ? labeler->labels_for(c) : LabelSet{};
  };

  std::vector<LabeledTrace> out;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& seq = sequences[s];
    if (seq.empty()) continue;
    const auto n_filler = static_cast<std::size_t>(std::llround(
        static_cast<double>(seq.size()) * config.benign_ratio / (1.0 - config.benign_ratio)));
    for (std::size_t r = 0; r < config.repeat; ++r) {
      std::vector<bool> is_filler(seq.size() + n_filler, false);
      std::fill(is_filler.begin(), is_filler.begin() + static_cast<std::ptrdiff_t>(n_filler), true);
      std::shuffle(is_filler.begin(), is_filler.end(), rng);

      LabeledTrace lt;
      lt.trace.source_id = "exploit" + std::to_string(exploit_id) + "/seq" + std::to_string(s) +
                           "/rep" + std::to_string(r);
      lt.planted.set(exploit_id);
      std::size_t next = 0;
      for (bool f : is_filler) {
        if (f) {
          const auto& call = filler[pick_filler(rng)];
          lt.trace.calls.push_back(call);
          lt.labels.push_back(filler_labels(call));
        } else {
          const auto& call = seq[next++];
          lt.trace.calls.push_back(call);
          LabelSet labels = labeler != nullptr ? labeler->labels_for(call) : LabelSet{};
          labels.set(exploit_id);
          lt.labels.push_back(labels);
        }
      }
      out.push_back(std::move(lt));
    }
  }

  std::uniform_int_distribution<std::size_t> pick_len(config.benign_min_length,
                                                      config.benign_max_length);
  for (std::size_t b = 0; b < config.benign_traces; ++b) {
    LabeledTrace lt;
    lt.trace.source_id = "benign/" + std::to_string(b);
    const auto len = pick_len(rng);
    for (std::size_t i = 0; i < len; ++i) {
      const auto& call = filler[pick_filler(rng)];
      lt.trace.calls.push_back(call);
      lt.labels.push_back(filler_labels(call));
    }
    out.push_back(std::move(lt));
  }
  return out;
}

std::string format_labels(const LabelSet& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    if (!out.empty()) out += ',';
    out += std::to_string(i);
  }
  return out.empty() ? "-" : out;
}

LabelSet parse_labels(std::string_view line) {
  LabelSet labels;
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  if (line == "-") return labels;
  if (line.empty()) throw FormatError("empty labels line (use '-' for no labels)");
  std::size_t pos = 0;
  while (pos <= line.size()) {
    auto comma = line.find(',', pos);
    auto item = line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos);
    std::size_t id = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), id);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || id >= kExploitCount) {
      throw FormatError("bad label '" + std::string(item) + "'");
    }
    labels.set(id);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return labels;
}

void write_corpus(const std::filesystem::path& out_dir, std::span<const LabeledTrace> traces,
                  double split, std::uint64_t seed, const Vocabulary& vocab) {
  if (!(split >= 0.0 && split <= 1.0)) throw Error("split must lie in [0, 1]");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "train");
  fs::create_directories(out_dir / "test");

  std::vector<std::size_t> order(traces.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(split * static_cast<double>(traces.size())));

  nlohmann::json manifest;
  manifest["format"] = "chainwatch-corpus";
  manifest["version"] = 1;
  manifest["split"] = split;
  manifest["seed"] = seed;
  auto& entries = manifest["traces"] = nlohmann::json::array();

  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& lt = traces[order[rank]];
    if (lt.labels.size() != lt.trace.calls.size()) {
      throw Error("trace " + lt.trace.source_id + " has mismatched label count");
    }
    const auto which = rank < n_train ? Split::kTrain : Split::kTest;
    const auto name = trace_name(rank);
    const auto base = out_dir / split_dir(which) / name;
    {
      std::ofstream t(base.string() + ".trace");
      write_trace(t, lt.trace, vocab);
      std::ofstream l(base.string() + ".labels");
      for (const auto& labels : lt.labels) l << format_labels(labels) << '\n';
      if (!t || !l) throw FormatError("failed writing " + base.string());
    }
    std::vector<std::size_t> planted;
    for (std::size_t i = 0; i < kExploitCount; ++i) {
      if (lt.planted[i]) planted.push_back(i);
    }
    entries.push_back({{"name", name},
                       {"split", split_dir(which)},
                       {"source", lt.trace.source_id},
                       {"planted", planted}});
  }
  std::ofstream m(out_dir / "manifest.json");
  m << manifest.dump(1) << '\n';
  if (!m) throw FormatError("failed writing manifest");
}

std::vector<LabeledTrace> read_corpus(const std::filesystem::path& dir, Split split,
                                      const Vocabulary& vocab) {
  std::ifstream m(dir / "manifest.json");
  if (!m) throw FormatError("corpus manifest missing under " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(m);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("corpus manifest: " + std::string(e.what()));
  }
  std::vector<LabeledTrace> out;
  const auto want = split_dir(split);
  for (const auto& entry : manifest.at("traces")) {
    if (entry.at("split").get<std::string>() != want) continue;
    const auto name = entry.at("name").get<std::string>();
    const auto base = (dir / want / name).string();
    LabeledTrace lt;
    {
      std::ifstream t(base + ".trace");
      if (!t) throw FormatError("missing trace file " + base + ".trace");
      lt.trace = read_trace(t, vocab, entry.value("source", name));
    }
    std::ifstream l(base + ".labels");
    if (!l) throw FormatError("missing labels file " + base + ".labels");
    std::string line;
    while (std::getline(l, line)) {
      if (line.empty()) continue;
      lt.labels.push_back(parse_labels(line));
    }
    if (lt.labels.size() != lt.trace.calls.size()) {
      throw FormatError(base + ": " + std::to_string(lt.labels.size()) + " label lines for " +
                        std::to_string(lt.trace.calls.size()) + " calls");
    }
    for (auto id : entry.at("planted")) lt.planted.set(id.get<std::size_t>());
    out.push_back(std::move(lt));
  }
  return out;
}

DatasetSummary generate_dataset(std::span<const Sdg> programs,
                                std::span<const FingerprintSpec> fingerprints,
                                const DatasetConfig& config, const std::filesystem::path& out_dir,
                                const Vocabulary& vocab) {
  DatasetSummary summary;
  std::vector<VulnQuery> queries;
  for (const auto& fp : fingerprints) queries.push_back(lower_fingerprint(fp));

  std::map<ExploitId, std::vector<InstructionSequence>> per_exploit;
  CallLabeler labeler;
  for (const auto& sdg : programs) {
    for (const auto& q : queries) {
      for (auto& seq : match_query(sdg, q)) {
        labeler.add_sequence(seq, q.exploit_id);
        per_exploit[q.exploit_id].push_back(std::move(seq));
        ++summary.sequences;
      }
    }
  }
  for (const auto& fp : fingerprints) {
    summary.sequences_per_exploit[fp.exploit_id] = per_exploit[fp.exploit_id].size();
  }

  auto is_template = [&](const InstructionCall& c) {
    for (const auto& fp : fingerprints) {
      for (const auto& t : fp.templates) {
        if (template_matches(c, t)) return true;
      }
    }
    return false;
  };
  std::vector<InstructionCall> filler;
  std::set<std::string> seen;
  for (const auto& sdg : programs) {
    for (const auto& node : sdg.nodes()) {
      if (!node.instruction || labeler.contains(*node.instruction) || is_template(*node.instruction)) {
        continue;
      }
      if (seen.insert(call_key(*node.instruction)).second) filler.push_back(*node.instruction);
    }
  }
  std::sort(filler.begin(), filler.end(), [](const InstructionCall& a, const InstructionCall& b) {
    return call_key(a) < call_key(b);
  });
  summary.filler_pool = filler.size();

  std::vector<LabeledTrace> traces;
  for (const auto& [id, seqs] : per_exploit) {
    if (seqs.empty()) continue;
    PaddingConfig padding = config.padding;
    padding.benign_traces = 0;
    padding.seed = config.seed;
    auto batch = emit_corpus(seqs, id, padding, filler, &labeler);
    std::move(batch.begin(), batch.end(), std::back_inserter(traces));
  }
  if (config.padding.benign_traces > 0) {
    PaddingConfig padding = config.padding;
    padding.seed = config.seed + 1;
    auto batch = emit_corpus({}, 0, padding, filler, &labeler);
    summary.benign_traces = batch.size();
    std::move(batch.begin(), batch.end(), std::back_inserter(traces));
  }

  write_corpus(out_dir, traces, config.split, config.seed, vocab);
  summary.train_traces =
      static_cast<std::size_t>(std::llround(config.split * static_cast<double>(traces.size())));
  summary.test_traces = traces.size() - summary.train_traces;
  return summary;
}

std::vector<Example> make_examples(std::span<const LabeledTrace> traces,
                                   const EmbeddingTable& table, const WhiteList* whitelist) {
  std::vector<Example> out;
  for (const auto& lt : traces) {
    for (std::size_t i = 0; i < lt.trace.calls.size(); ++i) {
      const auto& call = lt.trace.calls[i];
      if (whitelist != nullptr && whitelist->contains(call.api_name)) continue;
      out.push_back(Example{encode(call, table), lt.labels[i]});
    }
  }
  return out;
}

}  // namespace chainwatch

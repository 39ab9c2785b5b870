#include "chainwatch/engine.hpp"

#include <algorithm>

namespace chainwatch {

void EngineConfig::validate() const {
  if (!(threshold_classify > 0.0 && threshold_classify <= 1.0)) {
    throw Error("classification threshold must lie in (0, 1]");
  }
  if (!(threshold_cosine > 0.0 && threshold_cosine <= 1.0)) {
    throw Error("cosine threshold must lie in (0, 1]");
  }
}

ModelNominator::ModelNominator(const MlpModel& model, const FingerprintDb& db, double threshold)
    : model_(&model), db_(&db), threshold_(threshold) {}

void ModelNominator::nominate(const FeatureVector& x, std::vector<ExploitId>& out) const {
  out.clear();
  const auto y = forward(*model_, x);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto id = static_cast<ExploitId>(i);
    // Labels without a fingerprint have no state-table row.
    if (y[i] >= threshold_ && db_->contains(id)) out.push_back(id);
  }
}

double SessionSummary::comparisons_per_encoded_call() const {
  return encoded == 0 ? 0.0 : static_cast<double>(comparisons) / static_cast<double>(encoded);
}

Engine::Engine(const FingerprintDb& db, const WhiteList& whitelist, const EmbeddingTable& table,
               const Nominator* nominator, EngineConfig config)
    : db_(&db),
      whitelist_(&whitelist),
      table_(&table),
      nominator_(nominator),
      config_(std::move(config)),
      all_ids_(db.ids()) {
  config_.validate();
  if (db.empty()) throw Error("engine needs a non-empty fingerprint database");
}

Engine::Session::Session(const Engine& engine) : engine_(&engine), table_(engine.db()) {}

std::span<const MonitorEvent> Engine::Session::observe(const InstructionCall& call) {
  alarms_.clear();
  if (summary_.halted) return {};
  const std::size_t offset = offset_++;
  ++summary_.calls;
  const auto comparisons_before = table_.comparisons();

  if (engine_->whitelist_->contains(call.api_name)) {
    ++summary_.whitelisted;
    summary_.comparisons_on_whitelisted += table_.comparisons() - comparisons_before;
    return {};
  }

  try {
    const FeatureVector x = encode(call, *engine_->table_);
    ++summary_.encoded;

    const std::vector<ExploitId>* candidates = &engine_->all_ids_;
    if (engine_->nominator_ != nullptr) {
      ++summary_.classifier_invocations;
      engine_->nominator_->nominate(x, candidates_);
      candidates = &candidates_;
    }
    if (candidates->empty()) {
      ++summary_.empty_candidate_calls;
      return {};
    }

    events_.clear();
    table_.step(*candidates, x, offset, engine_->config_.threshold_cosine, events_);
    ++summary_.monitor_steps;
    summary_.comparisons += table_.comparisons() - comparisons_before;
  } catch (const Error& e) {
    throw Error("trace offset " + std::to_string(offset) + ": " + e.what());
  }

  for (const auto& ev : events_) {
    if (ev.kind == EventKind::kAlarm) alarms_.push_back(ev);
  }
  summary_.alarms += alarms_.size();
  if (!alarms_.empty() && engine_->config_.halt_on_alarm) summary_.halted = true;
  return alarms_;
}

DetectResult Engine::detect(const Trace& trace) const {
  DetectResult result;
  Session s(*this);
  for (const auto& call : trace.calls) {
    const auto alarms = s.observe(call);
    result.alarms.insert(result.alarms.end(), alarms.begin(), alarms.end());
    if (s.summary().halted) break;
  }
  result.summary = s.summary();
  return result;
}

EngineResources EngineResources::load(const EngineConfig& config) {
  config.validate();
  EngineResources r{config.vocab_dir.empty() ? Vocabulary::defaults()
                                             : Vocabulary::load_dir(config.vocab_dir),
                    config.embeddings.empty() ? EmbeddingTable{}
                                              : EmbeddingTable::load(config.embeddings),
                    FingerprintDb{}, WhiteList{}, std::nullopt};
  if (config.fingerprints.empty()) throw Error("no fingerprint file configured");
  r.db = load_fingerprints(config.fingerprints, r.embeddings, r.vocab);
  if (!config.whitelist.empty()) r.whitelist = WhiteList::load(config.whitelist);
  if (!config.model.empty()) r.model = load_model(config.model);
  return r;
}

}  // namespace chainwatch

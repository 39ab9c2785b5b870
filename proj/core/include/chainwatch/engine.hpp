#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "chainwatch/classifier.hpp"
#include "chainwatch/fingerprints.hpp"
#include "chainwatch/monitor.hpp"

namespace chainwatch {

struct EngineConfig {
  std::filesystem::path model;
  std::filesystem::path fingerprints;
  std::filesystem::path whitelist;
  std::filesystem::path embeddings;
  std::filesystem::path vocab_dir;
  double threshold_classify = 0.5;
  double threshold_cosine = kDefaultCosineThreshold;
  bool halt_on_alarm = false;
  std::uint64_t seed = 0;

  /// Throws Error if a threshold is outside (0, 1].
  void validate() const;
};

/// Chooses which state-table rows a call is compared against.
class Nominator {
 public:
  virtual ~Nominator() = default;
  virtual void nominate(const FeatureVector& x, std::vector<ExploitId>& out) const = 0;
};

/// Runs the classifier and keeps predicted labels that exist in the database.
class ModelNominator final : public Nominator {
 public:
  ModelNominator(const MlpModel& model, const FingerprintDb& db, double threshold);
  void nominate(const FeatureVector& x, std::vector<ExploitId>& out) const override;

 private:
  const MlpModel* model_;
  const FingerprintDb* db_;
  double threshold_;
};

/// Every exploit in the database, every call.
class AllExploitsNominator final : public Nominator {
 public:
  explicit AllExploitsNominator(const FingerprintDb& db) : ids_(db.ids()) {}
  void nominate(const FeatureVector&, std::vector<ExploitId>& out) const override {
    out.assign(ids_.begin(), ids_.end());
  }

 private:
  std::vector<ExploitId> ids_;
};

struct SessionSummary {
  std::uint64_t calls = 0;
  std::uint64_t whitelisted = 0;
  std::uint64_t encoded = 0;
  std::uint64_t classifier_invocations = 0;
  std::uint64_t empty_candidate_calls = 0;
  std::uint64_t monitor_steps = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t comparisons_on_whitelisted = 0;
  std::uint64_t alarms = 0;
  bool halted = false;

  /// comparisons / encoded, 0 when nothing was encoded.
  double comparisons_per_encoded_call() const;
};

struct DetectResult {
  std::vector<MonitorEvent> alarms;
  SessionSummary summary;
};

/// The per-call pipeline: white-list, encode, nominate, compare, alarm.
/// Shares an immutable database; each Session owns its state table.
class Engine {
 public:
  /// `nominator == nullptr` is the naive mode: every exploit is compared on
  /// every call and no classifier runs.
  Engine(const FingerprintDb& db, const WhiteList& whitelist, const EmbeddingTable& table,
         const Nominator* nominator, EngineConfig config);

  class Session {
   public:
    explicit Session(const Engine& engine);

    /// Processes one call at the next trace offset. Returns alarms raised by
    /// this call. After a halt, further calls are ignored.
    std::span<const MonitorEvent> observe(const InstructionCall& call);

    const SessionSummary& summary() const { return summary_; }
    const StateTable& table() const { return table_; }
    std::size_t offset() const { return offset_; }

   private:
    const Engine* engine_;
    StateTable table_;
    SessionSummary summary_;
    std::size_t offset_ = 0;
    std::vector<ExploitId> candidates_;
    std::vector<MonitorEvent> events_;
    std::vector<MonitorEvent> alarms_;
  };

  Session session() const { return Session(*this); }
  DetectResult detect(const Trace& trace) const;

  bool naive() const { return nominator_ == nullptr; }
  const EngineConfig& config() const { return config_; }
  const FingerprintDb& db() const { return *db_; }

 private:
  const FingerprintDb* db_;
  const WhiteList* whitelist_;
  const EmbeddingTable* table_;
  const Nominator* nominator_;
  EngineConfig config_;
  std::vector<ExploitId> all_ids_;
};

/// Everything an EngineConfig points at, loaded and validated.
struct EngineResources {
  Vocabulary vocab;
  EmbeddingTable embeddings;
  FingerprintDb db;
  WhiteList whitelist;
  std::optional<MlpModel> model;

  /// Loads each configured path; an empty model path leaves `model` unset,
  /// empty whitelist/embeddings paths yield empty tables, an empty vocab dir
  /// uses the built-in vocabularies.
  static EngineResources load(const EngineConfig& config);
};

}  // namespace chainwatch

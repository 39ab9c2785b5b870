#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "chainwatch/fingerprints.hpp"

namespace chainwatch {

inline constexpr double kDefaultCosineThreshold = 0.9;

/// a.b / (|a| |b|); 0 when either norm is zero. Throws DimensionError when
/// the lengths differ.
double cosine(std::span<const double> a, std::span<const double> b);

enum class EventKind : std::uint8_t { kAdvanced, kAlarm, kNoMatch };

std::string_view to_string(EventKind kind);

struct MonitorEvent {
  EventKind kind = EventKind::kNoMatch;
  ExploitId exploit_id = 0;
  std::string_view cwe_id;  // points into the FingerprintDb
  std::size_t trace_offset = 0;
  double similarity = 0.0;
};

struct ExploitState {
  std::size_t next_index = 0;
  std::uint64_t comparisons = 0;
  std::uint64_t alarms = 0;
};

/// One row per fingerprint holding the position of the next expected
/// template. A match advances the row; matching the last template raises an
/// alarm and rewinds the row to the first template. Rows that are not
/// candidates for a call are left untouched.
class StateTable {
 public:
  /// Throws Error on an empty database unless `allow_empty`.
  explicit StateTable(const FingerprintDb& db, bool allow_empty = false);

  /// Appends one event per candidate to `events`. Throws Error for ids that
  /// are not in the database or a threshold outside (0, 1].
  void step(std::span<const ExploitId> candidates, std::span<const double> x,
            std::size_t offset, double threshold, std::vector<MonitorEvent>& events);
  std::vector<MonitorEvent> step(std::span<const ExploitId> candidates,
                                 std::span<const double> x, std::size_t offset,
                                 double threshold = kDefaultCosineThreshold);

  const ExploitState& state(ExploitId id) const;
  std::size_t next_index(ExploitId id) const { return state(id).next_index; }
  std::span<const double> next_vector(ExploitId id) const;

  std::uint64_t steps() const { return steps_; }
  std::uint64_t comparisons() const { return comparisons_; }
  std::uint64_t alarms() const { return alarms_; }
  /// comparisons / steps. Throws Error before the first step.
  double comparisons_per_call() const;

  /// Back to the initial state, counters cleared.
  void reset();

  const FingerprintDb& db() const { return *db_; }

 private:
  std::size_t slot(ExploitId id) const;

  const FingerprintDb* db_;
  std::vector<ExploitState> rows_;  // parallel to db_->fingerprints()
  std::vector<int> slot_of_;        // exploit id -> row
  std::uint64_t steps_ = 0;
  std::uint64_t comparisons_ = 0;
  std::uint64_t alarms_ = 0;
};

}  // namespace chainwatch

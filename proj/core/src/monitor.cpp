#include "chainwatch/monitor.hpp"

#include <cmath>

namespace chainwatch {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cosine of vectors with " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " components");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kAdvanced: return "advanced";
    case EventKind::kAlarm: return "alarm";
    case EventKind::kNoMatch: return "no_match";
  }
  return "?";
}

StateTable::StateTable(const FingerprintDb& db, bool allow_empty)
    : db_(&db), rows_(db.size()), slot_of_(db.capacity(), -1) {
  if (db.empty() && !allow_empty) throw Error("state table needs at least one fingerprint");
  const auto fps = db.fingerprints();
  for (std::size_t i = 0; i < fps.size(); ++i) slot_of_[fps[i].exploit_id] = static_cast<int>(i);
}

std::size_t StateTable::slot(ExploitId id) const {
  if (id >= slot_of_.size() || slot_of_[id] < 0) {
    throw Error("exploit_id " + std::to_string(id) + " is not in the state table");
  }
  return static_cast<std::size_t>(slot_of_[id]);
}

const ExploitState& StateTable::state(ExploitId id) const { return rows_[slot(id)]; }

std::span<const double> StateTable::next_vector(ExploitId id) const {
  const auto s = slot(id);
  return db_->fingerprints()[s].template_vectors[rows_[s].next_index];
}

void StateTable::step(std::span<const ExploitId> candidates, std::span<const double> x,
                      std::size_t offset, double threshold, std::vector<MonitorEvent>& events) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("cosine threshold must lie in (0, 1]");
  if (x.size() != kFeatureDim) {
    throw DimensionError("monitor input has " + std::to_string(x.size()) + " components");
  }
  // Validate before mutating so a bad id leaves the table untouched.
  for (auto id : candidates) slot(id);

  ++steps_;
  double xnorm2 = 0.0;
  for (double v : x) xnorm2 += v * v;
  const double xnorm = std::sqrt(xnorm2);
  const auto fps = db_->fingerprints();

  for (auto id : candidates) {
    const auto s = static_cast<std::size_t>(slot_of_[id]);
    auto& row = rows_[s];
    const auto& fp = fps[s];
    const auto& t = fp.template_vectors[row.next_index];
    const double tnorm = fp.template_norms[row.next_index];
    double sim = 0.0;
    if (xnorm != 0.0 && tnorm != 0.0) {
      double dot = 0.0;
      for (std::size_t i = 0; i < kFeatureDim; ++i) dot += x[i] * t[i];
      sim = dot / (xnorm * tnorm);
    }
    ++row.comparisons;
    ++comparisons_;

    MonitorEvent ev{EventKind::kNoMatch, id, fp.cwe_id, offset, sim};
    if (sim >= threshold) {
      if (row.next_index + 1 == fp.length()) {
        ev.kind = EventKind::kAlarm;
        row.next_index = 0;
        ++row.alarms;
        ++alarms_;
      } else {
        ev.kind = EventKind::kAdvanced;
        ++row.next_index;
      }
    }
    events.push_back(ev);
  }
}

std::vector<MonitorEvent> StateTable::step(std::span<const ExploitId> candidates,
                                           std::span<const double> x, std::size_t offset,
                                           double threshold) {
  std::vector<MonitorEvent> events;
  step(candidates, x, offset, threshold, events);
  return events;
}

double StateTable::comparisons_per_call() const {
  if (steps_ == 0) throw Error("no monitor steps taken yet");
  return static_cast<double>(comparisons_) / static_cast<double>(steps_);
}

void StateTable::reset() {
  for (auto& row : rows_) row = ExploitState{};
  steps_ = comparisons_ = alarms_ = 0;
}

}  // namespace chainwatch

#pragma once

#include <span>
#include <vector>

#include "chainwatch/corpus.hpp"
#include "chainwatch/engine.hpp"
#include "chainwatch/metrics.hpp"

namespace chainwatch {

struct EvalReport {
  std::vector<Confusion> table;        // one row per exploit id, 79 rows
  std::vector<std::size_t> labels;     // rows the macro average covers
  MacroScores macro;
  std::size_t items = 0;
};

/// Trace-level scoring: the predicted set of a trace is the exploits that
/// raised at least one alarm, the target is its planted set. Macro averages
/// cover the exploits in the engine's database.
EvalReport evaluate_alarms(const Engine& engine, std::span<const LabeledTrace> traces);

/// Call-level scoring of the classifier alone on non-white-listed calls.
/// Macro averages cover the labels that occur in the targets.
EvalReport evaluate_classifier(const MlpModel& model, std::span<const Example> examples,
                               double threshold = 0.5);

}  // namespace chainwatch

#include "chainwatch/evaluate.hpp"

namespace chainwatch {

EvalReport evaluate_alarms(const Engine& engine, std::span<const LabeledTrace> traces) {
  EvalReport report;
  report.table.assign(kExploitCount, Confusion{});
  for (auto id : engine.db().ids()) report.labels.push_back(id);
  for (const auto& lt : traces) {
    LabelSet predicted;
    for (const auto& alarm : engine.detect(lt.trace).alarms) predicted.set(alarm.exploit_id);
    chainwatch::accumulate(predicted, lt.planted, report.table);
    ++report.items;
  }
  report.macro = macro_average(report.table, report.labels);
  return report;
}

EvalReport evaluate_classifier(const MlpModel& model, std::span<const Example> examples,
                               double threshold) {
  EvalReport report;
  report.table.assign(kExploitCount, Confusion{});
  LabelSet seen;
  for (const auto& ex : examples) {
    LabelSet predicted;
    for (auto i : predict(model, ex.x, threshold).predicted) predicted.set(i);
    chainwatch::accumulate(predicted, ex.target, report.table);
    seen |= ex.target;
    ++report.items;
  }
  for (std::size_t i = 0; i < kExploitCount; ++i) {
    if (seen[i]) report.labels.push_back(i);
  }
  report.macro = macro_average(report.table, report.labels);
  return report;
}

}  // namespace chainwatch

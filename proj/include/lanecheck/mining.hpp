#pragma once

// The three-step mining pipeline: attribute selection on a pairwise array,
// rule induction on a focused array, and rule confirmation by sampling.

#include <string>
#include <vector>

#include <json.hpp>

#include "confirm.hpp"
#include "covergen.hpp"
#include "encoding.hpp"
#include "forest.hpp"
#include "offline.hpp"
#include "parallel.hpp"
#include "report.hpp"
#include "ripper.hpp"

namespace lanecheck {

struct MineConfig {
  SimConfig sim;
  Thresholds thresholds;
  OracleGains oracle;
  ForestParams forest;
  std::size_t repetitions = 20;
  double min_drop = 0.01;
  int step1_strength = 2;
  int max_step2_strength = 3;
  std::size_t confirm_budget = 200;
  unsigned jobs = 1;
};

struct EvaluatedVector {
  Scenario scenario;
  int step = 1;
  double mae = 0.0;
  double mdcl = 0.0;
  int label = kAgree;
};

struct AttributeImportance {
  std::size_t attribute = 0;
  Importance importance;
  bool selected = false;
};

struct MineReport {
  std::string model;
  std::string controller;
  std::uint64_t seed = 0;
  std::vector<EvaluatedVector> vectors;  // Step 1, then Step 2
  std::size_t step1_count = 0;
  int step2_strength = 0;
  double oob_accuracy = 0.0;
  bool informative = false;
  std::vector<AttributeImportance> importances;
  std::vector<std::size_t> selected;
  bool selection_fallback = false;
  bool degenerate = false;
  RuleSet rules;
  std::vector<std::string> flags;

  /// Budget exhaustion or unsatisfiable antecedents occurred.
  bool budget_flagged() const {
    for (const auto& f : flags) {
      if (f.rfind("budget", 0) == 0 || f.rfind("unsatisfiable", 0) == 0) return true;
    }
    return false;
  }
};

/// Labels a scenario by evaluating it offline and online.
inline EvaluatedVector evaluate_vector(const DomainModel& dm, const Scenario& s, const Controller& controller,
                                       const MineConfig& cfg, int step) {
  const auto ev = evaluate_scenario(dm, s, controller, cfg.sim, cfg.thresholds, cfg.oracle);
  return EvaluatedVector{s, step, ev.offline.mae, ev.online.mdcl, label_code(ev.record.label)};
}

inline std::vector<EvaluatedVector> evaluate_all(const DomainModel& dm, const std::vector<Scenario>& scenarios,
                                                 const Controller& controller, const MineConfig& cfg, int step) {
  std::vector<EvaluatedVector> out(scenarios.size());
  parallel_for(scenarios.size(), cfg.jobs,
               [&](std::size_t i) { out[i] = evaluate_vector(dm, scenarios[i], controller, cfg, step); });
  return out;
}

inline void confirm_all(MineReport& report, const DomainModel& dm, const Controller& controller, const MineConfig& cfg) {
  ConfirmOptions options;
  options.lambda = cfg.thresholds.lambda;
  options.budget = cfg.confirm_budget;
  options.jobs = cfg.jobs;
  const LabelOracle oracle = [&](const Scenario& s) { return evaluate_vector(dm, s, controller, cfg, 3).label; };
  for (std::size_t i = 0; i < report.rules.rules.size(); ++i) {
    try {
      confirm_rule(report.rules, i, dm, oracle, options, mix_seed(report.seed, hash_tag("confirm")));
      if (report.rules.rules[i].budget_exhausted) report.flags.push_back("budget: rule " + std::to_string(i + 1));
    } catch (const UnsatisfiableError&) {
      report.flags.push_back("unsatisfiable: rule " + std::to_string(i + 1));
    } catch (const BudgetExceeded&) {
      report.flags.push_back("budget: rule " + std::to_string(i + 1) + " sampling");
    }
  }
}

inline MineReport mine_pipeline(const DomainModel& dm, const Controller& controller, const MineConfig& cfg,
                                std::uint64_t seed) {
  cfg.thresholds.check();
  MineReport report;
  report.model = dm.name();
  report.controller = controller.name();
  report.seed = seed;

  // Step 1: pairwise array, labels, forest, importance, selection.
  CoverOptions step1;
  step1.id_prefix = "s1-";
  step1.jobs = cfg.jobs;
  const auto ca1 = generate_covering_array(dm, std::min<int>(cfg.step1_strength, static_cast<int>(dm.size())),
                                           mix_seed(seed, hash_tag("step1")), step1);
  report.vectors = evaluate_all(dm, ca1.scenarios, controller, cfg, 1);
  report.step1_count = report.vectors.size();

  const Encoding all(dm);
  Dataset data1;
  data1.cardinality = all.cardinalities();
  for (const auto& v : report.vectors) data1.add(all.encode(v.scenario.values), v.label);

  if (data1.count(kAgree) == 0 || data1.count(kDisagree) == 0) {
    report.degenerate = true;
    report.flags.push_back("degenerate: every Step-1 vector is labelled " +
                           std::string(label_name(report.vectors.front().label)));
    Rule only;
    only.is_default = true;
    only.label = report.vectors.front().label;
    only.support = report.vectors.size();
    only.accuracy = 1.0;
    only.ci = wilson_ci(report.vectors.size(), report.vectors.size());
    report.rules.rules.push_back(only);
    confirm_all(report, dm, controller, cfg);
    return report;
  }

  ForestParams fp = cfg.forest;
  fp.jobs = cfg.jobs;
  const Forest forest = train_forest(data1, fp, mix_seed(seed, hash_tag("forest")));
  const auto importances =
      permutation_importance(forest, data1, cfg.repetitions, mix_seed(seed, hash_tag("importance")), cfg.jobs);
  report.oob_accuracy = forest.oob_accuracy;
  report.informative = forest_informative(forest, data1);
  const auto selection = select_attributes(importances, report.informative, cfg.min_drop);
  report.selection_fallback = selection.fallback;
  if (selection.fallback) report.flags.push_back("low-confidence: attribute selection fell back to the top two");
  for (std::size_t f = 0; f < importances.size(); ++f) {
    report.importances.push_back({all.feature(f).attribute, importances[f], false});
  }
  for (std::size_t f : selection.features) {
    report.importances[f].selected = true;
    report.selected.push_back(all.feature(f).attribute);
  }

  // Step 2: focused array over the selected attributes, union, rules.
  report.step2_strength = std::min<int>(cfg.max_step2_strength, static_cast<int>(report.selected.size()));
  CoverOptions step2;
  step2.focus = report.selected;
  step2.id_prefix = "s2-";
  step2.jobs = cfg.jobs;
  const auto ca2 = generate_covering_array(dm, report.step2_strength, mix_seed(seed, hash_tag("step2")), step2);
  auto more = evaluate_all(dm, ca2.scenarios, controller, cfg, 2);
  report.vectors.insert(report.vectors.end(), more.begin(), more.end());

  const Encoding focus(dm, report.selected);
  Dataset data2;
  data2.cardinality = focus.cardinalities();
  std::vector<std::vector<int>> values;
  std::vector<int> labels;
  for (const auto& v : report.vectors) {
    data2.add(focus.encode(v.scenario.values), v.label);
    values.push_back(v.scenario.values);
    labels.push_back(v.label);
  }
  const auto model = ripper(data2, mix_seed(seed, hash_tag("ripper")));
  report.rules = to_rule_set(model, focus, values, labels);

  // Step 3: confirmation.
  confirm_all(report, dm, controller, cfg);
  return report;
}

// ---------------------------------------------------------------------------
// Report layers

inline nlohmann::ordered_json rule_json(const DomainModel& dm, const Rule& r) {
  using nlohmann::ordered_json;
  ordered_json antecedent = ordered_json::array();
  for (const auto& p : r.antecedent) {
    const auto& def = dm.attribute(p.attribute);
    ordered_json values = ordered_json::array();
    for (int c : p.codes) values.push_back(def.format(c));
    antecedent.push_back({{"attribute", def.name}, {"op", p.codes.size() == 1 ? "=" : "in"}, {"values", values}});
  }
  ordered_json samples = ordered_json::array();
  for (const auto& s : r.samples) samples.push_back({{"id", s.scenario_id}, {"label", label_name(s.label)}});
  return {{"rule", antecedent_text(dm, r)},
          {"default", r.is_default},
          {"antecedent", antecedent},
          {"label", label_name(r.label)},
          {"support", r.support},
          {"accuracy", r.accuracy},
          {"ci", {r.ci.low, r.ci.high}},
          {"nConfirm", r.confirm_n},
          {"kConfirm", r.confirm_k},
          {"confirmedAccuracy", r.confirmed_accuracy},
          {"confirmedCi", {r.confirmed_ci.low, r.confirmed_ci.high}},
          {"confirmed", r.confirmed},
          {"budgetExhausted", r.budget_exhausted},
          {"samples", samples}};
}

inline nlohmann::ordered_json report_json(const DomainModel& dm, const MineReport& report, const MineConfig& cfg) {
  using nlohmann::ordered_json;
  ordered_json imps = ordered_json::array();
  for (const auto& a : report.importances) {
    imps.push_back({{"attribute", dm.attribute(a.attribute).name},
                    {"mean", a.importance.mean},
                    {"std", a.importance.std},
                    {"se", a.importance.se},
                    {"selected", a.selected}});
  }
  ordered_json selected = ordered_json::array();
  for (std::size_t a : report.selected) selected.push_back(dm.attribute(a).name);
  ordered_json rules = ordered_json::array();
  for (const auto& r : report.rules.rules) rules.push_back(rule_json(dm, r));
  return {{"model", report.model},
          {"controller", report.controller},
          {"seed", report.seed},
          {"lambda", cfg.thresholds.lambda},
          {"confirmBudget", cfg.confirm_budget},
          {"step1", {{"strength", cfg.step1_strength}, {"vectors", report.step1_count}}},
          {"step2", {{"strength", report.step2_strength}, {"vectors", report.vectors.size() - report.step1_count}}},
          {"degenerate", report.degenerate},
          {"oobAccuracy", report.oob_accuracy},
          {"forestInformative", report.informative},
          {"importances", imps},
          {"selected", selected},
          {"selectionFallback", report.selection_fallback},
          {"rules", rules},
          {"flags", report.flags}};
}

inline std::string report_markdown(const DomainModel& dm, const MineReport& report, const MineConfig& cfg) {
  std::string md = "# Mined rules: " + report.controller + " on " + report.model + "\n\n";
  md += "Seed " + std::to_string(report.seed) + ", lambda " + format_fixed(cfg.thresholds.lambda, 2) + ", " +
        std::to_string(report.step1_count) + " Step-1 vectors, " +
        std::to_string(report.vectors.size() - report.step1_count) + " Step-2 vectors.\n\n";
  if (!report.degenerate) {
    md += "Selected attributes:";
    for (std::size_t i = 0; i < report.selected.size(); ++i) {
      md += (i ? ", " : " ") + dm.attribute(report.selected[i]).name;
    }
    md += report.selection_fallback ? " (fallback, low confidence)\n\n" : "\n\n";
  }
  md += "| # | Rule | Label | Accuracy | 95% CI | Samples | Training (support) |\n";
  md += "|---|------|-------|----------|--------|---------|--------------------|\n";
  for (std::size_t i = 0; i < report.rules.rules.size(); ++i) {
    const auto& r = report.rules.rules[i];
    std::string acc = r.confirm_n ? format_fixed(r.confirmed_accuracy, 2) + " ± " + format_fixed(r.confirmed_ci.half_width(), 2)
                                  : "-";
    if (r.budget_exhausted) acc += " (budget)";
    const std::string ci = r.confirm_n ? "[" + format_fixed(r.confirmed_ci.low, 3) + ", " +
                                             format_fixed(r.confirmed_ci.high, 3) + "]"
                                       : "-";
    md += "| " + std::to_string(i + 1) + " | " + (r.is_default ? "otherwise" : "IF " + antecedent_text(dm, r)) + " | " +
          std::string(label_name(r.label)) + " | " + acc + " | " + ci + " | " + std::to_string(r.confirm_n) + " | " +
          format_fixed(r.accuracy, 2) + " (" + std::to_string(r.support) + ") |\n";
  }
  if (!report.flags.empty()) {
    md += "\nFlags:\n\n";
    for (const auto& f : report.flags) md += "- " + f + "\n";
  }
  return md;
}

/// Every labelled vector with its raw metrics, for auditing the labels.
inline std::string vectors_csv(const DomainModel& dm, const MineReport& report, const Thresholds& t) {
  std::vector<std::string> header{"scenarioId", "step"};
  for (const auto& a : dm.attributes()) header.push_back(a.name);
  for (const char* h : {"mae", "mdcl", "acceptableOffline", "acceptableOnline", "label"}) header.emplace_back(h);
  std::string out = csv_row(header);
  for (const auto& v : report.vectors) {
    std::vector<std::string> row{v.scenario.id, std::to_string(v.step)};
    for (std::size_t i = 0; i < dm.size(); ++i) row.push_back(value_text(dm, v.scenario, i));
    const auto rec = classify(v.scenario.id, v.mae, v.mdcl, t);
    row.push_back(format_exact(v.mae));
    row.push_back(format_exact(v.mdcl));
    row.emplace_back(rec.acceptable_offline ? "true" : "false");
    row.emplace_back(rec.acceptable_online ? "true" : "false");
    row.emplace_back(label_name(v.label));
    out += csv_row(row);
  }
  return out;
}

}  // namespace lanecheck

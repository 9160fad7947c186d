#pragma once

// Experiment drivers behind the command line: the comparability study
// (rq1), the offline/online comparison (compare) and the mining run (mine),
// each writing raw CSV, a JSON summary and a markdown table.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "closed_loop.hpp"
#include "covergen.hpp"
#include "mining.hpp"
#include "offline.hpp"
#include "parallel.hpp"
#include "report.hpp"

namespace lanecheck {

struct ExperimentConfig {
  Thresholds thresholds;
  SimConfig sim;
  OracleGains oracle;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  bool keep_traces = false;

  void check() const {
    thresholds.check();
    if (!(sim.duration > 0.0) || !(sim.dt > 0.0)) throw ConfigError("T and dt must be positive");
    if (sim.steps() < 2) throw ConfigError("T / dt must give at least two steps");
    if (jobs == 0) throw ConfigError("jobs must be at least 1");
  }
};

// ---------------------------------------------------------------------------
// Sequences on disk

inline std::string trace_csv(const Trace& trace) {
  std::vector<std::string> header{"step", "t", "x", "y", "heading", "station", "offset", "headingError",
                                  "curvature", "offRoad"};
  const std::size_t channels = trace.steps.empty() ? 0 : trace.steps.front().observation.noise.size();
  for (std::size_t k = 0; k < channels; ++k) header.push_back("noise" + std::to_string(k));
  for (const char* h : {"theta", "theta_hat", "deviation"}) header.emplace_back(h);
  std::string out = csv_row(header);
  for (const auto& s : trace.steps) {
    std::vector<std::string> row{std::to_string(s.state.step),
                                 format_exact(static_cast<double>(s.state.step) * trace.dt),
                                 format_exact(s.state.x),
                                 format_exact(s.state.y),
                                 format_exact(s.state.heading),
                                 format_exact(s.station),
                                 format_exact(s.observation.lateral_offset),
                                 format_exact(s.observation.heading_error),
                                 format_exact(s.observation.curvature_ahead),
                                 s.observation.off_road ? "true" : "false"};
    for (double v : s.observation.noise) row.push_back(format_exact(v));
    row.push_back(format_exact(s.theta));
    row.push_back(format_exact(s.theta_hat));
    row.push_back(format_exact(s.deviation));
    out += csv_row(row);
  }
  return out;
}

/// Reads a labelled sequence from CSV. Observation columns are optional
/// (missing ones read as zero); the label column is `label_column`.
inline LabeledSequence read_sequence_csv(const std::string& text, const std::string& id,
                                         const std::string& label_column = "theta") {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("sequence '" + id + "': empty file");
  const auto header = parse_csv_line(line);
  auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto label = find(label_column);
  if (!label) throw ParseError("sequence '" + id + "': no column '" + label_column + "'");
  const auto offset = find("offset");
  const auto heading = find("headingError");
  const auto curvature = find("curvature");
  std::vector<std::size_t> noise;
  for (std::size_t k = 0; auto i = find("noise" + std::to_string(k)); ++k) noise.push_back(*i);

  LabeledSequence seq;
  seq.scenario_id = id;
  seq.provenance = LabeledSequence::Provenance::External;
  std::size_t row = 1;
  auto number = [&](const std::vector<std::string>& f, std::size_t col) {
    if (col >= f.size()) throw ParseError("sequence '" + id + "' row " + std::to_string(row) + ": missing field");
    try {
      std::size_t used = 0;
      const double v = std::stod(f[col], &used);
      if (used != f[col].size()) throw std::invalid_argument(f[col]);
      return v;
    } catch (const std::exception&) {
      throw ParseError("sequence '" + id + "' row " + std::to_string(row) + ": bad number '" + f[col] + "'");
    }
  };
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = parse_csv_line(line);
    Observation o;
    if (offset) o.lateral_offset = number(f, *offset);
    if (heading) o.heading_error = number(f, *heading);
    if (curvature) o.curvature_ahead = number(f, *curvature);
    for (std::size_t c : noise) o.noise.push_back(number(f, c));
    seq.observations.push_back(std::move(o));
    seq.steering.push_back(number(f, *label));
    ++row;
  }
  if (seq.empty()) throw ParseError("sequence '" + id + "': no rows");
  return seq;
}

/// One scenario per row: id, seed, then one column per attribute.
inline std::string scenarios_csv(const DomainModel& dm, const std::vector<Scenario>& scenarios) {
  std::vector<std::string> header{"id", "seed"};
  for (const auto& a : dm.attributes()) header.push_back(a.name);
  std::string out = csv_row(header);
  for (const auto& s : scenarios) {
    std::vector<std::string> row{s.id, std::to_string(s.seed)};
    for (std::size_t i = 0; i < dm.size(); ++i) row.push_back(value_text(dm, s, i));
    out += csv_row(row);
  }
  return out;
}

/// Parses scenarios written by scenarios_csv; every row is validated.
inline std::vector<Scenario> read_scenarios_csv(const DomainModel& dm, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("scenario CSV is empty");
  const auto header = parse_csv_line(line);
  if (header.size() < 2 || header[0] != "id" || header[1] != "seed") {
    throw ParseError("scenario CSV must start with columns id,seed");
  }
  std::vector<Scenario> out;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = parse_csv_line(line);
    if (f.size() != header.size()) throw ParseError("scenario CSV row " + std::to_string(out.size() + 1) + ": wrong field count");
    std::map<std::string, std::string> values;
    for (std::size_t c = 2; c < f.size(); ++c) values[header[c]] = f[c];
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(f[1]);
    } catch (const std::exception&) {
      throw ParseError("scenario '" + f[0] + "': bad seed '" + f[1] + "'");
    }
    out.push_back(make_scenario(dm, f[0], values, seed));
  }
  return out;
}

// ---------------------------------------------------------------------------
// compare: offline versus online on a covering array

struct CompareRow {
  ScenarioEvaluation eval;
  std::optional<Trace> trace;
};

struct CompareResult {
  std::vector<CompareRow> rows;  // sorted by scenario id
  std::optional<double> rho;
  Contingency table;
};

inline CompareResult run_compare(const DomainModel& dm, const Controller& controller, const ExperimentConfig& cfg,
                                 int strength = 2) {
  cfg.check();
  CoverOptions options;
  options.id_prefix = "c-";
  options.jobs = cfg.jobs;
  const auto ca = generate_covering_array(dm, std::min<int>(strength, static_cast<int>(dm.size())),
                                          mix_seed(cfg.seed, hash_tag("compare")), options);
  CompareResult result;
  result.rows.resize(ca.scenarios.size());
  parallel_for(ca.scenarios.size(), cfg.jobs, [&](std::size_t i) {
    auto& row = result.rows[i];
    row.eval = evaluate_scenario(dm, ca.scenarios[i], controller, cfg.sim, cfg.thresholds, cfg.oracle);
    if (cfg.keep_traces) row.trace = run_online(dm, ca.scenarios[i], controller, cfg.sim, cfg.oracle).trace;
  });
  std::sort(result.rows.begin(), result.rows.end(),
            [](const CompareRow& a, const CompareRow& b) { return a.eval.scenario.id < b.eval.scenario.id; });
  std::vector<double> mae;
  std::vector<double> mdcl;
  std::vector<AgreementRecord> records;
  for (const auto& r : result.rows) {
    mae.push_back(r.eval.offline.mae);
    mdcl.push_back(r.eval.online.mdcl);
    records.push_back(r.eval.record);
  }
  if (mae.size() >= 2) result.rho = spearman(mae, mdcl);
  result.table = contingency(records);
  return result;
}

inline std::string contingency_markdown(const Contingency& c) {
  auto n = [](std::size_t v) { return std::to_string(v); };
  std::string md = "| | MAE < tau_offline | MAE >= tau_offline |\n|---|---|---|\n";
  md += "| MDCL < tau_online | " + n(c.online_ok_offline_ok) + " | " + n(c.online_ok_offline_bad) + " |\n";
  md += "| MDCL >= tau_online | " + n(c.online_bad_offline_ok) + " | " + n(c.online_bad_offline_bad) + " |\n";
  return md;
}

inline void write_compare(const std::filesystem::path& dir, const DomainModel& dm, const Controller& controller,
                          const ExperimentConfig& cfg, const CompareResult& result) {
  std::vector<std::string> header{"scenarioId"};
  for (const auto& a : dm.attributes()) header.push_back(a.name);
  for (const char* h : {"mae", "rmse", "mdcl", "mdclRaw", "acceptableOffline", "acceptableOnline", "label",
                        "roadEndReached", "leftRoad"}) {
    header.emplace_back(h);
  }
  std::string csv = csv_row(header);
  for (const auto& r : result.rows) {
    const auto& e = r.eval;
    std::vector<std::string> row{e.scenario.id};
    for (std::size_t i = 0; i < dm.size(); ++i) row.push_back(value_text(dm, e.scenario, i));
    row.push_back(format_exact(e.offline.mae));
    row.push_back(format_exact(e.offline.rmse));
    row.push_back(format_exact(e.online.mdcl));
    row.push_back(format_exact(e.online.mdcl_raw));
    row.emplace_back(e.record.acceptable_offline ? "true" : "false");
    row.emplace_back(e.record.acceptable_online ? "true" : "false");
    row.emplace_back(to_string(e.record.label));
    row.emplace_back(e.road_end_reached ? "true" : "false");
    row.emplace_back(e.left_road ? "true" : "false");
    csv += csv_row(row);
  }
  write_text(dir / "compare.csv", csv);

  const auto& c = result.table;
  nlohmann::ordered_json summary = {
      {"model", dm.name()},
      {"controller", controller.name()},
      {"seed", cfg.seed},
      {"scenarios", result.rows.size()},
      {"spearman", result.rho ? nlohmann::ordered_json(*result.rho) : nlohmann::ordered_json(nullptr)},
      {"contingency",
       {{"onlineOkOfflineOk", c.online_ok_offline_ok},
        {"onlineOkOfflineBad", c.online_ok_offline_bad},
        {"onlineBadOfflineOk", c.online_bad_offline_ok},
        {"onlineBadOfflineBad", c.online_bad_offline_bad}}},
      {"disagreements", c.disagreements()}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::string md = "# Offline versus online: " + controller.name() + " on " + dm.name() + "\n\n";
  md += std::to_string(result.rows.size()) + " scenarios, Spearman rho (MAE, MDCL) = " +
        (result.rho ? format_fixed(*result.rho, 3) : std::string("undefined (no rank variance)")) + ".\n\n";
  md += contingency_markdown(c);
  write_text(dir / "table.md", md);

  if (cfg.keep_traces) {
    for (const auto& r : result.rows) write_text(dir / "traces" / (r.eval.scenario.id + ".csv"), trace_csv(*r.trace));
  }
}

// ---------------------------------------------------------------------------
// rq1: comparability of simulated and real-like sequences

struct Rq1Options {
  std::size_t scenarios = 100;
  double jitter = 0.02;  // label noise of the real-like reference
};

struct Rq1Row {
  std::string scenario_id;
  MatchResult match;
  double mae_sim = 0.0;
  double mae_real = 0.0;
  bool consistent = false;
};

struct Rq1Result {
  std::vector<Rq1Row> rows;
  std::size_t reference_length = 0;
  std::size_t comparable = 0;
  std::size_t consistent = 0;
};

/// Simulates `scenarios` sampled scenarios with the oracle, builds the
/// real-like reference by concatenating their sequences in a seeded order
/// and adding N(0, jitter) to its labels, then matches each simulated
/// sequence against the reference and compares the controller's MAE on both.
inline Rq1Result run_rq1(const DomainModel& dm, const Controller& controller, const ExperimentConfig& cfg,
                         const Rq1Options& options) {
  cfg.check();
  if (options.scenarios == 0) throw ConfigError("rq1 needs at least one scenario");
  if (options.jitter < 0.0) throw ConfigError("jitter must be non-negative");
  std::vector<LabeledSequence> sims(options.scenarios);
  parallel_for(options.scenarios, cfg.jobs, [&](std::size_t i) {
    auto s = sample_scenario(dm, mix_seed(cfg.seed, hash_tag("rq1"), i));
    char id[32];
    std::snprintf(id, sizeof id, "rq1-%04zu", i);
    s.id = id;
    sims[i] = run_reference(dm, s, cfg.sim, cfg.oracle);
  });

  std::vector<std::size_t> order(sims.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(cfg.seed, hash_tag("rq1-reference")));
  rng.shuffle(order);
  LabeledSequence real;
  real.scenario_id = "reference";
  real.provenance = LabeledSequence::Provenance::External;
  for (std::size_t i : order) {
    real.observations.insert(real.observations.end(), sims[i].observations.begin(), sims[i].observations.end());
    real.steering.insert(real.steering.end(), sims[i].steering.begin(), sims[i].steering.end());
  }
  if (options.jitter > 0.0) {
    for (auto& v : real.steering) v += rng.gaussian(0.0, options.jitter);
  }

  Rq1Result result;
  result.reference_length = real.size();
  result.rows.resize(sims.size());
  parallel_for(sims.size(), cfg.jobs, [&](std::size_t i) {
    auto& row = result.rows[i];
    row.scenario_id = sims[i].scenario_id;
    row.match = match_subsequence(sims[i].steering, real.steering, cfg.thresholds.epsilon,
                                  mix_seed(cfg.seed, hash_tag("rq1-ties"), i));
    row.mae_sim = replay(controller, sims[i], cfg.thresholds.tau_offline).mae;
    auto matched = real.slice(row.match.x, row.match.l);
    matched.scenario = sims[i].scenario;
    row.mae_real = replay(controller, matched, cfg.thresholds.tau_offline).mae;
    row.consistent = consistent(row.mae_sim, row.mae_real, cfg.thresholds.tau_consist);
  });
  for (const auto& r : result.rows) {
    result.comparable += r.match.comparable;
    result.consistent += r.consistent;
  }
  return result;
}

inline void write_rq1(const std::filesystem::path& dir, const DomainModel& dm, const Controller& controller,
                      const ExperimentConfig& cfg, const Rq1Options& options, const Rq1Result& result) {
  std::string csv = csv_row({"scenarioId", "x", "length", "meanDiff", "comparable", "ties", "maeSim", "maeReal",
                             "absMaeDiff", "consistent"});
  std::vector<double> diffs;
  for (const auto& r : result.rows) {
    const double d = std::abs(r.mae_sim - r.mae_real);
    diffs.push_back(d);
    csv += csv_row({r.scenario_id, std::to_string(r.match.x), std::to_string(r.match.l), format_exact(r.match.mean_diff),
                    r.match.comparable ? "true" : "false", std::to_string(r.match.ties), format_exact(r.mae_sim),
                    format_exact(r.mae_real), format_exact(d), r.consistent ? "true" : "false"});
  }
  write_text(dir / "rq1.csv", csv);

  std::sort(diffs.begin(), diffs.end());
  const double n = static_cast<double>(diffs.size());
  double mean = 0.0;
  for (double d : diffs) mean += d / n;
  const double median =
      diffs.size() % 2 ? diffs[diffs.size() / 2] : 0.5 * (diffs[diffs.size() / 2 - 1] + diffs[diffs.size() / 2]);
  nlohmann::ordered_json summary = {{"model", dm.name()},
                                    {"controller", controller.name()},
                                    {"seed", cfg.seed},
                                    {"scenarios", result.rows.size()},
                                    {"referenceLength", result.reference_length},
                                    {"jitter", options.jitter},
                                    {"epsilon", cfg.thresholds.epsilon},
                                    {"comparable", result.comparable},
                                    {"comparableFraction", static_cast<double>(result.comparable) / n},
                                    {"consistent", result.consistent},
                                    {"absMaeDiff", {{"mean", mean}, {"median", median}, {"max", diffs.back()}}}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  std::string md = "# Comparability: " + controller.name() + " on " + dm.name() + "\n\n";
  md += "| Scenarios | Comparable | Consistent | mean abs MAE diff | max abs MAE diff |\n|---|---|---|---|---|\n";
  md += "| " + std::to_string(result.rows.size()) + " | " + std::to_string(result.comparable) + " | " +
        std::to_string(result.consistent) + " | " + format_fixed(mean, 4) + " | " + format_fixed(diffs.back(), 4) +
        " |\n";
  write_text(dir / "table.md", md);
}

// ---------------------------------------------------------------------------
// mine

inline MineConfig mine_config(const ExperimentConfig& cfg) {
  MineConfig m;
  m.sim = cfg.sim;
  m.thresholds = cfg.thresholds;
  m.oracle = cfg.oracle;
  m.jobs = cfg.jobs;
  return m;
}

inline void write_mine(const std::filesystem::path& dir, const DomainModel& dm, const MineReport& report,
                       const MineConfig& cfg) {
  write_text(dir / "report.json", report_json(dm, report, cfg).dump(2) + "\n");
  write_text(dir / "report.md", report_markdown(dm, report, cfg));
  write_text(dir / "vectors.csv", vectors_csv(dm, report, cfg.thresholds));
}

}  // namespace lanecheck

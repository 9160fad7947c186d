// lanecheck command-line driver.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lanecheck/default_model.hpp"
#include "lanecheck/experiments.hpp"

namespace fs = std::filesystem;
using namespace lanecheck;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitFlagged = 3;

struct Options {
  std::string model = "default";
  std::string controller = "oracle";
  std::string out;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  double duration = 60.0;
  double dt = 0.05;
  Thresholds thresholds;
  bool keep_traces = false;

  // per-subcommand
  int strength = 2;
  std::vector<std::string> focus;
  std::string scenario;
  std::string id;
  std::string sequence;
  std::string sim;
  std::string real;
  std::string label_column = "theta";
  std::size_t scenarios = 100;
  double jitter = 0.02;
  std::size_t budget = 200;
  std::size_t repetitions = 20;
};

DomainModel load_model(const std::string& spec) {
  if (spec == "default") return default_domain();
  return load_domain_file(spec);
}

ExperimentConfig experiment_config(const Options& o) {
  ExperimentConfig cfg;
  cfg.thresholds = o.thresholds;
  cfg.sim.duration = o.duration;
  cfg.sim.dt = o.dt;
  cfg.sim.tau_online = o.thresholds.tau_online;
  cfg.seed = o.seed;
  cfg.jobs = o.jobs;
  cfg.keep_traces = o.keep_traces;
  cfg.check();
  return cfg;
}

/// Writes to the --out path, or to stdout when none was given.
void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

void require_out(const Options& o, const char* what) {
  if (o.out.empty()) throw ConfigError(std::string("--out ") + what + " is required");
}

Scenario pick_scenario(const DomainModel& dm, const Options& o) {
  if (o.scenario.empty()) {
    auto s = sample_scenario(dm, o.seed);
    if (!o.id.empty()) s.id = o.id;
    return s;
  }
  const std::string text = read_file(o.scenario);
  if (fs::path(o.scenario).extension() == ".csv") {
    const auto rows = read_scenarios_csv(dm, text);
    if (rows.empty()) throw ConfigError("'" + o.scenario + "' holds no scenarios");
    if (o.id.empty()) return rows.front();
    for (const auto& s : rows) {
      if (s.id == o.id) return s;
    }
    throw ConfigError("no scenario '" + o.id + "' in '" + o.scenario + "'");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("scenario file '" + o.scenario + "': " + e.what());
  }
  return scenario_from_json(dm, j);
}

void add_common(CLI::App* sub, Options& o, bool controller, bool sim) {
  sub->add_option("--model", o.model, "Domain model JSON file, or 'default'");
  if (controller) sub->add_option("--controller", o.controller, "Preset name, constant:<v>, or controller JSON file");
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  if (sim) {
    sub->add_option("--T", o.duration, "Simulated seconds per scenario");
    sub->add_option("--dt", o.dt, "Time step in seconds");
    sub->add_option("--tau-offline", o.thresholds.tau_offline, "MAE acceptability threshold");
    sub->add_option("--tau-online", o.thresholds.tau_online, "MDCL acceptability threshold");
  }
}

int cmd_gen(const Options& o) {
  const auto dm = load_model(o.model);
  CoverOptions options;
  options.jobs = o.jobs;
  for (const auto& name : o.focus) options.focus.push_back(dm.index_of(name));
  const auto ca = generate_covering_array(dm, o.strength, o.seed, options);
  emit(o.out, scenarios_csv(dm, ca.scenarios));
  std::fprintf(stderr, "%zu scenarios, %zu/%zu feasible %d-tuples covered, %zu infeasible\n", ca.scenarios.size(),
               ca.covered, ca.feasible_total, ca.strength, ca.infeasible_total);
  return kExitOk;
}

int cmd_simulate(const Options& o) {
  const auto dm = load_model(o.model);
  const auto cfg = experiment_config(o);
  const auto scenario = pick_scenario(dm, o);
  const auto controller = load_controller(o.controller, dm);
  const auto run = run_online(dm, scenario, controller, cfg.sim);
  emit(o.out, trace_csv(run.trace));
  nlohmann::ordered_json summary = {{"scenarioId", scenario.id},
                                    {"controller", controller.name()},
                                    {"steps", run.trace.steps.size()},
                                    {"roadEndReached", run.trace.road_end_reached},
                                    {"mdclRaw", run.result.mdcl_raw},
                                    {"mdcl", run.result.mdcl},
                                    {"acceptableOnline", run.result.mdcl < cfg.thresholds.tau_online}};
  std::cerr << summary.dump(2) << "\n";
  return kExitOk;
}

int cmd_offline(const Options& o) {
  const auto cfg = experiment_config(o);
  const auto dm = load_model(o.model);
  const auto controller = load_controller(o.controller, dm);
  LabeledSequence seq;
  if (!o.sequence.empty()) {
    seq = read_sequence_csv(read_file(o.sequence), fs::path(o.sequence).stem().string(), o.label_column);
  } else {
    seq = run_reference(dm, pick_scenario(dm, o), cfg.sim);
  }
  const auto r = replay(controller, seq, cfg.thresholds.tau_offline);
  nlohmann::ordered_json j = {{"sequence", r.scenario_id},
                              {"controller", controller.name()},
                              {"n", r.n},
                              {"mae", r.mae},
                              {"rmse", r.rmse},
                              {"maxAbsError", r.max_abs_error},
                              {"acceptableOffline", r.acceptable}};
  emit(o.out, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_match(const Options& o) {
  o.thresholds.check();
  const auto sim = read_sequence_csv(read_file(o.sim), "sim", o.label_column);
  const auto real = read_sequence_csv(read_file(o.real), "real", o.label_column);
  const auto m = match_subsequence(sim.steering, real.steering, o.thresholds.epsilon, o.seed);
  nlohmann::ordered_json j = {{"x", m.x},
                              {"length", m.l},
                              {"meanDiff", m.mean_diff},
                              {"epsilon", o.thresholds.epsilon},
                              {"comparable", m.comparable},
                              {"ties", m.ties}};
  emit(o.out, j.dump(2) + "\n");
  return kExitOk;
}

int cmd_compare(const Options& o) {
  require_out(o, "<directory>");
  const auto cfg = experiment_config(o);
  const auto dm = load_model(o.model);
  const auto controller = load_controller(o.controller, dm);
  const auto result = run_compare(dm, controller, cfg, o.strength);
  write_compare(o.out, dm, controller, cfg, result);
  std::fprintf(stderr, "%zu scenarios, %zu disagreements\n", result.rows.size(), result.table.disagreements());
  return kExitOk;
}

int cmd_mine(const Options& o) {
  require_out(o, "<report.json>");
  const auto cfg = experiment_config(o);
  const auto dm = load_model(o.model);
  const auto controller = load_controller(o.controller, dm);
  auto mc = mine_config(cfg);
  mc.confirm_budget = o.budget;
  mc.repetitions = o.repetitions;
  const auto report = mine_pipeline(dm, controller, mc, o.seed);
  const fs::path json_path(o.out);
  fs::path md_path = json_path;
  md_path.replace_extension(".md");
  const fs::path csv_path = json_path.parent_path() / (json_path.stem().string() + "-vectors.csv");
  write_text(json_path, report_json(dm, report, mc).dump(2) + "\n");
  write_text(md_path, report_markdown(dm, report, mc));
  write_text(csv_path, vectors_csv(dm, report, mc.thresholds));
  std::fprintf(stderr, "%zu vectors, %zu rules, %zu flags\n", report.vectors.size(), report.rules.rules.size(),
               report.flags.size());
  for (const auto& f : report.flags) std::fprintf(stderr, "flag: %s\n", f.c_str());
  return report.budget_flagged() ? kExitFlagged : kExitOk;
}

int cmd_rq1(const Options& o) {
  require_out(o, "<directory>");
  const auto cfg = experiment_config(o);
  const auto dm = load_model(o.model);
  const auto controller = load_controller(o.controller, dm);
  Rq1Options options;
  options.scenarios = o.scenarios;
  options.jitter = o.jitter;
  const auto result = run_rq1(dm, controller, cfg, options);
  write_rq1(o.out, dm, controller, cfg, options, result);
  std::fprintf(stderr, "%zu/%zu comparable, %zu consistent\n", result.comparable, result.rows.size(),
               result.consistent);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline versus online testing of lane-keeping controllers"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen", "Generate a covering array of scenarios (CSV)");
  add_common(gen, o, false, false);
  gen->add_option("--strength", o.strength, "Interaction strength n")->check(CLI::Range(1, 6));
  gen->add_option("--focus", o.focus, "Restrict coverage to these attributes")->delimiter(',');
  gen->add_option("--out", o.out, "Output CSV (default stdout)");

  auto* simulate = app.add_subcommand("simulate", "Run one scenario in closed loop and write its trace");
  add_common(simulate, o, true, true);
  simulate->add_option("--scenario", o.scenario, "Scenario JSON, or a CSV from gen (default: sampled from --seed)");
  simulate->add_option("--id", o.id, "Scenario id to pick from a CSV");
  simulate->add_option("--out", o.out, "Trace CSV (default stdout)");

  auto* offline = app.add_subcommand("offline", "Replay a labelled sequence and report MAE/RMSE");
  add_common(offline, o, true, true);
  offline->add_option("--sequence", o.sequence, "Labelled sequence CSV (default: oracle run of --scenario)");
  offline->add_option("--scenario", o.scenario, "Scenario JSON or gen CSV");
  offline->add_option("--id", o.id, "Scenario id to pick from a CSV");
  offline->add_option("--label-column", o.label_column, "Column holding the steering labels");
  offline->add_option("--out", o.out, "Result JSON (default stdout)");

  auto* match = app.add_subcommand("match", "Find the closest window of a real sequence to a simulated one");
  match->add_option("--sim", o.sim, "Simulated sequence CSV")->required();
  match->add_option("--real", o.real, "Real sequence CSV")->required();
  match->add_option("--label-column", o.label_column, "Column holding the steering labels");
  match->add_option("--epsilon", o.thresholds.epsilon, "Comparability threshold");
  match->add_option("--seed", o.seed, "Seed for tie breaking");
  match->add_option("--out", o.out, "Result JSON (default stdout)");

  auto* compare = app.add_subcommand("compare", "Offline versus online verdicts over a covering array");
  add_common(compare, o, true, true);
  compare->add_option("--strength", o.strength, "Interaction strength n")->check(CLI::Range(1, 6));
  compare->add_flag("--keep-traces", o.keep_traces, "Write every closed-loop trace");
  compare->add_option("--out", o.out, "Output directory");

  auto* mine = app.add_subcommand("mine", "Learn and confirm rules explaining disagreements");
  add_common(mine, o, true, true);
  mine->add_option("--lambda", o.thresholds.lambda, "Target confidence-interval width");
  mine->add_option("--budget", o.budget, "Confirmation samples per rule")->check(CLI::PositiveNumber);
  mine->add_option("--repetitions", o.repetitions, "Permutation-importance repetitions");
  mine->add_option("--out", o.out, "Report JSON; the markdown and vectors CSV are written beside it");

  auto* rq1 = app.add_subcommand("rq1", "Comparability of simulated and real-like sequences");
  add_common(rq1, o, true, true);
  rq1->add_option("--scenarios", o.scenarios, "Number of sampled scenarios")->check(CLI::PositiveNumber);
  rq1->add_option("--jitter", o.jitter, "Label noise of the reference sequence");
  rq1->add_option("--epsilon", o.thresholds.epsilon, "Comparability threshold");
  rq1->add_option("--tau-consist", o.thresholds.tau_consist, "Consistency threshold");
  rq1->add_option("--out", o.out, "Output directory");
  rq1->preparse_callback([&](std::size_t) { o.duration = 20.0; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*simulate) return cmd_simulate(o);
    if (*offline) return cmd_offline(o);
    if (*match) return cmd_match(o);
    if (*compare) return cmd_compare(o);
    if (*mine) return cmd_mine(o);
    if (*rq1) return cmd_rq1(o);
  } catch (const BudgetExceeded& e) {
    std::fprintf(stderr, "lanecheck: %s\n", e.what());
    return kExitFlagged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lanecheck: %s\n", e.what());
    return kExitDomain;
  }
  return kExitUsage;
}

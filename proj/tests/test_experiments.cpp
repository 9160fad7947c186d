#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lanecheck/default_model.hpp"
#include "lanecheck/experiments.hpp"

namespace lanecheck {
namespace {

const std::string kModels = std::string(LANECHECK_SOURCE_DIR) + "/models/";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig short_config(double duration = 10.0) {
  ExperimentConfig cfg;
  cfg.sim.duration = duration;
  cfg.seed = 7;
  return cfg;
}

TEST(Rq1, UnjitteredReferenceMatchesExactly) {
  const auto dm = load_domain_file(kModels + "restricted.json");
  const auto controller = Controller::oracle();
  Rq1Options options;
  options.scenarios = 12;
  options.jitter = 0.0;
  const auto r = run_rq1(dm, controller, short_config(), options);
  EXPECT_EQ(r.comparable, 12u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.match.mean_diff, 0.0);
    EXPECT_TRUE(row.consistent);
  }
}

TEST(Rq1, ZeroEpsilonWithJitterGivesNoComparable) {
  const auto dm = load_domain_file(kModels + "restricted.json");
  auto cfg = short_config();
  cfg.thresholds.epsilon = 0.0;
  Rq1Options options;
  options.scenarios = 10;
  const auto r = run_rq1(dm, Controller::oracle(), cfg, options);
  EXPECT_EQ(r.comparable, 0u);
}

TEST(Rq1, SmallJitterStaysComparable) {
  const auto dm = load_domain_file(kModels + "restricted.json");
  Rq1Options options;
  options.scenarios = 10;
  const auto r = run_rq1(dm, load_controller("biased-small", dm), short_config(), options);
  EXPECT_GE(r.comparable, 9u);
  for (const auto& row : r.rows) EXPECT_LE(row.match.mean_diff, 0.03);
}

TEST(Rq1, IndependentOfJobs) {
  const auto dm = load_domain_file(kModels + "restricted.json");
  Rq1Options options;
  options.scenarios = 8;
  auto cfg = short_config();
  const auto a = run_rq1(dm, Controller::oracle(), cfg, options);
  cfg.jobs = 4;
  const auto b = run_rq1(dm, Controller::oracle(), cfg, options);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].match.x, b.rows[i].match.x);
    EXPECT_EQ(a.rows[i].mae_real, b.rows[i].mae_real);
  }
}

TEST(Rq1, JitteredReferenceOnDefaultModel) {
  const auto dm = default_domain();
  auto cfg = short_config(20.0);
  const auto r = run_rq1(dm, Controller::oracle(), cfg, Rq1Options{});
  EXPECT_EQ(r.rows.size(), 100u);
  EXPECT_GE(r.comparable, 90u);
}

TEST(Compare, SmallBiasOnStraightRoadsIsOfflineOnlyAcceptable) {
  const auto dm = load_domain_file(kModels + "straight.json");
  const auto r = run_compare(dm, load_controller("biased-small", dm), short_config(20.0));
  EXPECT_EQ(r.table.online_bad_offline_ok, r.rows.size());
}

TEST(Compare, OracleIsAcceptableEverywhere) {
  const auto dm = default_domain();
  const auto r = run_compare(dm, Controller::oracle(), short_config(20.0));
  EXPECT_EQ(r.table.online_ok_offline_ok, r.rows.size());
}

TEST(Compare, RowsSortedAndCountsAddUp) {
  const auto dm = load_domain_file(kModels + "restricted.json");
  const auto controller = load_controller("biased-large", dm);
  const auto r = run_compare(dm, controller, short_config());
  ASSERT_FALSE(r.rows.empty());
  EXPECT_EQ(r.table.total(), r.rows.size());
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    EXPECT_LT(r.rows[i - 1].eval.scenario.id, r.rows[i].eval.scenario.id);
  }
  // A constant 0.15 bias is never offline-acceptable.
  EXPECT_EQ(r.table.online_ok_offline_ok + r.table.online_bad_offline_ok, 0u);
}

TEST(Compare, WritesOutputsAndTraces) {
  const auto dm = load_domain_file(kModels + "restricted.json");
  const auto controller = Controller::oracle();
  auto cfg = short_config(5.0);
  cfg.keep_traces = true;
  const auto r = run_compare(dm, controller, cfg);
  const auto dir = std::filesystem::temp_directory_path() / "lanecheck-compare-test";
  std::filesystem::remove_all(dir);
  write_compare(dir, dm, controller, cfg, r);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["scenarios"], r.rows.size());
  EXPECT_EQ(summary["disagreements"], 0);
  const auto csv = slurp(dir / "compare.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.rows.size() + 1);
  EXPECT_NE(slurp(dir / "table.md").find("| MDCL < tau_online |"), std::string::npos);

  // A saved trace reads back as the oracle's labelled sequence.
  const auto& first = r.rows.front();
  const auto seq = read_sequence_csv(slurp(dir / "traces" / (first.eval.scenario.id + ".csv")), "t");
  const auto ref = run_reference(dm, first.eval.scenario, cfg.sim);
  ASSERT_EQ(seq.size(), ref.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_EQ(seq.steering[i], ref.steering[i]);
    EXPECT_EQ(seq.observations[i].lateral_offset, ref.observations[i].lateral_offset);
  }
  std::filesystem::remove_all(dir);
}

TEST(SequenceCsv, RejectsBadInput) {
  EXPECT_THROW(read_sequence_csv("", "x"), ParseError);
  EXPECT_THROW(read_sequence_csv("a,b\n1,2\n", "x"), ParseError);
  EXPECT_THROW(read_sequence_csv("theta\nfoo\n", "x"), ParseError);
  EXPECT_THROW(read_sequence_csv("theta\n", "x"), ParseError);
  const auto s = read_sequence_csv("theta,offset\n0.5,1\n", "x");
  EXPECT_EQ(s.steering.front(), 0.5);
  EXPECT_EQ(s.observations.front().lateral_offset, 1.0);
}

TEST(Config, RejectsBadValues) {
  ExperimentConfig cfg;
  cfg.jobs = 0;
  EXPECT_THROW(cfg.check(), ConfigError);
  cfg.jobs = 1;
  cfg.sim.duration = 0.0;
  EXPECT_THROW(cfg.check(), ConfigError);
  cfg.sim.duration = 1.0;
  cfg.thresholds.tau_offline = 0.0;
  EXPECT_THROW(cfg.check(), ConfigError);
}

}  // namespace
}  // namespace lanecheck

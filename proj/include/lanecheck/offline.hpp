#pragma once

// Open-loop evaluation and the offline/online comparison statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "closed_loop.hpp"
#include "controllers.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "sim.hpp"

namespace lanecheck {

/// Decision thresholds. Acceptability uses strict `<`; comparability and
/// consistency use `<=`.
struct Thresholds {
  double tau_offline = 0.1;  // MAE, steering units (2.5 degrees)
  double tau_online = 0.7;   // normalised MDCL
  double epsilon = 0.1;      // mean steering difference for comparability
  double tau_consist = 0.1;  // |MAE difference| for consistency
  double lambda = 0.2;       // confidence-interval width target

  void check() const {
    for (double t : {tau_offline, tau_online, tau_consist, lambda}) {
      if (!(t > 0.0 && t <= 1.0)) throw ConfigError("thresholds must lie in (0, 1]");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  }
};

struct OfflineResult {
  std::string scenario_id;
  double mae = 0.0;
  double rmse = 0.0;
  double max_abs_error = 0.0;
  std::size_t n = 0;
  bool acceptable = true;
};

/// MAE and RMSE of predictions against labels.
inline OfflineResult prediction_error(std::span<const double> labels, std::span<const double> predictions,
                                      double tau_offline = 0.1) {
  if (labels.size() != predictions.size()) throw Error("label and prediction counts differ");
  if (labels.empty()) throw Error("cannot evaluate an empty sequence");
  OfflineResult r;
  r.n = labels.size();
  // Running means: a constant error e gives exactly e, so a bias sitting on a
  // threshold is not pushed below it by summation rounding.
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double e = std::abs(labels[i] - predictions[i]);
    const double k = static_cast<double>(i + 1);
    r.mae += (e - r.mae) / k;
    mean_sq += (e * e - mean_sq) / k;
    r.max_abs_error = std::max(r.max_abs_error, e);
  }
  r.rmse = std::sqrt(mean_sq);
  // Guard the MAE <= RMSE invariant against last-bit rounding.
  r.rmse = std::max(r.rmse, r.mae);
  r.acceptable = r.mae < tau_offline;
  return r;
}

/// Feeds the recorded observations to a fresh session of the controller and
/// scores its steering against the labels.
inline OfflineResult replay(const Controller& controller, const LabeledSequence& seq, double tau_offline = 0.1) {
  if (seq.empty()) throw Error("replay: empty sequence");
  if (seq.observations.size() != seq.steering.size()) throw Error("replay: observation and label counts differ");
  auto session = seq.scenario ? controller.start(*seq.scenario) : controller.start();
  std::vector<double> predicted;
  predicted.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    try {
      predicted.push_back(session.steer(seq.observations[i]));
    } catch (const std::exception& e) {
      throw Error("controller '" + controller.name() + "' failed at index " + std::to_string(i) + ": " + e.what());
    }
  }
  auto r = prediction_error(seq.steering, predicted, tau_offline);
  r.scenario_id = seq.scenario_id;
  return r;
}

// ---------------------------------------------------------------------------
// Comparability of a simulated sequence with a real one

struct MatchResult {
  std::size_t x = 0;  // start offset into the real sequence
  std::size_t l = 0;  // matched length (= simulated length)
  double mean_diff = 0.0;
  bool comparable = false;
  std::size_t ties = 1;      // number of offsets attaining the minimum
  std::uint64_t seed = 0;    // seed used to break ties
};

/// Finds the window of `real` (length |sim|) with the smallest mean absolute
/// steering difference by exhaustive scan. Windows are abandoned as soon as
/// their partial sum exceeds the best so far, which does not change the
/// result. Ties are broken uniformly at random with `seed`.
inline MatchResult match_subsequence(std::span<const double> sim, std::span<const double> real, double epsilon,
                                     std::uint64_t seed = 0) {
  if (sim.empty()) throw Error("match: empty simulated sequence");
  if (sim.size() > real.size()) throw Error("match: simulated sequence is longer than the real sequence");
  if (epsilon < 0.0) throw Error("match: epsilon must be non-negative");
  const std::size_t l = sim.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> argmins;
  for (std::size_t x = 0; x + l <= real.size(); ++x) {
    double sum = 0.0;
    bool abandoned = false;
    for (std::size_t j = 0; j < l; ++j) {
      sum += std::abs(sim[j] - real[x + j]);
      if (sum > best) {
        abandoned = true;
        break;
      }
    }
    if (abandoned) continue;
    if (sum < best) {
      best = sum;
      argmins.assign(1, x);
    } else {
      argmins.push_back(x);
    }
  }
  MatchResult r;
  r.l = l;
  r.seed = seed;
  r.ties = argmins.size();
  Rng rng(seed);
  r.x = argmins.size() == 1 ? argmins.front() : argmins[rng.index(argmins.size())];
  r.mean_diff = best / static_cast<double>(l);
  r.comparable = r.mean_diff <= epsilon;
  return r;
}

/// Offline results on two datasets agree when their MAEs differ by at most
/// tau_consist.
inline bool consistent(double mae_sim, double mae_real, double tau_consist = 0.1) {
  if (mae_sim < 0.0 || mae_real < 0.0) throw Error("consistent: MAE must be non-negative");
  return std::abs(mae_sim - mae_real) <= tau_consist;
}

// ---------------------------------------------------------------------------
// Agreement between offline and online verdicts

enum class Agreement { Agree, Disagree };

inline std::string_view to_string(Agreement a) { return a == Agreement::Agree ? "agree" : "disagree"; }

struct AgreementRecord {
  std::string scenario_id;
  double mae = 0.0;
  double mdcl = 0.0;
  bool acceptable_offline = false;
  bool acceptable_online = false;
  Agreement label = Agreement::Agree;
};

inline AgreementRecord classify(const std::string& scenario_id, double mae, double mdcl,
                                const Thresholds& t = {}) {
  AgreementRecord r;
  r.scenario_id = scenario_id;
  r.mae = mae;
  r.mdcl = mdcl;
  r.acceptable_offline = mae < t.tau_offline;
  r.acceptable_online = mdcl < t.tau_online;
  r.label = r.acceptable_offline == r.acceptable_online ? Agreement::Agree : Agreement::Disagree;
  return r;
}

inline AgreementRecord classify(const OfflineResult& offline, const OnlineResult& online, const Thresholds& t = {}) {
  if (!offline.scenario_id.empty() && !online.scenario_id.empty() && offline.scenario_id != online.scenario_id) {
    throw Error("classify: offline result for '" + offline.scenario_id + "' paired with online result for '" +
                online.scenario_id + "'");
  }
  return classify(offline.scenario_id.empty() ? online.scenario_id : offline.scenario_id, offline.mae, online.mdcl,
                  t);
}

/// Average ranks (1-based); tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

/// Spearman's rank correlation (Pearson correlation of average ranks).
/// Returns nullopt when either argument has no rank variance.
inline std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("spearman: length mismatch");
  if (xs.size() < 2) throw Error("spearman: need at least two pairs");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double mean = 0.5 * static_cast<double>(xs.size() + 1);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Scenario counts by online verdict (rows) and offline verdict (columns).
struct Contingency {
  std::size_t online_ok_offline_ok = 0;
  std::size_t online_ok_offline_bad = 0;
  std::size_t online_bad_offline_ok = 0;
  std::size_t online_bad_offline_bad = 0;

  std::size_t total() const {
    return online_ok_offline_ok + online_ok_offline_bad + online_bad_offline_ok + online_bad_offline_bad;
  }
  std::size_t disagreements() const { return online_ok_offline_bad + online_bad_offline_ok; }

  friend bool operator==(const Contingency&, const Contingency&) = default;
};

inline Contingency contingency(std::span<const AgreementRecord> records) {
  if (records.empty()) throw Error("contingency: no records");
  Contingency c;
  for (const auto& r : records) {
    if (r.acceptable_online) {
      (r.acceptable_offline ? c.online_ok_offline_ok : c.online_ok_offline_bad)++;
    } else {
      (r.acceptable_offline ? c.online_bad_offline_ok : c.online_bad_offline_bad)++;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Full per-scenario evaluation

struct ScenarioEvaluation {
  Scenario scenario;
  OfflineResult offline;
  OnlineResult online;
  AgreementRecord record;
  bool road_end_reached = false;
  bool left_road = false;
};

/// Offline replay on the simulator-generated labelled sequence plus an online
/// run of the same scenario, classified against the thresholds.
inline ScenarioEvaluation evaluate_scenario(const DomainModel& dm, const Scenario& scenario,
                                            const Controller& controller, const SimConfig& cfg = {},
                                            const Thresholds& thresholds = {}, const OracleGains& oracle = {}) {
  ScenarioEvaluation ev;
  ev.scenario = scenario;
  const auto reference = run_reference(dm, scenario, cfg, oracle);
  ev.offline = replay(controller, reference, thresholds.tau_offline);
  const auto online = run_online(dm, scenario, controller, cfg, oracle);
  ev.online = online.result;
  ev.online.acceptable = ev.online.mdcl < thresholds.tau_online;
  ev.road_end_reached = online.trace.road_end_reached;
  ev.left_road = online.trace.left_road;
  ev.record = classify(ev.offline, ev.online, thresholds);
  return ev;
}

}  // namespace lanecheck

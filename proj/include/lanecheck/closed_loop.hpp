#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "controllers.hpp"
#include "domain.hpp"
#include "error.hpp"
#include "sim.hpp"

namespace lanecheck {

struct TraceStep {
  Observation observation;
  double theta = 0.0;      // oracle steering at the ego's actual state
  double theta_hat = 0.0;  // steering of the controller under test
  VehicleState state;      // state at which the observation was taken
  double station = 0.0;
  double deviation = 0.0;  // |lateral offset|, m
};

struct Trace {
  std::string scenario_id;
  double dt = 0.05;
  std::size_t requested_steps = 0;
  std::vector<TraceStep> steps;
  bool road_end_reached = false;  // stopped before requested_steps
  bool left_road = false;         // some observation saturated
};

struct OnlineRun {
  Trace trace;
  OnlineResult result;
};

/// Closed-loop run. At each step: observe, record the oracle label and the
/// controller's command, record the deviation, then apply the command to the
/// vehicle. Stops after floor(T / dt) steps or when the vehicle passes the
/// end of the road.
inline OnlineRun run_online(const DomainModel& dm, const Scenario& scenario, const Controller& controller,
                            const SimConfig& cfg = {}, const OracleGains& oracle = {}) {
  if (cfg.dt <= 0.0 || cfg.duration <= 0.0) throw ConfigError("T and dt must be positive");
  const std::size_t m = cfg.steps();
  if (m < 2) throw ConfigError("T / dt must give at least two steps");

  const RoadGeometry road = build_road(dm, scenario, cfg);
  const double speed = vehicle_speed(dm, scenario, cfg);
  const SensorModel sensor = sensor_model(dm, scenario, cfg);
  auto session = controller.start(scenario);

  OnlineRun run;
  Trace& trace = run.trace;
  trace.scenario_id = scenario.id;
  trace.dt = cfg.dt;
  trace.requested_steps = m;
  trace.steps.reserve(m);

  const RoadSegment& first = road.segments.front();
  VehicleState state{first.start.x, first.start.y, normalize_angle(first.start_heading), 0};
  double station = 0.0;
  std::vector<double> deviations;
  deviations.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto where = road.project({state.x, state.y}, station);
    station = where.station;
    if (station >= road.length()) {
      trace.road_end_reached = true;
      break;
    }
    TraceStep step;
    step.observation = synthesize_observation(road, state, sensor, where);
    step.theta = oracle_steering(step.observation, oracle);
    try {
      step.theta_hat = session.steer(step.observation);
    } catch (const std::exception& e) {
      throw Error("controller '" + controller.name() + "' failed at step " + std::to_string(j) + ": " + e.what());
    }
    step.state = state;
    step.station = station;
    step.deviation = std::abs(where.offset);
    trace.left_road = trace.left_road || step.observation.off_road;
    deviations.push_back(step.deviation);
    state = step_vehicle(state, step.theta_hat, speed, cfg.dt, cfg);
    trace.steps.push_back(std::move(step));
  }
  run.result = mdcl_from_deviations(deviations, cfg);
  run.result.scenario_id = scenario.id;
  return run;
}

// ---------------------------------------------------------------------------
// Labelled sequences

struct LabeledSequence {
  enum class Provenance { Simulated, External };

  std::string scenario_id;
  Provenance provenance = Provenance::Simulated;
  std::optional<Scenario> scenario;  // context for controller triggers and noise
  std::vector<Observation> observations;
  std::vector<double> steering;

  std::size_t size() const noexcept { return steering.size(); }
  bool empty() const noexcept { return steering.empty(); }

  LabeledSequence slice(std::size_t start, std::size_t length) const {
    LabeledSequence out;
    out.scenario_id = scenario_id;
    out.provenance = provenance;
    out.scenario = scenario;
    out.observations.assign(observations.begin() + static_cast<std::ptrdiff_t>(start),
                            observations.begin() + static_cast<std::ptrdiff_t>(start + length));
    out.steering.assign(steering.begin() + static_cast<std::ptrdiff_t>(start),
                        steering.begin() + static_cast<std::ptrdiff_t>(start + length));
    return out;
  }
};

inline LabeledSequence labeled_from_trace(const Trace& trace, const Scenario& scenario) {
  LabeledSequence seq;
  seq.scenario_id = trace.scenario_id;
  seq.scenario = scenario;
  for (const auto& step : trace.steps) {
    seq.observations.push_back(step.observation);
    seq.steering.push_back(step.theta);
  }
  return seq;
}

/// Simulator-generated labelled dataset: the oracle drives the scenario and
/// every (observation, oracle steering) pair is recorded.
inline LabeledSequence run_reference(const DomainModel& dm, const Scenario& scenario, const SimConfig& cfg = {},
                                     const OracleGains& oracle = {}) {
  const auto run = run_online(dm, scenario, Controller::oracle(oracle), cfg, oracle);
  return labeled_from_trace(run.trace, scenario);
}

}  // namespace lanecheck

#pragma once

// Road geometry, vehicle kinematics, observation synthesis and the lane
// departure metric.
//
// Frame: x forward, y to the right, headings measured from +x towards +y.
// Positive curvature bends the road to the right and positive steering
// turns the vehicle to the right. Lateral offsets are signed, vehicle minus
// centreline, positive to the right.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "rng.hpp"

namespace lanecheck {

inline constexpr double kMinRadius = 10.0;

struct SimConfig {
  double dt = 0.05;        // s, 20 frames per second
  double duration = 60.0;  // s
  double wheelbase = 2.9;  // m
  double max_steer_deg = 25.0;
  double lane_width = 3.5;
  double mdcl_cap = 1.5;  // m
  double tau_online = 0.7;
  double off_road_limit = 10.0;  // m
  double base_noise_sigma = 0.1;
  std::size_t noise_channels = 4;
  double default_speed_kmh = 30.0;
  double default_road_length = 500.0;

  /// m = floor(T / dt), tolerant to the rounding of T / dt.
  std::size_t steps() const { return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)); }
  double max_steer_rad() const { return max_steer_deg * std::numbers::pi / 180.0; }
};

inline double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

// ---------------------------------------------------------------------------
// Road geometry

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// A line (curvature 0) or circular arc of the centreline.
struct RoadSegment {
  double start_s = 0.0;
  double length = 0.0;
  Vec2 start;
  double start_heading = 0.0;
  double curvature = 0.0;

  double end_s() const { return start_s + length; }

  double heading_at(double u) const { return start_heading + curvature * u; }

  Vec2 point_at(double u) const {
    if (curvature == 0.0) {
      return {start.x + u * std::cos(start_heading), start.y + u * std::sin(start_heading)};
    }
    const double h = heading_at(u);
    return {start.x + (std::sin(h) - std::sin(start_heading)) / curvature,
            start.y - (std::cos(h) - std::cos(start_heading)) / curvature};
  }

  /// Local arc-length parameter of the point nearest to p. Not clamped: a
  /// value outside [0, length] lies on the extension of the segment.
  double project(Vec2 p) const {
    if (curvature == 0.0) {
      return (p.x - start.x) * std::cos(start_heading) + (p.y - start.y) * std::sin(start_heading);
    }
    const double r = 1.0 / curvature;
    const Vec2 c{start.x - r * std::sin(start_heading), start.y + r * std::cos(start_heading)};
    const double dx = (p.x - c.x) / r;
    const double dy = (p.y - c.y) / r;
    const double h = std::atan2(dx, -dy);
    const double mid = 0.5 * length;
    return mid + normalize_angle(h - heading_at(mid)) / curvature;
  }
};

struct RoadGeometry {
  std::vector<RoadSegment> segments;
  double lane_width = 3.5;

  double length() const { return segments.empty() ? 0.0 : segments.back().end_s(); }

  double max_curvature() const {
    double k = 0.0;
    for (const auto& seg : segments) k = std::max(k, std::abs(seg.curvature));
    return k;
  }

  const RoadSegment& segment_at(double s) const {
    for (const auto& seg : segments) {
      if (s < seg.end_s()) return seg;
    }
    return segments.back();
  }

  double curvature_at(double s) const { return segment_at(s).curvature; }

  /// Mean curvature over [s, s + distance]; the road is extended past its
  /// ends with the curvature of the first / last segment.
  double mean_curvature(double s, double distance) const {
    if (distance <= 0.0) return curvature_at(s);
    const double end = s + distance;
    double integral = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& seg = segments[i];
      const double lo = i == 0 ? -1e300 : seg.start_s;
      const double hi = i + 1 == segments.size() ? 1e300 : seg.end_s();
      const double overlap = std::min(hi, end) - std::max(lo, s);
      if (overlap > 0.0) integral += overlap * seg.curvature;
    }
    return integral / distance;
  }

  struct Projection {
    double station = 0.0;  // arc length along the centreline
    double offset = 0.0;   // signed, positive right of the centreline
    double heading = 0.0;  // road heading at the projection
  };

  /// Nearest centreline point, searching segments within `window` metres of
  /// a station hint so that distant parts of a winding road are ignored.
  Projection project(Vec2 p, double hint, double window = 40.0) const {
    std::optional<Projection> best;
    double best_distance = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& seg = segments[i];
      if (seg.end_s() < hint - window || seg.start_s > hint + window) continue;
      double u = seg.project(p);
      const double lo = i == 0 ? -1e300 : 0.0;
      const double hi = i + 1 == segments.size() ? 1e300 : seg.length;
      u = std::clamp(u, lo, hi);
      const Vec2 q = seg.point_at(u);
      const double distance = std::hypot(p.x - q.x, p.y - q.y);
      if (!best || distance < best_distance) {
        const double h = seg.heading_at(u);
        best = Projection{seg.start_s + u, (p.x - q.x) * -std::sin(h) + (p.y - q.y) * std::cos(h),
                          normalize_angle(h)};
        best_distance = distance;
      }
    }
    if (!best) return project(p, hint, window * 4.0);
    return *best;
  }
};

/// Road length from an optional "Road.length" attribute (metres).
inline double road_length(const DomainModel& dm, const Scenario& s, const SimConfig& cfg = {}) {
  if (auto i = dm.find("Road.length"); i && !dm.attribute(*i).is_enumeration()) return s.values[*i];
  return cfg.default_road_length;
}

/// Vehicle speed in m/s from the "Vehicle.speed" attribute (km/h).
inline double vehicle_speed(const DomainModel& dm, const Scenario& s, const SimConfig& cfg = {}) {
  if (auto i = dm.find("Vehicle.speed"); i && !dm.attribute(*i).is_enumeration()) return s.values[*i] / 3.6;
  return cfg.default_speed_kmh / 3.6;
}

/// Builds the centreline. "Straight" (or no Road.type attribute) gives one
/// line; any other Road.type gives alternating left/right arcs with radius
/// uniform in [30, 200] m ([30, 80] m for types starting with "Steep") and
/// turning angle uniform in [20, 90] degrees, drawn from the scenario seed.
inline RoadGeometry build_road(const DomainModel& dm, const Scenario& scenario, const SimConfig& cfg = {}) {
  RoadGeometry road;
  road.lane_width = cfg.lane_width;
  const double length = road_length(dm, scenario, cfg);
  std::string type = "Straight";
  if (auto i = dm.find("Road.type")) type = value_text(dm, scenario, *i);

  if (type == "Straight") {
    road.segments.push_back(RoadSegment{0.0, length, {}, 0.0, 0.0});
    return road;
  }
  const bool steep = type.rfind("Steep", 0) == 0;
  const double max_radius = steep ? 80.0 : 200.0;
  Rng rng(mix_seed(scenario.seed, hash_tag("road")));
  double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  double s = 0.0;
  Vec2 start;
  double heading = 0.0;
  while (s < length) {
    const double radius = rng.uniform(30.0, max_radius);
    const double angle = rng.uniform(20.0, 90.0) * std::numbers::pi / 180.0;
    RoadSegment seg{s, std::min(radius * angle, length - s), start, heading, sign / radius};
    start = seg.point_at(seg.length);
    heading = seg.heading_at(seg.length);
    s = seg.end_s();
    road.segments.push_back(seg);
    sign = -sign;
  }
  return road;
}

// ---------------------------------------------------------------------------
// Vehicle

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // (-pi, pi]
  std::size_t step = 0;

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Kinematic bicycle step: the steering command in [-1, 1] maps linearly to
/// a wheel angle of up to `max_steer_deg`; the vehicle advances v * dt along
/// the mean of the old and new heading.
inline VehicleState step_vehicle(const VehicleState& state, double steering, double speed, double dt,
                                 const SimConfig& cfg = {}) {
  const double delta = std::clamp(steering, -1.0, 1.0) * cfg.max_steer_rad();
  const double turn = speed / cfg.wheelbase * std::tan(delta) * dt;
  const double mean_heading = state.heading + 0.5 * turn;
  return VehicleState{state.x + speed * dt * std::cos(mean_heading), state.y + speed * dt * std::sin(mean_heading),
                      normalize_angle(state.heading + turn), state.step + 1};
}

/// Radius of the circle driven under a constant steering command.
inline double turning_radius(double steering, const SimConfig& cfg = {}) {
  return cfg.wheelbase / std::tan(std::abs(steering) * cfg.max_steer_rad());
}

// ---------------------------------------------------------------------------
// Observations

struct Observation {
  double lateral_offset = 0.0;
  double heading_error = 0.0;
  double curvature_ahead = 0.0;
  std::vector<double> noise;
  bool off_road = false;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Standard deviation of the noise channels for a scenario:
/// base * weather * intensity * buildings, where weather is Sunny 1, Rainy 2,
/// Snowy 3; intensity is None/Light 1, Moderate 1.5, Heavy 2; and buildings
/// True multiplies by 1.25. Missing attributes or other values count as 1.
inline double noise_sigma(const DomainModel& dm, const Scenario& s, const SimConfig& cfg = {}) {
  auto factor = [&](std::string_view attr, auto&& table) {
    auto i = dm.find(attr);
    if (!i) return 1.0;
    const std::string v = value_text(dm, s, *i);
    for (const auto& [name, f] : table) {
      if (v == name) return f;
    }
    return 1.0;
  };
  using Entry = std::pair<std::string_view, double>;
  const Entry weather[] = {{"Sunny", 1.0}, {"Rainy", 2.0}, {"Snowy", 3.0}};
  const Entry intensity[] = {{"None", 1.0}, {"Light", 1.0}, {"Moderate", 1.5}, {"Heavy", 2.0}};
  const Entry buildings[] = {{"False", 1.0}, {"True", 1.25}};
  return cfg.base_noise_sigma * factor("Weather.type", weather) * factor("Weather.condition", intensity) *
         factor("Environment.buildings", buildings);
}

/// Per-run sensor context: what synthesize_observation needs beyond geometry.
struct SensorModel {
  std::uint64_t seed = 0;
  double sigma = 0.0;
  std::size_t channels = 4;
  double lookahead = 0.0;  // m; curvature is averaged over the next lookahead metres
  double off_road_limit = 10.0;
};

inline SensorModel sensor_model(const DomainModel& dm, const Scenario& s, const SimConfig& cfg = {}) {
  return SensorModel{s.seed, noise_sigma(dm, s, cfg), cfg.noise_channels, vehicle_speed(dm, s, cfg) * cfg.dt,
                     cfg.off_road_limit};
}

/// Observation of the road from the vehicle state. Offset and heading error
/// are exact; the offset saturates at the off-road limit (flagged). Noise
/// channels are N(0, sigma) draws keyed by (scenario seed, step).
inline Observation synthesize_observation(const RoadGeometry& road, const VehicleState& state,
                                          const SensorModel& sensor, const RoadGeometry::Projection& where) {
  Observation obs;
  obs.lateral_offset = where.offset;
  if (std::abs(obs.lateral_offset) > sensor.off_road_limit) {
    obs.lateral_offset = std::copysign(sensor.off_road_limit, obs.lateral_offset);
    obs.off_road = true;
  }
  obs.heading_error = normalize_angle(state.heading - where.heading);
  obs.curvature_ahead = road.mean_curvature(where.station, sensor.lookahead);
  Rng rng(mix_seed(sensor.seed, hash_tag("sensor"), state.step));
  obs.noise.resize(sensor.channels);
  for (auto& v : obs.noise) v = sensor.sigma * rng.gaussian();
  return obs;
}

inline Observation synthesize_observation(const RoadGeometry& road, const VehicleState& state,
                                          const SensorModel& sensor, double station_hint = 0.0) {
  return synthesize_observation(road, state, sensor, road.project({state.x, state.y}, station_hint));
}

// ---------------------------------------------------------------------------
// Lane departure

struct OnlineResult {
  std::string scenario_id;
  double mdcl_raw = 0.0;  // m
  double mdcl = 0.0;      // min(raw, cap) / cap
  bool acceptable = true;
};

/// Maximum distance from the lane centre over a run, capped and normalised.
inline OnlineResult mdcl_from_deviations(std::span<const double> deviations, const SimConfig& cfg = {}) {
  OnlineResult r;
  for (double d : deviations) r.mdcl_raw = std::max(r.mdcl_raw, std::abs(d));
  r.mdcl = std::min(r.mdcl_raw, cfg.mdcl_cap) / cfg.mdcl_cap;
  r.acceptable = r.mdcl < cfg.tau_online;
  return r;
}

}  // namespace lanecheck

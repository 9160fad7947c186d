#pragma once

// Steering controllers: the geometric oracle that labels data, degraded
// variants that stand in for learned models, and user-supplied callables.
//
// A Controller is immutable and shareable. Running it on a scenario creates a
// Session, which owns the per-run state (latency buffer, step counter) and
// draws its noise from a stream keyed by (scenario seed, step).

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "domain.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "sim.hpp"

namespace lanecheck {

inline double clamp_steering(double v) {
  if (std::isnan(v)) return 0.0;
  return std::clamp(v, -1.0, 1.0);
}

/// Feedback gains of the oracle, in steering units.
struct OracleGains {
  double offset = 0.03;  // per metre of lateral offset
  double heading = 0.6;  // per radian of heading error
  double wheelbase = 2.9;
  double max_steer_deg = 25.0;

  friend bool operator==(const OracleGains&, const OracleGains&) = default;
};

/// Ground-truth steering: exact kinematic feedforward for the curvature
/// ahead plus proportional feedback on offset and heading error, clamped to
/// [-1, 1].
inline double oracle_steering(const Observation& obs, const OracleGains& gains = {}) {
  const double feedforward =
      std::atan(gains.wheelbase * obs.curvature_ahead) / (gains.max_steer_deg * std::numbers::pi / 180.0);
  return clamp_steering(feedforward - gains.offset * obs.lateral_offset - gains.heading * obs.heading_error);
}

struct DegradationParams {
  double bias = 0.0;
  double noise_sigma = 0.0;
  double curvature_gain = 1.0;
  int latency_steps = 0;

  friend bool operator==(const DegradationParams&, const DegradationParams&) = default;
};

/// Parameter values that replace the defaults when a trigger fires.
struct ParamOverride {
  std::optional<double> bias;
  std::optional<double> noise_sigma;
  std::optional<double> curvature_gain;
  std::optional<int> latency_steps;

  void apply(DegradationParams& p) const {
    if (bias) p.bias = *bias;
    if (noise_sigma) p.noise_sigma = *noise_sigma;
    if (curvature_gain) p.curvature_gain = *curvature_gain;
    if (latency_steps) p.latency_steps = *latency_steps;
  }
};

struct Trigger {
  Expr when;
  ParamOverride set;
};

struct DegradationSpec {
  DegradationParams params;
  std::vector<Trigger> triggers;  // applied in order; later triggers win

  /// Parameters in force for a scenario.
  DegradationParams resolve(const Scenario& s) const {
    DegradationParams p = params;
    for (const auto& t : triggers) {
      if (t.when.evaluate(s.values)) t.set.apply(p);
    }
    return p;
  }

  void check() const {
    auto check_params = [](double sigma, int latency) {
      if (sigma < 0.0) throw ConfigError("noiseSigma must be >= 0");
      if (latency < 0) throw ConfigError("latencySteps must be >= 0");
    };
    check_params(params.noise_sigma, params.latency_steps);
    for (const auto& t : triggers) check_params(t.set.noise_sigma.value_or(0.0), t.set.latency_steps.value_or(0));
  }
};

class Controller {
 public:
  using Function = std::function<double(const Observation&)>;

  class Session;

  static Controller oracle(OracleGains gains = {}) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Oracle;
    n->name = "oracle";
    n->gains = gains;
    return Controller(std::move(n));
  }

  /// Ignores its input and always returns `value` (clamped).
  static Controller constant(double value) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Constant;
    n->name = "constant";
    n->value = value;
    return Controller(std::move(n));
  }

  /// output = clamp(base(observation delayed by latency) * curvatureGain
  ///                + bias + N(0, noiseSigma))
  static Controller degraded(const Controller& base, DegradationSpec spec) {
    spec.check();
    auto n = std::make_shared<Node>();
    n->kind = Kind::Degraded;
    n->name = "degraded";
    n->base = base.node_;
    n->degradation = std::move(spec);
    return Controller(std::move(n));
  }

  /// Degraded controller with the triggers already resolved for `scenario`.
  static Controller degraded(const Controller& base, const DegradationSpec& spec, const Scenario& scenario) {
    spec.check();
    return degraded(base, DegradationSpec{spec.resolve(scenario), {}});
  }

  /// Wraps an arbitrary observation -> steering function (for adapters).
  static Controller custom(std::string name, Function fn) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Custom;
    n->name = std::move(name);
    n->fn = std::move(fn);
    return Controller(std::move(n));
  }

  const std::string& name() const noexcept { return node_->name; }
  void set_name(std::string name) {
    auto copy = std::make_shared<Node>(*node_);
    copy->name = std::move(name);
    node_ = std::move(copy);
  }

  Session start(const Scenario& scenario) const;

  /// Session without scenario context: triggers never fire, noise keyed by seed 0.
  Session start() const;

 private:
  enum class Kind { Oracle, Constant, Degraded, Custom };

  struct Node {
    Kind kind = Kind::Oracle;
    std::string name;
    OracleGains gains;
    double value = 0.0;
    std::shared_ptr<const Node> base;
    DegradationSpec degradation;
    Function fn;
  };

  explicit Controller(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

class Controller::Session {
 public:
  /// Steering for the next step.
  double steer(const Observation& obs) {
    const std::size_t step = step_++;
    switch (node_->kind) {
      case Kind::Oracle: return oracle_steering(obs, node_->gains);
      case Kind::Constant: return clamp_steering(node_->value);
      case Kind::Custom: return clamp_steering(node_->fn(obs));
      case Kind::Degraded: break;
    }
    history_.push_back(obs);
    while (history_.size() > static_cast<std::size_t>(params_.latency_steps) + 1) history_.pop_front();
    double out = base_->steer(history_.front()) * params_.curvature_gain + params_.bias;
    if (params_.noise_sigma > 0.0) {
      Rng rng(mix_seed(seed_, hash_tag("controller-noise"), depth_, step));
      out += params_.noise_sigma * rng.gaussian();
    }
    return clamp_steering(out);
  }

  const DegradationParams& params() const noexcept { return params_; }

 private:
  friend class Controller;

  Session(std::shared_ptr<const Node> node, const Scenario* scenario, std::size_t depth)
      : node_(std::move(node)), seed_(scenario ? scenario->seed : 0), depth_(depth) {
    if (node_->kind == Kind::Degraded) {
      params_ = scenario ? node_->degradation.resolve(*scenario) : node_->degradation.params;
      base_ = std::unique_ptr<Session>(new Session(node_->base, scenario, depth + 1));
    }
  }

  std::shared_ptr<const Node> node_;
  std::uint64_t seed_ = 0;
  std::size_t depth_ = 0;
  std::size_t step_ = 0;
  DegradationParams params_;
  std::unique_ptr<Session> base_;
  std::deque<Observation> history_;
};

inline Controller::Session Controller::start(const Scenario& scenario) const { return Session(node_, &scenario, 0); }
inline Controller::Session Controller::start() const { return Session(node_, nullptr, 0); }

// ---------------------------------------------------------------------------
// Controller specs (JSON) and presets
//
// {"kind": "oracle", "gains": {"offset": 0.03, "heading": 0.6}}
// {"kind": "constant", "value": 0.05}
// {"kind": "degraded", "name": "rain-blind", "base": {"kind": "oracle"},
//  "bias": 0.0, "noiseSigma": 0.0, "curvatureGain": 1.0, "latencySteps": 0,
//  "triggers": [{"when": "Weather.type == Rainy", "set": {"noiseSigma": 0.25}}]}
//
// Trigger expressions use the domain constraint grammar and are compiled
// against the model when the spec is loaded.

inline Controller controller_from_json(const nlohmann::json& j, const DomainModel& dm) {
  try {
    const auto kind = j.value("kind", std::string{"oracle"});
    Controller c = Controller::oracle();
    if (kind == "oracle") {
      OracleGains gains;
      if (j.contains("gains")) {
        const auto& g = j.at("gains");
        gains.offset = g.value("offset", gains.offset);
        gains.heading = g.value("heading", gains.heading);
      }
      c = Controller::oracle(gains);
    } else if (kind == "constant") {
      c = Controller::constant(j.at("value").get<double>());
    } else if (kind == "degraded") {
      Controller base = j.contains("base") ? controller_from_json(j.at("base"), dm) : Controller::oracle();
      DegradationSpec spec;
      spec.params.bias = j.value("bias", 0.0);
      spec.params.noise_sigma = j.value("noiseSigma", 0.0);
      spec.params.curvature_gain = j.value("curvatureGain", 1.0);
      spec.params.latency_steps = j.value("latencySteps", 0);
      if (j.contains("triggers")) {
        for (const auto& t : j.at("triggers")) {
          Trigger trigger{dm.compile(t.at("when").get<std::string>()), {}};
          const auto& set = t.at("set");
          for (const auto& [key, _] : set.items()) {
            if (key != "bias" && key != "noiseSigma" && key != "curvatureGain" && key != "latencySteps") {
              throw ConfigError("controller trigger: unknown parameter '" + key + "'");
            }
          }
          if (set.contains("bias")) trigger.set.bias = set.at("bias").get<double>();
          if (set.contains("noiseSigma")) trigger.set.noise_sigma = set.at("noiseSigma").get<double>();
          if (set.contains("curvatureGain")) trigger.set.curvature_gain = set.at("curvatureGain").get<double>();
          if (set.contains("latencySteps")) trigger.set.latency_steps = set.at("latencySteps").get<int>();
          spec.triggers.push_back(std::move(trigger));
        }
      }
      c = Controller::degraded(base, std::move(spec));
    } else {
      throw ConfigError("unknown controller kind '" + kind + "'");
    }
    c.set_name(j.value("name", kind));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("controller spec: ") + e.what());
  }
}

inline nlohmann::json preset_json(std::string_view name) {
  using nlohmann::json;
  if (name == "oracle") return json{{"kind", "oracle"}, {"name", "oracle"}};
  if (name == "biased-small") return json{{"kind", "degraded"}, {"name", "biased-small"}, {"bias", 0.05}};
  if (name == "biased-large") return json{{"kind", "degraded"}, {"name", "biased-large"}, {"bias", 0.15}};
  if (name == "rain-blind") {
    return json{{"kind", "degraded"},
                {"name", "rain-blind"},
                {"triggers", json::array({json{{"when", "Weather.type == Rainy"}, {"set", {{"noiseSigma", 0.25}}}}})}};
  }
  if (name == "curve-weak") {
    return json{{"kind", "degraded"},
                {"name", "curve-weak"},
                {"triggers", json::array({json{{"when", "Road.type == Curved"}, {"set", {{"curvatureGain", 0.6}}}}})}};
  }
  return nullptr;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"oracle", "biased-small", "biased-large", "rain-blind", "curve-weak"};
  return names;
}

/// Resolves a controller argument: a spec file path, a preset name, or
/// "constant:<value>".
inline Controller load_controller(const std::string& spec, const DomainModel& dm) {
  if (std::filesystem::is_regular_file(spec)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(spec));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("controller spec '" + spec + "': " + e.what());
    }
    return controller_from_json(j, dm);
  }
  if (spec.rfind("constant:", 0) == 0) {
    auto value = spec.substr(9);
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      auto c = Controller::constant(v);
      c.set_name(spec);
      return c;
    } catch (const std::exception&) {
      throw ConfigError("bad constant controller '" + spec + "'");
    }
  }
  auto preset = preset_json(spec);
  if (preset.is_null()) throw ConfigError("unknown controller '" + spec + "' (not a file or preset)");
  return controller_from_json(preset, dm);
}

}  // namespace lanecheck

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "attribute.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "rng.hpp"

namespace lanecheck {

/// Rejection-sampling cap for sample_scenario / complete_partial.
inline constexpr std::size_t kSamplingAttempts = 10'000;
/// Node budget for the exhaustive completion search.
inline constexpr std::size_t kSearchBudget = 1'000'000;

struct Constraint {
  Expr expr;

  const std::string& text() const noexcept { return expr.text(); }
};

/// A total assignment of the domain's attributes plus the seed that drives
/// everything derived from it (road geometry, sensor noise, controller noise).
struct Scenario {
  std::string id;
  std::vector<int> values;
  std::uint64_t seed = 0;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline std::string seed_id(std::string_view prefix, std::uint64_t seed) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(seed));
  return std::string(prefix) + buffer;
}

class DomainModel {
 public:
  DomainModel() = default;

  /// Builds and validates a model. Constraint texts are compiled against the
  /// attribute list; the constraint set must be satisfiable.
  DomainModel(std::string name, std::vector<AttributeDef> attributes, const std::vector<std::string>& constraints)
      : name_(std::move(name)), attributes_(std::move(attributes)) {
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      attributes_[i].check();
      for (std::size_t j = 0; j < i; ++j) {
        if (attributes_[i].name == attributes_[j].name) {
          throw DomainError("duplicate attribute '" + attributes_[i].name + "'");
        }
      }
    }
    if (attributes_.empty()) throw DomainError("domain model has no attributes");
    for (const auto& text : constraints) constraints_.push_back({Expr::compile(text, attributes_)});
    index_constraints();
    check_satisfiable();
  }

  const std::string& name() const noexcept { return name_; }
  const std::string& description() const noexcept { return description_; }
  void set_description(std::string text) { description_ = std::move(text); }

  const std::vector<AttributeDef>& attributes() const noexcept { return attributes_; }
  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
  std::size_t size() const noexcept { return attributes_.size(); }
  const AttributeDef& attribute(std::size_t i) const { return attributes_.at(i); }

  std::optional<std::size_t> find(std::string_view attribute_name) const noexcept {
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      if (attributes_[i].name == attribute_name) return i;
    }
    return std::nullopt;
  }

  std::size_t index_of(std::string_view attribute_name) const {
    if (auto i = find(attribute_name)) return *i;
    throw DomainError("unknown attribute '" + std::string(attribute_name) + "'");
  }

  /// Constraints whose expression mentions attribute `i`.
  const std::vector<std::size_t>& constraints_on(std::size_t i) const { return constraints_by_attribute_.at(i); }

  /// Compiles an expression (e.g. a controller trigger) against this model.
  Expr compile(std::string_view text) const { return Expr::compile(text, attributes_); }

  friend bool operator==(const DomainModel& a, const DomainModel& b) {
    if (a.name_ != b.name_ || a.description_ != b.description_ || a.attributes_ != b.attributes_) return false;
    if (a.constraints_.size() != b.constraints_.size()) return false;
    for (std::size_t i = 0; i < a.constraints_.size(); ++i) {
      if (a.constraints_[i].text() != b.constraints_[i].text()) return false;
    }
    return true;
  }

 private:
  void index_constraints() {
    constraints_by_attribute_.assign(attributes_.size(), {});
    for (std::size_t c = 0; c < constraints_.size(); ++c) {
      for (std::size_t a : constraints_[c].expr.attributes()) constraints_by_attribute_[a].push_back(c);
    }
  }

  void check_satisfiable() const;

  std::string name_;
  std::string description_;
  std::vector<AttributeDef> attributes_;
  std::vector<Constraint> constraints_;
  std::vector<std::vector<std::size_t>> constraints_by_attribute_;
};

// ---------------------------------------------------------------------------
// Validation

/// Indices of the constraints violated by a total assignment (codes).
inline std::vector<std::size_t> validate(const DomainModel& dm, std::span<const int> values) {
  if (values.size() != dm.size()) {
    throw DomainError("assignment has " + std::to_string(values.size()) + " values, model has " +
                      std::to_string(dm.size()) + " attributes");
  }
  std::vector<std::size_t> violated;
  for (std::size_t c = 0; c < dm.constraints().size(); ++c) {
    if (!dm.constraints()[c].expr.evaluate(values)) violated.push_back(c);
  }
  return violated;
}

/// Converts a name -> value-text map into codes. Every attribute must be
/// present; extra keys are rejected.
inline std::vector<int> assignment_codes(const DomainModel& dm, const std::map<std::string, std::string>& assignment) {
  std::vector<int> values(dm.size());
  for (std::size_t i = 0; i < dm.size(); ++i) {
    const auto& def = dm.attribute(i);
    auto it = assignment.find(def.name);
    if (it == assignment.end()) throw DomainError("assignment is missing attribute '" + def.name + "'");
    auto code = def.parse_value(it->second);
    if (!code) throw DomainError("'" + it->second + "' is not a value of " + def.name);
    values[i] = *code;
  }
  for (const auto& [key, _] : assignment) {
    if (!dm.find(key)) throw DomainError("unknown attribute '" + key + "'");
  }
  return values;
}

inline std::vector<std::size_t> validate(const DomainModel& dm, const std::map<std::string, std::string>& assignment) {
  return validate(dm, assignment_codes(dm, assignment));
}

inline bool is_valid(const DomainModel& dm, std::span<const int> values) {
  for (const auto& c : dm.constraints()) {
    if (!c.expr.evaluate(values)) return false;
  }
  return true;
}

/// Three-valued check of a partial assignment: False if some constraint is
/// already violated, True if all are satisfied, Unknown otherwise.
inline Truth check_partial(const DomainModel& dm, const PartialAssignment& values) {
  Truth result = Truth::True;
  for (const auto& c : dm.constraints()) {
    const Truth t = c.expr.evaluate_partial(values);
    if (t == Truth::False) return Truth::False;
    if (t == Truth::Unknown) result = Truth::Unknown;
  }
  return result;
}

inline void check_partial_kinds(const DomainModel& dm, const PartialAssignment& fixed) {
  if (fixed.size() != dm.size()) throw DomainError("partial assignment size does not match the model");
  for (std::size_t i = 0; i < dm.size(); ++i) {
    if (fixed[i] && !dm.attribute(i).contains(*fixed[i])) {
      throw DomainError("value code " + std::to_string(*fixed[i]) + " is not in the domain of " +
                        dm.attribute(i).name);
    }
  }
}

inline PartialAssignment partial_from_map(const DomainModel& dm, const std::map<std::string, std::string>& fixed) {
  PartialAssignment partial(dm.size());
  for (const auto& [name, text] : fixed) {
    const std::size_t i = dm.index_of(name);
    auto code = dm.attribute(i).parse_value(text);
    if (!code) throw DomainError("'" + text + "' is not a value of " + name);
    partial[i] = *code;
  }
  return partial;
}

// ---------------------------------------------------------------------------
// Exhaustive completion search

struct CompletionSearch {
  enum class Status { Found, Infeasible, Undecided };
  Status status = Status::Undecided;
  std::vector<int> values;  // Found only
  std::size_t nodes = 0;
};

/// Depth-first search for a valid total assignment extending `fixed`, with
/// three-valued pruning after each assignment. Attributes that appear in no
/// constraint are filled last and never branch. With an Rng the value order
/// is shuffled, otherwise domain order is used.
inline CompletionSearch find_completion(const DomainModel& dm, const PartialAssignment& fixed,
                                        std::size_t budget = kSearchBudget, Rng* rng = nullptr) {
  check_partial_kinds(dm, fixed);
  CompletionSearch result;
  PartialAssignment work = fixed;
  if (check_partial(dm, work) == Truth::False) {
    result.status = CompletionSearch::Status::Infeasible;
    return result;
  }

  std::vector<std::size_t> constrained;
  std::vector<std::size_t> unconstrained;
  for (std::size_t i = 0; i < dm.size(); ++i) {
    if (work[i]) continue;
    (dm.constraints_on(i).empty() ? unconstrained : constrained).push_back(i);
  }

  auto domain_order = [&](std::size_t attr) {
    std::vector<int> codes;
    const auto& def = dm.attribute(attr);
    for (std::size_t k = 0; k < def.domain_size(); ++k) codes.push_back(def.code_at(k));
    if (rng) rng->shuffle(codes);
    return codes;
  };

  auto consistent_after = [&](std::size_t attr) {
    for (std::size_t c : dm.constraints_on(attr)) {
      if (dm.constraints()[c].expr.evaluate_partial(work) == Truth::False) return false;
    }
    return true;
  };

  bool exhausted = false;
  auto dfs = [&](auto&& self, std::size_t depth) -> bool {
    if (depth == constrained.size()) return check_partial(dm, work) != Truth::False;
    const std::size_t attr = constrained[depth];
    for (int code : domain_order(attr)) {
      if (++result.nodes > budget) {
        exhausted = true;
        return false;
      }
      work[attr] = code;
      if (consistent_after(attr) && self(self, depth + 1)) return true;
      if (exhausted) return false;
    }
    work[attr].reset();
    return false;
  };

  if (!dfs(dfs, 0)) {
    result.status = exhausted ? CompletionSearch::Status::Undecided : CompletionSearch::Status::Infeasible;
    return result;
  }
  for (std::size_t attr : unconstrained) {
    const auto& def = dm.attribute(attr);
    work[attr] = def.code_at(rng ? rng->index(def.domain_size()) : 0);
  }
  result.values.reserve(dm.size());
  for (const auto& v : work) result.values.push_back(*v);
  result.status = CompletionSearch::Status::Found;
  return result;
}

inline void DomainModel::check_satisfiable() const {
  const auto search = find_completion(*this, PartialAssignment(attributes_.size()));
  if (search.status == CompletionSearch::Status::Infeasible) {
    throw UnsatisfiableError("domain model '" + name_ + "': constraints are unsatisfiable");
  }
  if (search.status == CompletionSearch::Status::Undecided) {
    throw BudgetExceeded("domain model '" + name_ + "': satisfiability undecided within the search budget");
  }
}

// ---------------------------------------------------------------------------
// Sampling

/// Draws a valid scenario agreeing with `fixed`: free attributes are drawn
/// uniformly from their domains and the draw is rejected until it satisfies
/// every constraint (at most kSamplingAttempts draws).
inline Scenario complete_partial(const DomainModel& dm, const PartialAssignment& fixed, std::uint64_t seed) {
  check_partial_kinds(dm, fixed);
  if (check_partial(dm, fixed) == Truth::False) {
    throw UnsatisfiableError("fixed values violate a constraint; no valid completion exists");
  }
  Rng rng(seed);
  std::vector<int> values(dm.size());
  for (std::size_t attempt = 0; attempt < kSamplingAttempts; ++attempt) {
    for (std::size_t i = 0; i < dm.size(); ++i) {
      const auto& def = dm.attribute(i);
      values[i] = fixed[i] ? *fixed[i] : def.code_at(rng.index(def.domain_size()));
    }
    if (is_valid(dm, values)) return Scenario{seed_id("S", seed), values, seed};
  }
  throw BudgetExceeded("no valid completion found within " + std::to_string(kSamplingAttempts) + " attempts");
}

inline Scenario sample_scenario(const DomainModel& dm, std::uint64_t seed) {
  return complete_partial(dm, PartialAssignment(dm.size()), seed);
}

// ---------------------------------------------------------------------------
// Scenario helpers

inline std::string value_text(const DomainModel& dm, const Scenario& s, std::size_t attr) {
  return dm.attribute(attr).format(s.values.at(attr));
}

inline std::string value_text(const DomainModel& dm, const Scenario& s, std::string_view attr) {
  return value_text(dm, s, dm.index_of(attr));
}

inline std::map<std::string, std::string> to_map(const DomainModel& dm, const Scenario& s) {
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < dm.size(); ++i) out[dm.attribute(i).name] = value_text(dm, s, i);
  return out;
}

/// Builds a scenario from value texts and checks that it is valid.
inline Scenario make_scenario(const DomainModel& dm, std::string id, const std::map<std::string, std::string>& values,
                              std::uint64_t seed) {
  Scenario s{std::move(id), assignment_codes(dm, values), seed};
  if (auto violated = validate(dm, s.values); !violated.empty()) {
    throw DomainError("scenario '" + s.id + "' violates constraint '" + dm.constraints()[violated.front()].text() +
                      "'");
  }
  return s;
}

inline nlohmann::ordered_json scenario_to_json(const DomainModel& dm, const Scenario& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["seed"] = s.seed;
  auto& values = j["values"];
  values = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < dm.size(); ++i) {
    const auto& def = dm.attribute(i);
    if (def.is_enumeration()) values[def.name] = def.format(s.values[i]);
    else values[def.name] = s.values[i];
  }
  return j;
}

inline Scenario scenario_from_json(const DomainModel& dm, const nlohmann::json& j) {
  try {
    std::map<std::string, std::string> values;
    for (const auto& [key, value] : j.at("values").items()) {
      values[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    const auto seed = j.value("seed", std::uint64_t{0});
    return make_scenario(dm, j.value("id", seed_id("S", seed)), values, seed);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Domain-model files (JSON)
//
// {
//   "name": "default",
//   "description": "...",                        (optional)
//   "attributes": [
//     {"name": "Road.type", "group": "Road", "values": ["Straight", "Curved"]},
//     {"name": "Vehicle.speed", "group": "Vehicle",
//      "range": {"min": 10, "max": 50, "step": 5}, "unit": "km/h"}
//   ],
//   "constraints": ["Road.type == Curved -> Vehicle.speed <= 40"]
// }

inline DomainModel domain_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ParseError("domain model: top level must be an object");
    std::vector<AttributeDef> attributes;
    for (const auto& a : j.at("attributes")) {
      const auto name = a.at("name").get<std::string>();
      const auto group_text = a.at("group").get<std::string>();
      auto group = parse_group(group_text);
      if (!group) throw DomainError("attribute '" + name + "': unknown group '" + group_text + "'");
      if (a.contains("values") == a.contains("range")) {
        throw DomainError("attribute '" + name + "': exactly one of 'values' or 'range' is required");
      }
      if (a.contains("values")) {
        std::vector<std::string> values;
        for (const auto& v : a.at("values")) values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        attributes.push_back(AttributeDef::enumeration(name, *group, std::move(values)));
      } else {
        const auto& r = a.at("range");
        attributes.push_back(AttributeDef::integer(name, *group, r.at("min").get<int>(), r.at("max").get<int>(),
                                                   r.value("step", 1), a.value("unit", std::string{})));
      }
    }
    std::vector<std::string> constraints;
    if (j.contains("constraints")) {
      for (const auto& c : j.at("constraints")) constraints.push_back(c.get<std::string>());
    }
    DomainModel dm(j.value("name", std::string{"unnamed"}), std::move(attributes), constraints);
    dm.set_description(j.value("description", std::string{}));
    return dm;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("domain model: ") + e.what());
  }
}

inline DomainModel load_domain(std::string_view source) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("domain model: ") + e.what());
  }
  return domain_from_json(j);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline DomainModel load_domain_file(const std::string& path) { return load_domain(read_file(path)); }

inline nlohmann::ordered_json domain_to_json(const DomainModel& dm) {
  nlohmann::ordered_json j;
  j["name"] = dm.name();
  if (!dm.description().empty()) j["description"] = dm.description();
  auto& attributes = j["attributes"];
  attributes = nlohmann::ordered_json::array();
  for (const auto& def : dm.attributes()) {
    nlohmann::ordered_json a;
    a["name"] = def.name;
    a["group"] = std::string(to_string(def.group));
    if (def.is_enumeration()) {
      a["values"] = def.values;
    } else {
      a["range"] = {{"min", def.min}, {"max", def.max}, {"step", def.step}};
      if (!def.unit.empty()) a["unit"] = def.unit;
    }
    attributes.push_back(std::move(a));
  }
  auto& constraints = j["constraints"];
  constraints = nlohmann::ordered_json::array();
  for (const auto& c : dm.constraints()) constraints.push_back(c.text());
  return j;
}

inline std::string save_domain(const DomainModel& dm) { return domain_to_json(dm).dump(2) + "\n"; }

}  // namespace lanecheck

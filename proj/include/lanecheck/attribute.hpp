#pragma once

#include <charconv>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace lanecheck {

enum class AttributeGroup { Road, Vehicle, Weather, Environment };

inline std::string_view to_string(AttributeGroup group) {
  switch (group) {
    case AttributeGroup::Road: return "Road";
    case AttributeGroup::Vehicle: return "Vehicle";
    case AttributeGroup::Weather: return "Weather";
    case AttributeGroup::Environment: return "Environment";
  }
  return "?";
}

inline std::optional<AttributeGroup> parse_group(std::string_view text) {
  if (text == "Road") return AttributeGroup::Road;
  if (text == "Vehicle") return AttributeGroup::Vehicle;
  if (text == "Weather") return AttributeGroup::Weather;
  if (text == "Environment") return AttributeGroup::Environment;
  return std::nullopt;
}

inline std::optional<long long> parse_integer(std::string_view text) {
  long long value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
  return value;
}

/// One attribute of the scenario space. Values are stored as integer codes:
/// the position in the enumeration for symbolic attributes, and the number
/// itself for bounded-integer attributes.
struct AttributeDef {
  enum class Kind { Enumeration, Integer };

  std::string name;
  AttributeGroup group = AttributeGroup::Road;
  Kind kind = Kind::Enumeration;
  std::vector<std::string> values;  // Enumeration only, in declared order
  int min = 0;                      // Integer only
  int max = 0;
  int step = 1;
  std::string unit;

  static AttributeDef enumeration(std::string name, AttributeGroup group, std::vector<std::string> values) {
    AttributeDef def;
    def.name = std::move(name);
    def.group = group;
    def.kind = Kind::Enumeration;
    def.values = std::move(values);
    return def;
  }

  static AttributeDef integer(std::string name, AttributeGroup group, int min, int max, int step = 1,
                              std::string unit = {}) {
    AttributeDef def;
    def.name = std::move(name);
    def.group = group;
    def.kind = Kind::Integer;
    def.min = min;
    def.max = max;
    def.step = step;
    def.unit = std::move(unit);
    return def;
  }

  bool is_enumeration() const noexcept { return kind == Kind::Enumeration; }

  /// Number of distinct values in the domain.
  std::size_t domain_size() const noexcept {
    if (is_enumeration()) return values.size();
    if (max < min || step <= 0) return 0;
    return static_cast<std::size_t>((max - min) / step) + 1;
  }

  /// Code of the i-th domain value.
  int code_at(std::size_t i) const noexcept {
    return is_enumeration() ? static_cast<int>(i) : min + static_cast<int>(i) * step;
  }

  /// Position of a code in the domain, if it belongs to it.
  std::optional<std::size_t> position_of(int code) const noexcept {
    if (is_enumeration()) {
      if (code < 0 || static_cast<std::size_t>(code) >= values.size()) return std::nullopt;
      return static_cast<std::size_t>(code);
    }
    if (code < min || code > max || (code - min) % step != 0) return std::nullopt;
    return static_cast<std::size_t>((code - min) / step);
  }

  bool contains(int code) const noexcept { return position_of(code).has_value(); }

  std::string format(int code) const {
    if (is_enumeration()) {
      if (auto pos = position_of(code)) return values[*pos];
      return "<invalid:" + std::to_string(code) + ">";
    }
    return std::to_string(code);
  }

  /// Resolves a literal to a code. Integer literals outside the domain grid
  /// are accepted (constraints may compare against arbitrary bounds).
  std::optional<int> literal_code(std::string_view text) const {
    if (is_enumeration()) {
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == text) return static_cast<int>(i);
      }
      return std::nullopt;
    }
    auto parsed = parse_integer(text);
    if (!parsed) return std::nullopt;
    return static_cast<int>(*parsed);
  }

  /// Resolves a value to a code that belongs to the domain.
  std::optional<int> parse_value(std::string_view text) const {
    auto code = literal_code(text);
    if (code && contains(*code)) return code;
    return std::nullopt;
  }

  void check() const {
    if (name.empty()) throw DomainError("attribute with empty name");
    if (is_enumeration()) {
      if (values.empty()) throw DomainError("attribute '" + name + "': empty enumeration");
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].empty()) throw DomainError("attribute '" + name + "': empty enumeration value");
        for (std::size_t j = 0; j < i; ++j) {
          if (values[i] == values[j]) {
            throw DomainError("attribute '" + name + "': duplicate value '" + values[i] + "'");
          }
        }
      }
    } else {
      if (min > max) throw DomainError("attribute '" + name + "': min > max");
      if (step <= 0) throw DomainError("attribute '" + name + "': step must be positive");
    }
  }

  friend bool operator==(const AttributeDef&, const AttributeDef&) = default;
};

}  // namespace lanecheck

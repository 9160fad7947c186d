#pragma once

#include <string_view>

#include "domain.hpp"

namespace lanecheck {

/// The twelve attributes named in the source study's text, with the
/// constraints it describes (speed on steep curves, conditional weather
/// intensity) plus a tunnel headlight rule. Attribute count is configuration:
/// larger models are loaded from files in the same format.
inline constexpr std::string_view kDefaultModelJson = R"json({
  "name": "default",
  "description": "twelve-attribute lane-keeping model",
  "attributes": [
    {"name": "Road.type", "group": "Road", "values": ["Straight", "Curved", "SteepCurved"]},
    {"name": "Road.laneLineColor", "group": "Road", "values": ["White", "Yellow"]},
    {"name": "Road.curbLinePattern", "group": "Road", "values": ["Solid", "Dashed"]},
    {"name": "Road.roadSpecificProperty", "group": "Road", "values": ["Normal", "Bridge", "Tunnel"]},
    {"name": "Vehicle.speed", "group": "Vehicle", "range": {"min": 10, "max": 50, "step": 5}, "unit": "km/h"},
    {"name": "Vehicle.laneNumber", "group": "Vehicle", "range": {"min": 1, "max": 3, "step": 1}},
    {"name": "Vehicle.headLights", "group": "Vehicle", "values": ["False", "True"]},
    {"name": "Vehicle.fogLights", "group": "Vehicle", "values": ["False", "True"]},
    {"name": "Weather.type", "group": "Weather", "values": ["Sunny", "Rainy", "Snowy"]},
    {"name": "Weather.condition", "group": "Weather", "values": ["None", "Light", "Moderate", "Heavy"]},
    {"name": "Environment.buildings", "group": "Environment", "values": ["False", "True"]},
    {"name": "Environment.underlay", "group": "Environment", "values": ["Pavement", "Grass", "Gravel"]}
  ],
  "constraints": [
    "Road.type == SteepCurved -> Vehicle.speed <= 20",
    "Weather.type == Sunny -> Weather.condition == None",
    "Weather.type in {Rainy, Snowy} -> Weather.condition != None",
    "Road.roadSpecificProperty == Tunnel -> Vehicle.headLights == True"
  ]
})json";

inline DomainModel default_domain() { return load_domain(kDefaultModelJson); }

}  // namespace lanecheck

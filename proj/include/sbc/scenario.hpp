#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sbc/pipeline.hpp"

namespace sbc {

std::vector<std::string> builtin_names();
std::string builtin_summary(const std::string& name);
ScenarioConfig builtin_scenario(const std::string& name);

// Strict schema: every key is checked, unknown keys are rejected, and
// errors carry the dotted field path (e.g. "geometry.D_s").
ScenarioConfig parse_scenario(const nlohmann::json& doc);

// Canonical full echo; parse_scenario(scenario_to_json(c)) reproduces c.
nlohmann::json scenario_to_json(const ScenarioConfig& config);

// Builtin name or path to a JSON file, plus `key=value` overrides applied
// on the JSON form before re-validation.
ScenarioConfig resolve_scenario(const std::string& name_or_path,
                                const std::vector<std::string>& overrides = {});

void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace sbc

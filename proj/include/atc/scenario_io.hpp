#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "atc/environment.hpp"
#include "atc/trainer.hpp"

namespace atc {

inline constexpr int kScenarioFormatVersion = 1;

// Scenario files are JSON. Every ScenarioConfig field may appear; missing
// fields keep their defaults. Throws ConfigError naming the bad field.
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& config);

// Throws IoError("<what> not found: ...") for a missing file and ConfigError
// for malformed JSON.
nlohmann::json read_json_file(const std::filesystem::path& path, const std::string& what);

// Throws IoError("scenario not found: ...") for a missing file.
ScenarioConfig load_scenario(const std::filesystem::path& path);

// Applies the fields present in j on top of base.
TrainerConfig trainer_from_json(const nlohmann::json& j, TrainerConfig base = {});
nlohmann::json trainer_to_json(const TrainerConfig& config);

std::string to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);
std::string to_string(ActionSelection m);
ActionSelection action_selection_from_string(const std::string& s);

}  // namespace atc

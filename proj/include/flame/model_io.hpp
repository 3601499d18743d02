#pragma once

#include "flame/types.hpp"

#include <json.hpp>

#include <string>

namespace flame {

nlohmann::json config_to_json(const FlameConfig& config);
FlameConfig config_from_json(const nlohmann::json& j);

/// Overlays only the keys present in the JSON onto an existing config;
/// everything else keeps its current value.
void apply_config_json(FlameConfig& config, const nlohmann::json& j);

nlohmann::json model_to_json(const LinearModel& model);
LinearModel model_from_json(const nlohmann::json& j);

/// Writes through a temporary file and renames into place.
void write_text_atomic(const std::string& path, const std::string& text);

void save_model(const std::string& path, const LinearModel& model);
LinearModel load_model(const std::string& path);

}  // namespace flame

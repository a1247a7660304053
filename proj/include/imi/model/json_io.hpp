#pragma once

#include <json.hpp>

#include "imi/model/model_spec.hpp"

namespace imi {

void to_json(nlohmann::json& j, const UnitAddress& unit);
void from_json(const nlohmann::json& j, UnitAddress& unit);

void to_json(nlohmann::json& j, const LayerSpec& layer);
void from_json(const nlohmann::json& j, LayerSpec& layer);

void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

}  // namespace imi

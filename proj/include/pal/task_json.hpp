#pragma once

// JSON helpers shared by the task loader and the observation serializer.

#include "pal/task.hpp"

#include <json.hpp>

#include <string>

namespace pal {

nlohmann::json cost_table_json(const CostTable& costs);
CostTable cost_table_from(const nlohmann::json& j, const std::string& path);
nlohmann::json recipe_json(const Recipe& recipe);

}  // namespace pal

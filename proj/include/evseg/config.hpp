#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "evseg/dataset.hpp"
#include "evseg/train.hpp"

namespace evseg {

// Layered run configuration. The full default tree is defined in code;
// config files overlay it (later files win) and dotted key=value overrides
// apply last. Unknown keys and type changes are rejected so typos fail loudly.
nlohmann::json default_config();

// "a.b.c=value": value is parsed as JSON when possible, else kept as string.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

nlohmann::json load_config(const std::vector<std::string>& files,
                           const std::vector<std::string>& overrides);

// Typed views over a fully merged tree.
DatasetConfig dataset_config_from(const nlohmann::json& cfg);
ModelConfig model_config_from(const nlohmann::json& cfg);
TrainConfig train_config_from(const nlohmann::json& cfg);
std::string dataset_root_from(const nlohmann::json& cfg);

}  // namespace evseg

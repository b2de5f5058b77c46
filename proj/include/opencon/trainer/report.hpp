#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "opencon/trainer/trainer.hpp"

namespace opencon::trainer {

// One metrics line per epoch; accuracy fields are null on epochs without
// evaluation.
nlohmann::ordered_json to_json(const EpochReport& report);
nlohmann::ordered_json to_json(const EvalReport& report);
nlohmann::ordered_json to_json(const TrainConfig& config);

// Aligned plain-text table, one row per variant.
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace opencon::trainer

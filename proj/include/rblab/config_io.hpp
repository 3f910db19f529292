#pragma once

// JSON <-> config structs. Readers reject unknown keys and report the JSON
// pointer of the offending field in a ConfigError.

#include <filesystem>
#include <json.hpp>
#include <string>

#include "rblab/booldata.hpp"
#include "rblab/nn.hpp"
#include "rblab/optim.hpp"
#include "rblab/seqgen.hpp"
#include "rblab/trainer.hpp"

namespace rblab {

using nlohmann::json;

json to_json(const FeatureSpec& spec);
json to_json(const BoolDatasetConfig& config);
json to_json(const MlpConfig& config);
json to_json(const OptimizerSpec& spec);
json to_json(const TrainingRegime& regime);
json to_json(const SnapshotSchedule& schedule);
json to_json(const ExperimentConfig& config);
json to_json(const DyckConfig& config);
json to_json(const LetterDatasetConfig& config);

BoolDatasetConfig bool_dataset_config_from_json(const json& j, const std::string& where = "");
MlpConfig mlp_config_from_json(const json& j, const std::string& where = "");
OptimizerSpec optimizer_spec_from_json(const json& j, const std::string& where = "");
TrainingRegime regime_from_json(const json& j, const std::string& where = "");
SnapshotSchedule schedule_from_json(const json& j, const std::string& where = "");
ExperimentConfig experiment_config_from_json(const json& j, const std::string& where = "");
DyckConfig dyck_config_from_json(const json& j, const std::string& where = "");
LetterDatasetConfig letter_config_from_json(const json& j, const std::string& where = "");

/// Parses a JSON file; syntax errors carry line and column.
json load_json_file(const std::filesystem::path& path);

std::string to_string(LetterFeatureKind kind);
LetterFeatureKind letter_feature_kind_from_string(const std::string& name);

}  // namespace rblab

#pragma once

#include "crosslinear/data.hpp"
#include "crosslinear/model.hpp"
#include "crosslinear/train.hpp"

#include <json.hpp>

namespace crosslinear {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rejects keys outside `allowed`; `path` names the object in the error.
void require_known_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                        const std::string& path);

std::string to_string(EmbedVariant v);
EmbedVariant variant_from_string(const std::string& s);
std::string to_string(ForecastMode m);
std::string to_string(PosEmbMode m);
std::string to_string(LrSchedule s);
std::string to_string(MaskTarget t);
std::string to_string(MaskFill f);

nlohmann::json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json split_spec_to_json(const SplitSpec& s);
SplitSpec split_spec_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json mask_spec_to_json(const MaskSpec& m);
MaskSpec mask_spec_from_json(const nlohmann::json& j, const std::string& path);

nlohmann::json synth_spec_to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::string& path);

} // namespace crosslinear

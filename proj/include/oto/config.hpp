#pragma once

#include <string>

#include "oto/model.hpp"
#include "oto/trainer.hpp"

namespace oto {

// Flat key=value text covering the model and the training schedule, one pair
// per line, '#' starts a comment. Unknown keys and malformed values throw.
std::string serialize_configs(const OtoConfig& model, const TrainConfig& train);
void parse_configs(const std::string& text, OtoConfig& model, TrainConfig& train);

void save_config_file(const std::string& path, const OtoConfig& model,
                      const TrainConfig& train);
void load_config_file(const std::string& path, OtoConfig& model,
                      TrainConfig& train);

}  // namespace oto

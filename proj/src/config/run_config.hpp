// Copyright 2026 The VIDNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Run configuration: JSON sections "synth", "model", "train" and "eval".
// Parsing is strict; unknown keys are rejected by their dotted path.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "model/config.hpp"
#include "synth/synthdata.hpp"
#include "train/trainer.hpp"

namespace vidnet::config {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EvalConfig {
  double threshold = 0.5;
  bool carry_state = true;
  std::vector<std::string> perturbations{"jpeg90", "jpeg70", "snr30", "snr20"};
  std::uint64_t perturbation_seed = 11;

  void validate() const;
};

struct RunConfig {
  synth::SynthConfig synth;
  model::ModelConfig model;
  train::TrainConfig train;
  EvalConfig eval;

  void validate() const;
};

using Json = nlohmann::ordered_json;

// Missing keys keep their defaults. Throws ConfigError.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

Json to_json(const synth::SynthConfig& c);
Json to_json(const model::ModelConfig& c);
Json to_json(const train::TrainConfig& c);
Json to_json(const EvalConfig& c);
Json to_json(const RunConfig& c);

// Overrides fields of `base` from a section object; `where` prefixes errors.
synth::SynthConfig synth_from_json(const Json& j, const std::string& where,
                                   synth::SynthConfig base = {});
model::ModelConfig model_from_json(const Json& j, const std::string& where,
                                   model::ModelConfig base = {});
train::TrainConfig train_from_json(const Json& j, const std::string& where,
                                   train::TrainConfig base = {});
EvalConfig eval_from_json(const Json& j, const std::string& where, EvalConfig base = {});

inline constexpr const char* kOutputRootEnv = "VIDNET_OUTPUT_ROOT";
inline constexpr const char* kResolvedConfigName = "resolved_config.json";

// Relative output paths are placed under $VIDNET_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& out);

// Writes <dir>/resolved_config.json.
void write_resolved_config(const Json& resolved, const std::filesystem::path& dir);

}  // namespace vidnet::config

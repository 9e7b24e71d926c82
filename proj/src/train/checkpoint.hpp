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


// Checkpoint storage: a binary archive of named tensors plus a JSON sidecar.
//
// Archive layout (little endian): "VIDNETAR", u32 version, u64 count, then per
// entry u32 name length, name bytes, i32 n, c, h, w and n*c*h*w f64 values.

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "model/vidnet.hpp"

namespace vidnet::train {

void write_archive(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, const nn::Tensor*>>& entries);
std::map<std::string, nn::Tensor> read_archive(const std::filesystem::path& path);

std::filesystem::path archive_path(const std::filesystem::path& base);
std::filesystem::path sidecar_path(const std::filesystem::path& base);

// Parameters and normalization buffers of the model, by name.
std::vector<std::pair<std::string, const nn::Tensor*>> model_entries(
    const model::VidNet& net);
// Copies matching tensors into the model. Every parameter and buffer must be
// present with the right shape.
void restore_model(model::VidNet& net, const std::map<std::string, nn::Tensor>& archive);

// Weights only, with the model config in the sidecar under "model".
void save_model(const model::VidNet& net, const std::filesystem::path& base,
                const nlohmann::ordered_json& extra = nlohmann::ordered_json::object());
std::unique_ptr<model::VidNet> load_model(const std::filesystem::path& base);

nlohmann::ordered_json read_sidecar(const std::filesystem::path& base);

}  // namespace vidnet::train

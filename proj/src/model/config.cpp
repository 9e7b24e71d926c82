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


#include "model/config.hpp"

#include <stdexcept>

namespace vidnet::model {

void ModelConfig::validate() const {
  encoder.validate();
  if (encoder.stage_channels.size() != kNumLevels)
    throw std::invalid_argument("model.encoder.stage_channels must have 5 entries");
  if (qdla.both_features && !(encoder.use_rgb_stream && encoder.use_ela_stream))
    throw std::invalid_argument(
        "model.qdla.both_features requires both the RGB and ELA streams");
  if ((qdla.sequential || qdla.recursive || qdla.all_layers || qdla.both_features) &&
      !qdla.enabled)
    throw std::invalid_argument("model.qdla options require model.qdla.enabled");
  for (int c : decoder.hidden_channels)
    if (c <= 0) throw std::invalid_argument("model.decoder.hidden_channels must be positive");
  if (decoder.head_kernel != 1 && decoder.head_kernel != 3)
    throw std::invalid_argument("model.decoder.head_kernel must be 1 or 3");
  if (input_height < media::kMinFrameSide || input_width < media::kMinFrameSide)
    throw std::invalid_argument("model.input_height and model.input_width must be >= 16");
  if (ela_quality < 1 || ela_quality > 100)
    throw std::invalid_argument("model.ela_quality must be in [1, 100]");
}

int ModelConfig::pad_multiple() const {
  return 1 << (static_cast<int>(encoder.stage_channels.size()) - 1);
}

}  // namespace vidnet::model

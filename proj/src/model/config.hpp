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

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "media/media.hpp"
#include "nn/ops.hpp"
#include "nn/params.hpp"

namespace vidnet::model {

inline constexpr int kNumLevels = 5;
inline constexpr int kDecoderLayers = 4;

struct EncoderConfig {
  // Full VGG-16 widths are {64, 128, 256, 512, 512}.
  std::vector<int> stage_channels{8, 16, 32, 48, 48};
  // VGG-16 block layout.
  std::vector<int> convs_per_stage{2, 2, 3, 3, 3};
  nn::NormKind norm_kind = nn::NormKind::kInstance;
  double dropout_rate = 0.5;
  bool use_rgb_stream = true;
  bool use_ela_stream = true;
  nn::L2Axis l2_axis = nn::L2Axis::kChannelsPerLocation;
  int fusion_kernel = 1;

  void validate() const;
};

struct QdlaConfig {
  bool enabled = true;
  bool sequential = false;     // chain directions instead of running them in parallel
  bool recursive = false;      // scan with the refined neighbour instead of the original
  bool all_layers = false;     // refine every fused level, not only level 5
  bool both_features = false;  // level-5 input is [f5_rgb | f5_ela]
};

struct DecoderConfig {
  std::array<int, kDecoderLayers> hidden_channels{32, 24, 16, 8};
  int head_kernel = 3;
};

struct ModelConfig {
  EncoderConfig encoder;
  QdlaConfig qdla;
  DecoderConfig decoder;
  int input_height = 64;
  int input_width = 112;
  int ela_quality = media::kDefaultElaQuality;
  media::InputNormalization input_norm = media::InputNormalization::kUnit;
  std::uint64_t seed = 1;

  void validate() const;
  // Number of independent recurrent routes through the decoder: one per QDLA
  // direction, or one when QDLA is disabled.
  int routes() const { return qdla.enabled ? 4 : 1; }
  int pad_multiple() const;
};

}  // namespace vidnet::model

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

// Two-stream VGG-style encoder with per-level multimodal fusion.
//
// Each stream is a stack of stages (3x3 conv -> norm -> ReLU, repeated) with
// 2x2 max pooling between stages. Level l is read at the output of stage l,
// before the pooling that feeds stage l+1. Levels 1-4 of the RGB and ELA
// streams are L2 normalized, concatenated and fused by one convolution with
// ReLU that halves the channel count. Level 5 is the RGB feature unchanged.

#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "model/config.hpp"
#include "nn/params.hpp"

namespace vidnet::model {

struct FeaturePyramid {
  std::vector<nn::Var> levels;  // levels[0] is f1 (full scale)
};

class EncoderStream {
 public:
  EncoderStream() = default;
  EncoderStream(nn::ParamStore& store, const std::string& prefix,
                int in_channels, const EncoderConfig& cfg,
                std::mt19937_64& rng);

  // x is [N, C, H, W] with H, W divisible by 2^(stages - 1).
  FeaturePyramid forward(const nn::Var& x, bool training) const;

  int stages() const { return static_cast<int>(stages_.size()); }
  int channels(int level) const { return stages_.at(level).convs.back().out_channels(); }

  // Loads conv weights from a directory of .npy arrays named
  // features.<i>.weight.npy / features.<i>.bias.npy, where i follows the
  // torchvision VGG-16 `features` indexing. Shapes must match exactly.
  void load_vgg16_npy(const std::filesystem::path& dir);

 private:
  struct Stage {
    std::vector<nn::Conv2d> convs;
    std::vector<nn::Norm> norms;
  };
  std::vector<Stage> stages_;
};

// Unit L2 norm over the chosen axis; zero vectors stay zero.
nn::Var l2_normalize_channels(
    const nn::Var& f, nn::L2Axis axis = nn::L2Axis::kChannelsPerLocation);

// Fusion convolution for one level. Two-branch when both streams are on.
struct FusionLayer {
  nn::Conv2d conv;
  bool two_branch = true;
};

// Level 5 returns f_rgb untouched; levels 1-4 return
// relu(conv([l2(f_rgb) | l2(f_ela)])). With a single-branch fusion layer
// f_ela is ignored (pass an undefined Var).
nn::Var fuse_multimodal(const nn::Var& f_rgb, const nn::Var& f_ela, int level,
                        const FusionLayer* fusion,
                        nn::L2Axis axis = nn::L2Axis::kChannelsPerLocation);

class Encoder {
 public:
  Encoder() = default;
  Encoder(nn::ParamStore& store, const EncoderConfig& cfg, std::mt19937_64& rng);

  struct Output {
    FeaturePyramid fused;  // f1..f5 fed to the decoder
    nn::Var f5_rgb;        // undefined when the RGB stream is off
    nn::Var f5_ela;        // undefined when the ELA stream is off
  };

  // rgb / ela are [B, 3, H, W]; pass an empty tensor for a disabled stream.
  Output forward(const nn::Tensor& rgb, const nn::Tensor& ela, bool training,
                 std::mt19937_64& rng) const;

  // Channel count of fused level l (0-based).
  int fused_channels(int level) const;

  const EncoderConfig& config() const { return cfg_; }
  const std::optional<EncoderStream>& rgb_stream() const { return rgb_; }
  const std::optional<EncoderStream>& ela_stream() const { return ela_; }
  std::optional<EncoderStream>& rgb_stream() { return rgb_; }
  const std::vector<FusionLayer>& fusion() const { return fusion_; }

 private:
  EncoderConfig cfg_;
  std::optional<EncoderStream> rgb_;
  std::optional<EncoderStream> ela_;
  std::vector<FusionLayer> fusion_;  // levels 1-4
};

}  // namespace vidnet::model

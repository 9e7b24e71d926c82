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


// Four-layer ConvLSTM decoder.
//
// Layer i runs at the resolution of encoder level 6-i. Layer 1 consumes the
// top feature, layers 2-4 consume [U(h_{i-1}) | f_{6-i}], and a shared head
// maps [U(h_4) | f_1] to one probability map per route. Routes (one per QDLA
// direction) share every weight but keep separate states; they are stacked
// along the batch axis as route-major blocks, sample r * B + b.

#pragma once

#include <array>
#include <random>
#include <string>

#include "model/config.hpp"
#include "nn/params.hpp"

namespace vidnet::model {

struct ConvLstmState {
  nn::Var h;  // undefined means zero
  nn::Var c;
  bool defined() const { return h.defined(); }
};

class ConvLstmCell {
 public:
  ConvLstmCell() = default;
  ConvLstmCell(nn::ParamStore& store, const std::string& name, int in_channels,
               int hidden_channels, std::mt19937_64& rng);

  ConvLstmState step(const nn::Var& g, const ConvLstmState& state) const;

  int hidden_channels() const { return hidden_; }
  // One convolution over [g | h] yields the gates in the order i, f, o, c~.
  const nn::Conv2d& gates() const { return gates_; }
  nn::Conv2d& gates() { return gates_; }

 private:
  nn::Conv2d gates_;
  int hidden_ = 0;
};

struct DecoderState {
  std::array<ConvLstmState, kDecoderLayers> layers;
  int routes = 0;

  bool empty() const { return !layers[0].defined(); }
  // State of one (layer, route) pair as [B, C, H, W] values.
  ConvLstmState cell(int layer, int route) const;
  // Drops the autograd history so the state can seed a new clip.
  DecoderState detached() const;
};

// Doubles the spatial size bilinearly, then crops to (height, width) when
// the target is one pixel smaller.
nn::Var bilinear_upsample(const nn::Var& h, int height, int width);

class Decoder {
 public:
  Decoder() = default;
  // skip_channels[l] is the channel count of fused level l + 1 (l = 0..3);
  // top_channels is the channel count of the layer-1 input.
  Decoder(nn::ParamStore& store, const DecoderConfig& cfg,
          const std::array<int, kNumLevels - 1>& skip_channels, int top_channels,
          int routes, std::mt19937_64& rng);

  struct Output {
    nn::Var probability;    // [B, 1, H, W]
    nn::Var per_route;      // [B, routes, H, W]
  };

  // top: [R*B, Ct, H/16, W/16]; skips[l]: [R*B, C_{l+1}, ...] for l = 0..3.
  Output step(const nn::Var& top, const std::array<nn::Var, kNumLevels - 1>& skips,
              DecoderState& state) const;

  int routes() const { return routes_; }
  const std::array<ConvLstmCell, kDecoderLayers>& cells() const { return cells_; }
  std::array<ConvLstmCell, kDecoderLayers>& cells() { return cells_; }
  const nn::Conv2d& head() const { return head_; }
  const nn::Conv2d& fusion() const { return fusion_; }

 private:
  std::array<ConvLstmCell, kDecoderLayers> cells_;
  nn::Conv2d head_;
  nn::Conv2d fusion_;
  int routes_ = 1;
};

}  // namespace vidnet::model

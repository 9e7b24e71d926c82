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

#include <cstdint>
#include <random>
#include <span>

#include "nn/graph.hpp"

namespace vidnet::nn {

// Square-kernel convolution, stride 1, zero padding. weight is
// [Cout, Cin, k, k]; bias is [1, Cout, 1, 1] or undefined.
Var conv2d(const Var& x, const Var& weight, const Var& bias, int padding);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var tanh(const Var& x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);

// 2x2 max pooling, stride 2. Odd trailing rows/columns are dropped.
Var max_pool2(const Var& x);

struct RunningStats {
  Tensor mean;  // [1, C, 1, 1]
  Tensor var;
};

// Statistics over (N, H, W) per channel. In training mode the running
// statistics are updated with the unbiased batch variance.
Var batch_norm(const Var& x, const Var& gamma, const Var& beta,
               RunningStats& running, bool training, double momentum = 0.1,
               double eps = 1e-5);

// Statistics over (H, W) per sample and channel.
Var instance_norm(const Var& x, const Var& gamma, const Var& beta,
                  double eps = 1e-5);

// Inverted dropout; identity when !training or p == 0.
Var dropout(const Var& x, double p, std::mt19937_64& rng, bool training);

enum class L2Axis {
  kChannelsPerLocation,  // unit norm of the C-vector at each (n, h, w)
  kSpatialPerChannel,    // unit norm of each (n, c) plane
};

// x / sqrt(|x|^2 + eps). Zero vectors stay zero.
Var l2_normalize(const Var& x, L2Axis axis, double eps = 1e-12);

Var concat_channels(std::span<const Var> parts);
Var slice_channels(const Var& x, int begin, int end);

// Half-pixel-centred bilinear resampling to (height, width).
Var resize_bilinear(const Var& x, int height, int width);

// [B, ...] -> [times * B, ...], block t holds a copy of the input.
Var repeat_batch(const Var& x, int times);
// [G * B, C, H, W] -> [B, G * C, H, W]; output channel g * C + c of sample b
// is input channel c of sample g * B + b.
Var batch_to_channels(const Var& x, int groups);
// Keeps samples [begin, end).
Var slice_batch(const Var& x, int begin, int end);
// Stacks inputs along N in order.
Var concat_batch(std::span<const Var> parts);
// Top-left crop.
Var crop(const Var& x, int height, int width);

enum class Direction : std::uint8_t {
  kLeftToRight = 0,
  kRightToLeft = 1,
  kTopToBottom = 2,
  kBottomToTop = 3,
};
inline constexpr Direction kAllDirections[4] = {
    Direction::kLeftToRight, Direction::kRightToLeft, Direction::kTopToBottom,
    Direction::kBottomToTop};
const char* direction_name(Direction d);

// out[k] = (1 - A[k]) f[k] + A[k] f[k-1], where k-1 is the neighbour the
// direction comes from. Locations without that neighbour copy f. With
// recursive set, the neighbour term reads the already mixed output instead.
Var directional_mix(const Var& f, const Var& attention, Direction direction,
                    bool recursive = false);

// 1 - sum(P Y) / (sum(P + Y - P Y) + eps). Y is treated as a constant. With
// per_sample, the loss is computed per batch entry and averaged.
Var iou_loss(const Var& p, const Tensor& y, double eps = 1e-6,
             bool per_sample = false);

Var sum_all(const Var& x);

}  // namespace vidnet::nn

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


// Quad-directional local attention.
//
// For each direction d a 3x3 convolution followed by a sigmoid produces an
// attention map A_d with the shape of the input feature f. The refined map
// mixes every location with its neighbour on the side the direction comes
// from:  out[k] = (1 - A_d[k]) f[k] + A_d[k] f[k-1].

#pragma once

#include <array>
#include <random>
#include <string>

#include "nn/params.hpp"

namespace vidnet::model {

struct DirectionalFeatures {
  std::array<nn::Var, 4> refined;    // lr, rl, tb, bt
  std::array<nn::Var, 4> attention;  // A used to produce refined[d]
};

nn::Var compute_attention_map(const nn::Var& f, const nn::Conv2d& transform);

// Literal one-step mix by default; `recursive` reads the refined neighbour.
nn::Var directional_refine(const nn::Var& f, const nn::Var& attention,
                           nn::Direction direction, bool recursive = false);

class Qdla {
 public:
  Qdla() = default;
  Qdla(nn::ParamStore& store, const std::string& prefix, int channels,
       std::mt19937_64& rng);

  // Parallel: all four maps come from the same f. Sequential: the directions
  // are chained in lr, rl, tb, bt order and refined[d] is the chain after d.
  DirectionalFeatures forward(const nn::Var& f, bool sequential = false,
                              bool recursive = false) const;

  const nn::Conv2d& transform(nn::Direction d) const {
    return transforms_[static_cast<int>(d)];
  }
  nn::Conv2d& transform(nn::Direction d) { return transforms_[static_cast<int>(d)]; }

 private:
  std::array<nn::Conv2d, 4> transforms_;
};

}  // namespace vidnet::model

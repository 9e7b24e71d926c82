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


#include "model/qdla.hpp"

namespace vidnet::model {

nn::Var compute_attention_map(const nn::Var& f, const nn::Conv2d& transform) {
  return nn::sigmoid(transform(f));
}

nn::Var directional_refine(const nn::Var& f, const nn::Var& attention,
                           nn::Direction direction, bool recursive) {
  return nn::directional_mix(f, attention, direction, recursive);
}

Qdla::Qdla(nn::ParamStore& store, const std::string& prefix, int channels,
           std::mt19937_64& rng) {
  for (nn::Direction d : nn::kAllDirections)
    transforms_[static_cast<int>(d)] = nn::Conv2d::create(
        store, prefix + "." + nn::direction_name(d), nn::ParamGroup::kDecoder,
        channels, channels, 3, nn::Init::kXavierUniform, rng);
}

DirectionalFeatures Qdla::forward(const nn::Var& f, bool sequential,
                                  bool recursive) const {
  DirectionalFeatures out;
  nn::Var current = f;
  for (nn::Direction d : nn::kAllDirections) {
    const int i = static_cast<int>(d);
    const nn::Var& src = sequential ? current : f;
    out.attention[i] = compute_attention_map(src, transforms_[i]);
    out.refined[i] = directional_refine(src, out.attention[i], d, recursive);
    current = out.refined[i];
  }
  return out;
}

}  // namespace vidnet::model

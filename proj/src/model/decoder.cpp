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


#include "model/decoder.hpp"

#include <stdexcept>

namespace vidnet::model {

using nn::Var;

ConvLstmCell::ConvLstmCell(nn::ParamStore& store, const std::string& name,
                           int in_channels, int hidden_channels,
                           std::mt19937_64& rng)
    : hidden_(hidden_channels) {
  gates_ = nn::Conv2d::create(store, name + ".gates", nn::ParamGroup::kDecoder,
                              in_channels + hidden_channels, 4 * hidden_channels,
                              3, nn::Init::kXavierUniform, rng);
}

ConvLstmState ConvLstmCell::step(const Var& g, const ConvLstmState& state) const {
  const nn::Shape gs = g.shape();
  if (gs.c + hidden_ != gates_.in_channels())
    throw std::invalid_argument("convlstm: input has " + std::to_string(gs.c) +
                                " channels, cell expects " +
                                std::to_string(gates_.in_channels() - hidden_));
  Var h = state.h, c = state.c;
  const nn::Shape zero_shape{gs.n, hidden_, gs.h, gs.w};
  if (!h.defined()) h = Var::constant(nn::Tensor(zero_shape));
  if (!c.defined()) c = Var::constant(nn::Tensor(zero_shape));
  if (h.shape() != zero_shape || c.shape() != zero_shape)
    throw std::invalid_argument("convlstm: state " + h.shape().str() +
                                " does not match input " + gs.str());
  const Var parts[2] = {g, h};
  const Var z = gates_(nn::concat_channels(parts));
  const int k = hidden_;
  const Var i = nn::sigmoid(nn::slice_channels(z, 0, k));
  const Var f = nn::sigmoid(nn::slice_channels(z, k, 2 * k));
  const Var o = nn::sigmoid(nn::slice_channels(z, 2 * k, 3 * k));
  const Var cand = nn::tanh(nn::slice_channels(z, 3 * k, 4 * k));
  ConvLstmState next;
  next.c = nn::add(nn::mul(f, c), nn::mul(i, cand));
  next.h = nn::mul(o, nn::tanh(next.c));
  return next;
}

ConvLstmState DecoderState::cell(int layer, int route) const {
  const ConvLstmState& s = layers.at(layer);
  if (!s.defined()) return {};
  const int b = s.h.shape().n / routes;
  return {nn::slice_batch(s.h, route * b, (route + 1) * b),
          nn::slice_batch(s.c, route * b, (route + 1) * b)};
}

DecoderState DecoderState::detached() const {
  DecoderState out;
  out.routes = routes;
  for (int l = 0; l < kDecoderLayers; ++l) {
    if (!layers[l].defined()) continue;
    out.layers[l].h = Var::constant(layers[l].h.value());
    out.layers[l].c = Var::constant(layers[l].c.value());
  }
  return out;
}

Var bilinear_upsample(const Var& h, int height, int width) {
  const nn::Shape s = h.shape();
  const int h2 = 2 * s.h, w2 = 2 * s.w;
  if (height > h2 || width > w2 || height < h2 - 1 || width < w2 - 1)
    throw std::invalid_argument("bilinear_upsample: cannot match " + s.str() +
                                " x2 to " + std::to_string(height) + "x" +
                                std::to_string(width));
  return nn::crop(nn::resize_bilinear(h, h2, w2), height, width);
}

Decoder::Decoder(nn::ParamStore& store, const DecoderConfig& cfg,
                 const std::array<int, kNumLevels - 1>& skip_channels,
                 int top_channels, int routes, std::mt19937_64& rng)
    : routes_(routes) {
  const auto& hid = cfg.hidden_channels;
  for (int i = 0; i < kDecoderLayers; ++i) {
    // Layer i + 1 reads skip level 5 - i (index 4 - i).
    const int in = i == 0 ? top_channels : hid[i - 1] + skip_channels[4 - i];
    cells_[i] = ConvLstmCell(store, "decoder.layer" + std::to_string(i + 1), in,
                             hid[i], rng);
  }
  head_ = nn::Conv2d::create(store, "decoder.head", nn::ParamGroup::kDecoder,
                             hid.back() + skip_channels[0], 1, cfg.head_kernel,
                             nn::Init::kXavierUniform, rng);
  fusion_ = nn::Conv2d::create(store, "decoder.fusion", nn::ParamGroup::kDecoder,
                               routes, 1, 3, nn::Init::kXavierUniform, rng);
}

Decoder::Output Decoder::step(const Var& top,
                              const std::array<Var, kNumLevels - 1>& skips,
                              DecoderState& state) const {
  if (state.empty()) state.routes = routes_;
  if (state.routes != routes_)
    throw std::invalid_argument("decoder state has " + std::to_string(state.routes) +
                                " routes, decoder expects " + std::to_string(routes_));
  Var h;
  for (int i = 0; i < kDecoderLayers; ++i) {
    Var g = top;
    if (i > 0) {
      const Var& skip = skips[4 - i];
      const Var parts[2] = {bilinear_upsample(h, skip.shape().h, skip.shape().w),
                            skip};
      g = nn::concat_channels(parts);
    }
    state.layers[i] = cells_[i].step(g, state.layers[i]);
    h = state.layers[i].h;
  }
  const Var& f1 = skips[0];
  const Var parts[2] = {bilinear_upsample(h, f1.shape().h, f1.shape().w), f1};
  const Var p = nn::sigmoid(head_(nn::concat_channels(parts)));
  Output out;
  out.per_route = nn::batch_to_channels(p, routes_);
  out.probability = nn::sigmoid(fusion_(out.per_route));
  return out;
}

}  // namespace vidnet::model

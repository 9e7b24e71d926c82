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


#include "model/vidnet.hpp"

#include <cstring>
#include <stdexcept>

namespace vidnet::model {

using nn::Tensor;
using nn::Var;

namespace {

Tensor to_tensor(const media::Frame& f, const ModelConfig& cfg) {
  return media::normalize_for_network(f, cfg.input_norm).values;
}

media::Frame fit(const media::Frame& f, const ModelConfig& cfg) {
  return media::resize_frame(f, cfg.input_height, cfg.input_width);
}

}  // namespace

FrameInputs prepare_frame(const media::Frame& frame, const ModelConfig& cfg) {
  const media::Frame sized = fit(frame, cfg);
  FrameInputs in;
  if (cfg.encoder.use_rgb_stream) in.rgb = to_tensor(sized, cfg);
  if (cfg.encoder.use_ela_stream)
    in.ela = to_tensor(media::compute_ela(sized, cfg.ela_quality).pixels, cfg);
  return in;
}

FrameInputs prepare_frame(const media::Frame& frame, const media::ElaFrame& ela,
                          const ModelConfig& cfg) {
  FrameInputs in;
  if (cfg.encoder.use_rgb_stream) in.rgb = to_tensor(fit(frame, cfg), cfg);
  if (cfg.encoder.use_ela_stream) in.ela = to_tensor(fit(ela.pixels, cfg), cfg);
  return in;
}

Tensor stack_batch(std::span<const Tensor> samples) {
  if (samples.empty()) return {};
  if (samples[0].empty()) return {};
  const nn::Shape s = samples[0].shape();
  Tensor out(nn::Shape{static_cast<int>(samples.size()) * s.n, s.c, s.h, s.w});
  double* dst = out.data();
  for (const Tensor& t : samples) {
    if (t.shape() != s)
      throw std::invalid_argument("stack_batch: mixed shapes " + s.str() + " and " +
                                  t.shape().str());
    std::memcpy(dst, t.data(), sizeof(double) * t.size());
    dst += t.size();
  }
  return out;
}

VidNet::VidNet(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(cfg_.seed);
  encoder_ = Encoder(store_, cfg_.encoder, rng);
  const auto& ch = cfg_.encoder.stage_channels;
  const int top = cfg_.qdla.both_features ? 2 * ch[4] : ch[4];
  if (cfg_.qdla.enabled) {
    qdla_ = Qdla(store_, "qdla.level5", top, rng);
    if (cfg_.qdla.all_layers)
      for (int l = 0; l < kNumLevels - 1; ++l)
        qdla_levels_.emplace_back(store_, "qdla.level" + std::to_string(l + 1),
                                  ch[l], rng);
  }
  decoder_ = Decoder(store_, cfg_.decoder, {ch[0], ch[1], ch[2], ch[3]}, top,
                     cfg_.routes(), rng);
}

VidNet::StepOutput VidNet::step(const Tensor& rgb, const Tensor& ela,
                                DecoderState& state, bool training,
                                std::mt19937_64& rng) const {
  const Tensor& ref = rgb.empty() ? ela : rgb;
  if (ref.empty()) throw std::invalid_argument("step: no input tensors");
  if (!rgb.empty() && !ela.empty() && rgb.shape() != ela.shape())
    throw std::invalid_argument("step: RGB " + rgb.shape().str() + " and ELA " +
                                ela.shape().str() + " differ");
  const int m = cfg_.pad_multiple();
  const Tensor prgb = rgb.empty() ? Tensor() : media::reflect_pad(rgb, m);
  const Tensor pela = ela.empty() ? Tensor() : media::reflect_pad(ela, m);
  Encoder::Output enc = encoder_.forward(prgb, pela, training, rng);

  Var top = enc.fused.levels[kNumLevels - 1];
  if (cfg_.qdla.both_features) {
    const Var parts[2] = {
        top, nn::dropout(enc.f5_ela, cfg_.encoder.dropout_rate, rng, training)};
    top = nn::concat_channels(parts);
  }
  std::array<Var, kNumLevels - 1> skips;
  StepOutput out;
  if (cfg_.qdla.enabled) {
    out.top = qdla_.forward(top, cfg_.qdla.sequential, cfg_.qdla.recursive);
    top = nn::concat_batch(out.top.refined);
    for (int l = 0; l < kNumLevels - 1; ++l) {
      const Var& f = enc.fused.levels[l];
      skips[l] = cfg_.qdla.all_layers
                     ? nn::concat_batch(qdla_levels_[l]
                                            .forward(f, cfg_.qdla.sequential,
                                                     cfg_.qdla.recursive)
                                            .refined)
                     : nn::repeat_batch(f, 4);
    }
  } else {
    for (int l = 0; l < kNumLevels - 1; ++l) skips[l] = enc.fused.levels[l];
  }
  Decoder::Output dec = decoder_.step(top, skips, state);
  out.probability = nn::crop(dec.probability, ref.h(), ref.w());
  out.per_direction = nn::crop(dec.per_route, ref.h(), ref.w());
  return out;
}

std::vector<VidNet::StepOutput> VidNet::run_clip(std::span<const Tensor> rgb,
                                                 std::span<const Tensor> ela,
                                                 DecoderState& state,
                                                 bool training,
                                                 std::mt19937_64& rng) const {
  const std::size_t len = std::max(rgb.size(), ela.size());
  if (len == 0) throw std::invalid_argument("run_clip: empty clip");
  if ((!rgb.empty() && rgb.size() != len) || (!ela.empty() && ela.size() != len))
    throw std::invalid_argument("run_clip: RGB and ELA sequences differ in length");
  std::vector<StepOutput> out;
  out.reserve(len);
  static const Tensor kNone;
  for (std::size_t t = 0; t < len; ++t)
    out.push_back(step(rgb.empty() ? kNone : rgb[t], ela.empty() ? kNone : ela[t],
                       state, training, rng));
  return out;
}

std::vector<PredictionFrame> VidNet::run_clip(
    const std::vector<media::Frame>& frames,
    const std::vector<media::ElaFrame>& ela_frames, DecoderState& state) const {
  if (frames.empty()) throw std::invalid_argument("run_clip: empty clip");
  if (!ela_frames.empty() && ela_frames.size() != frames.size())
    throw std::invalid_argument("run_clip: frame and ELA sequences differ in length");
  nn::NoGradGuard no_grad;
  std::mt19937_64 rng(0);  // unused outside training
  std::vector<PredictionFrame> out;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const FrameInputs in = ela_frames.empty()
                               ? prepare_frame(frames[t], cfg_)
                               : prepare_frame(frames[t], ela_frames[t], cfg_);
    StepOutput s = step(in.rgb, in.ela, state, false, rng);
    out.push_back({s.probability.value(), s.per_direction.value()});
  }
  return out;
}

std::vector<Tensor> GroundTruthEcho::predict_video(const media::Video& video) {
  if (video.masks.size() != video.frames.size())
    throw std::invalid_argument("ground-truth echo needs masks for " + video.id);
  std::vector<Tensor> out;
  for (const media::MaskFrame& m : video.masks) {
    Tensor t(nn::Shape{1, 1, m.height(), m.width()});
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) t.at(0, 0, y, x) = m.at(y, x);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Tensor> VidNetDetector::predict_video(const media::Video& video) {
  if (video.frames.empty()) throw std::invalid_argument("empty video " + video.id);
  if (opts_.clip_len < 1) throw std::invalid_argument("clip_len must be >= 1");
  nn::NoGradGuard no_grad;
  std::mt19937_64 rng(0);
  DecoderState state;
  std::vector<Tensor> out;
  for (std::size_t t = 0; t < video.frames.size(); ++t) {
    if (!opts_.carry_state && t % opts_.clip_len == 0) state = DecoderState();
    const media::Frame& frame = video.frames[t];
    const FrameInputs in = prepare_frame(frame, net_.config());
    Var p = net_.step(in.rgb, in.ela, state, false, rng).probability;
    if (p.shape().h != frame.height() || p.shape().w != frame.width())
      p = nn::resize_bilinear(p, frame.height(), frame.width());
    out.push_back(p.value());
  }
  return out;
}

}  // namespace vidnet::model

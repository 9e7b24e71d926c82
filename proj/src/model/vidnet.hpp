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


// The full detector: two-stream encoder, QDLA on the top level, and the
// ConvLSTM decoder, stepped one frame at a time.

#pragma once

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "media/media.hpp"
#include "model/config.hpp"
#include "model/decoder.hpp"
#include "model/encoder.hpp"
#include "model/qdla.hpp"
#include "nn/params.hpp"

namespace vidnet::model {

struct PredictionFrame {
  nn::Tensor probability;    // [1, 1, H, W]
  nn::Tensor per_direction;  // [1, routes, H, W]
};

// Network inputs for one frame: normalized RGB and ELA, [1, 3, H, W] each.
struct FrameInputs {
  nn::Tensor rgb;
  nn::Tensor ela;
};

// Resizes to the model input size, computes ELA on the resized 8-bit frame
// and normalizes both. Streams that are off get an empty tensor.
FrameInputs prepare_frame(const media::Frame& frame, const ModelConfig& cfg);
FrameInputs prepare_frame(const media::Frame& frame, const media::ElaFrame& ela,
                          const ModelConfig& cfg);

// Stacks per-sample [1, C, H, W] tensors into [N, C, H, W].
nn::Tensor stack_batch(std::span<const nn::Tensor> samples);

class VidNet {
 public:
  explicit VidNet(const ModelConfig& cfg);
  VidNet(const VidNet&) = delete;
  VidNet& operator=(const VidNet&) = delete;

  struct StepOutput {
    nn::Var probability;    // [B, 1, H, W], cropped to the input size
    nn::Var per_direction;  // [B, routes, H, W]
    DirectionalFeatures top;  // QDLA output on level 5 (empty without QDLA)
  };

  // rgb / ela: [B, 3, H, W] normalized, unpadded. Advances `state`.
  StepOutput step(const nn::Tensor& rgb, const nn::Tensor& ela,
                  DecoderState& state, bool training, std::mt19937_64& rng) const;

  std::vector<StepOutput> run_clip(std::span<const nn::Tensor> rgb,
                                   std::span<const nn::Tensor> ela,
                                   DecoderState& state, bool training,
                                   std::mt19937_64& rng) const;

  // Inference on 8-bit frames; ela_frames may be empty to compute ELA here.
  // Probabilities are at the model input size.
  std::vector<PredictionFrame> run_clip(const std::vector<media::Frame>& frames,
                                        const std::vector<media::ElaFrame>& ela_frames,
                                        DecoderState& state) const;

  const ModelConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  const Qdla& qdla() const { return qdla_; }
  Qdla& qdla() { return qdla_; }
  const std::vector<Qdla>& qdla_levels() const { return qdla_levels_; }
  const Decoder& decoder() const { return decoder_; }
  Decoder& decoder() { return decoder_; }

 private:
  ModelConfig cfg_;
  nn::ParamStore store_;
  Encoder encoder_;
  Qdla qdla_;
  std::vector<Qdla> qdla_levels_;  // levels 1-4 when all_layers is set
  Decoder decoder_;
};

// Anything that maps a video to per-frame probability maps at frame size.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<nn::Tensor> predict_video(const media::Video& video) = 0;
};

// Returns the ground-truth masks as probabilities.
class GroundTruthEcho final : public Detector {
 public:
  std::vector<nn::Tensor> predict_video(const media::Video& video) override;
};

struct InferenceOptions {
  // Carry the recurrent state through the whole video. When false the state
  // is reset every clip_len frames, as in training.
  bool carry_state = true;
  int clip_len = 3;
};

class VidNetDetector final : public Detector {
 public:
  VidNetDetector(const VidNet& net, InferenceOptions opts = {})
      : net_(net), opts_(opts) {}
  std::vector<nn::Tensor> predict_video(const media::Video& video) override;

 private:
  const VidNet& net_;
  InferenceOptions opts_;
};

}  // namespace vidnet::model

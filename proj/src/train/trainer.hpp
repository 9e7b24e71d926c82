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


// Clip sampling, augmentation and the alternating two-optimizer loop.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "media/media.hpp"
#include "metrics/metrics.hpp"
#include "model/vidnet.hpp"

namespace vidnet::train {

struct TrainConfig {
  int clip_len = 3;
  int batch_size = 4;
  int epochs = 40;
  double lr_encoder = 1e-4;
  double lr_decoder = 1e-3;
  double weight_decay = 5e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 7;
  bool frame_by_frame = false;  // forces clip_len = 1
  bool flip_augment = true;
  // Gaussian-noise augmentation at noise_snr_db with noise_probability per clip.
  bool noise_augment = false;
  double noise_snr_db = 20.0;
  double noise_probability = 0.5;
  // Stop early once training mean IoU reaches this value (0 disables).
  double target_train_iou = 0.0;
  int eval_every = 5;          // epochs between training-set evaluations
  int checkpoint_every = 0;    // epochs; 0 writes only the final checkpoint

  void validate() const;
  int effective_clip_len() const { return frame_by_frame ? 1 : clip_len; }
};

// A clip in memory: frames, their ELA and ground-truth masks.
struct Clip {
  std::vector<media::Frame> frames;
  std::vector<media::ElaFrame> ela;
  std::vector<media::MaskFrame> masks;
};

struct ClipRef {
  int video = 0;
  int start = 0;
};

// Consecutive non-overlapping clips; the remainder is dropped.
std::vector<ClipRef> split_into_clips(int num_frames, int clip_len);

// Flips every frame, ELA frame and mask together with probability 0.5.
// Returns whether the clip was flipped.
bool augment_clip(Clip& clip, std::mt19937_64& rng);

class TrainingDivergedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adam over one parameter group, L2 weight decay added to the gradient.
class Adam {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
  };
  Adam(nn::ParamStore& store, nn::ParamGroup group, Options opts);

  void step();
  std::int64_t steps() const { return steps_; }
  const Options& options() const { return opts_; }
  nn::ParamGroup group() const { return group_; }

  // Moment tensors keyed by parameter name, for checkpoints.
  std::vector<std::pair<std::string, nn::Tensor*>> state();
  void set_steps(std::int64_t s) { steps_ = s; }

 private:
  nn::ParamStore& store_;
  nn::ParamGroup group_;
  Options opts_;
  std::vector<std::size_t> index_;
  std::vector<nn::Tensor> m_, v_;
  std::int64_t steps_ = 0;
};

struct StepRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
  nn::ParamGroup optimizer = nn::ParamGroup::kEncoder;
  double lr = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> train_iou;
  double seconds = 0.0;
};

class Trainer {
 public:
  Trainer(model::VidNet& net, const TrainConfig& cfg);

  // Loads the training videos and caches their ELA.
  void set_dataset(std::vector<media::Video> videos);
  const std::vector<media::Video>& dataset() const { return videos_; }

  // One optimizer step on the given clips. Fresh decoder state per clip.
  StepRecord train_step(std::span<const Clip> batch);
  EpochRecord train_epoch();
  // Runs up to cfg.epochs (or until target_train_iou). Calls on_epoch after
  // every epoch; returning false stops training.
  std::vector<EpochRecord> fit(
      const std::function<bool(const EpochRecord&)>& on_epoch = {});

  metrics::MetricsReport evaluate_training_set(
      const model::InferenceOptions& opts = {}) const;

  // Builds the clip as fed to the network, augmentations included.
  Clip make_clip(const ClipRef& ref);

  void set_log(const std::filesystem::path& path);

  // Checkpoint as <base>.bin plus <base>.json; config_json is stored in the
  // sidecar as "run_config".
  void save_checkpoint(const std::filesystem::path& base,
                       const std::string& config_json = "{}");
  void load_checkpoint(const std::filesystem::path& base);

  std::int64_t global_step() const { return global_step_; }
  std::int64_t encoder_updates() const { return enc_opt_.steps(); }
  std::int64_t decoder_updates() const { return dec_opt_.steps(); }
  std::int64_t noise_applications() const { return noise_applications_; }
  int epoch() const { return epoch_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  const TrainConfig& config() const { return cfg_; }
  model::VidNet& net() { return net_; }

 private:
  model::VidNet& net_;
  TrainConfig cfg_;
  Adam enc_opt_;
  Adam dec_opt_;
  std::mt19937_64 rng_;
  std::vector<media::Video> videos_;
  std::vector<std::vector<media::ElaFrame>> ela_cache_;
  std::vector<ClipRef> clips_;
  std::int64_t global_step_ = 0;
  std::int64_t noise_applications_ = 0;
  int epoch_ = 0;
  std::vector<EpochRecord> history_;
  std::optional<std::ofstream> log_;
};

// Perturbations applied to the frames before detection.
struct Perturbation {
  enum class Kind { kNone, kJpeg, kNoise } kind = Kind::kNone;
  double value = 0.0;  // JPEG quality or SNR in dB
  std::string name() const;
  // "none", "jpeg<q>", "snr<db>".
  static Perturbation parse(const std::string& text);
};

media::Video apply_perturbation(const media::Video& video, const Perturbation& p,
                                std::uint64_t seed);

struct PerturbationResult {
  Perturbation perturbation;
  metrics::MetricsReport report;
};

// The detector only sees perturbed frames, so any ELA it uses is computed
// after the perturbation.
std::vector<PerturbationResult> run_perturbation_suite(
    model::Detector& detector, const std::vector<media::Video>& videos,
    const std::vector<Perturbation>& kinds,
    const std::vector<media::Video>& negatives = {},
    const metrics::EvalOptions& opts = {}, std::uint64_t seed = 0);

}  // namespace vidnet::train

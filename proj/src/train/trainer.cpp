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


#include "train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "config/run_config.hpp"
#include "synth/synthdata.hpp"
#include "train/checkpoint.hpp"

namespace vidnet::train {

using nn::Tensor;

void TrainConfig::validate() const {
  if (clip_len < 1) throw std::invalid_argument("train.clip_len must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train.batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("train.epochs must be >= 0");
  if (!(lr_encoder > 0) || !(lr_decoder > 0))
    throw std::invalid_argument("train learning rates must be positive");
  if (!(weight_decay >= 0)) throw std::invalid_argument("train.weight_decay must be >= 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1))
    throw std::invalid_argument("train Adam betas must be in [0, 1)");
  if (!(adam_eps > 0)) throw std::invalid_argument("train.adam_eps must be positive");
  if (std::isnan(noise_snr_db) || noise_snr_db == -INFINITY)
    throw std::invalid_argument("train.noise_snr_db must be finite or +inf");
  if (!(noise_probability >= 0 && noise_probability <= 1))
    throw std::invalid_argument("train.noise_probability must be in [0, 1]");
  if (!(target_train_iou >= 0 && target_train_iou <= 1))
    throw std::invalid_argument("train.target_train_iou must be in [0, 1]");
  if (eval_every < 0) throw std::invalid_argument("train.eval_every must be >= 0");
  if (checkpoint_every < 0)
    throw std::invalid_argument("train.checkpoint_every must be >= 0");
}

std::vector<ClipRef> split_into_clips(int num_frames, int clip_len) {
  if (clip_len < 1) throw std::invalid_argument("clip_len must be >= 1");
  std::vector<ClipRef> out;
  for (int s = 0; s + clip_len <= num_frames; s += clip_len) out.push_back({0, s});
  return out;
}

bool augment_clip(Clip& clip, std::mt19937_64& rng) {
  if (!std::bernoulli_distribution(0.5)(rng)) return false;
  for (auto& f : clip.frames) f = media::flip_horizontal(f);
  for (auto& e : clip.ela) e.pixels = media::flip_horizontal(e.pixels);
  for (auto& m : clip.masks) m = media::flip_horizontal(m);
  return true;
}

// ---------------------------------------------------------------------------

Adam::Adam(nn::ParamStore& store, nn::ParamGroup group, Options opts)
    : store_(store), group_(group), opts_(opts) {
  const auto& params = store.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].group != group) continue;
    index_.push_back(i);
    m_.emplace_back(params[i].var.shape());
    v_.emplace_back(params[i].var.shape());
  }
}

void Adam::step() {
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(opts_.beta1, t);
  const double c2 = 1.0 - std::pow(opts_.beta2, t);
  auto& params = store_.parameters();
  for (std::size_t k = 0; k < index_.size(); ++k) {
    nn::Var& var = params[index_[k]].var;
    Tensor& w = var.mutable_value();
    const Tensor& g = var.grad();
    const bool has_grad = !g.empty();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = (has_grad ? g[i] : 0.0) + opts_.weight_decay * w[i];
      m[i] = opts_.beta1 * m[i] + (1 - opts_.beta1) * gi;
      v[i] = opts_.beta2 * v[i] + (1 - opts_.beta2) * gi * gi;
      w[i] -= opts_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + opts_.eps);
    }
  }
}

std::vector<std::pair<std::string, Tensor*>> Adam::state() {
  std::vector<std::pair<std::string, Tensor*>> out;
  const auto& params = store_.parameters();
  for (std::size_t k = 0; k < index_.size(); ++k) {
    out.emplace_back("m." + params[index_[k]].name, &m_[k]);
    out.emplace_back("v." + params[index_[k]].name, &v_[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Adam::Options adam_options(const TrainConfig& c, double lr) {
  return {lr, c.adam_beta1, c.adam_beta2, c.adam_eps, c.weight_decay};
}

Tensor mask_tensor(std::span<const media::MaskFrame* const> masks) {
  const int h = masks[0]->height(), w = masks[0]->width();
  Tensor y(nn::Shape{static_cast<int>(masks.size()), 1, h, w});
  for (std::size_t b = 0; b < masks.size(); ++b) {
    const auto& px = masks[b]->pixels();
    std::copy(px.begin(), px.end(), y.plane(static_cast<int>(b), 0));
  }
  return y;
}

std::string optimizer_name(nn::ParamGroup g) {
  return g == nn::ParamGroup::kEncoder ? "encoder" : "decoder";
}

}  // namespace

Trainer::Trainer(model::VidNet& net, const TrainConfig& cfg)
    : net_(net),
      cfg_(cfg),
      enc_opt_(net.params(), nn::ParamGroup::kEncoder, adam_options(cfg, cfg.lr_encoder)),
      dec_opt_(net.params(), nn::ParamGroup::kDecoder, adam_options(cfg, cfg.lr_decoder)),
      rng_(cfg.seed) {
  cfg_.validate();
}

void Trainer::set_dataset(std::vector<media::Video> videos) {
  const model::ModelConfig& mc = net_.config();
  videos_ = std::move(videos);
  ela_cache_.clear();
  clips_.clear();
  for (std::size_t v = 0; v < videos_.size(); ++v) {
    media::Video& video = videos_[v];
    if (video.masks.size() != video.frames.size())
      throw std::invalid_argument("training video " + video.id + " lacks masks");
    std::vector<media::ElaFrame> ela;
    for (std::size_t t = 0; t < video.frames.size(); ++t) {
      video.frames[t] = media::resize_frame(video.frames[t], mc.input_height, mc.input_width);
      video.masks[t] = media::resize_mask(video.masks[t], mc.input_height, mc.input_width);
      ela.push_back(media::compute_ela(video.frames[t], mc.ela_quality));
    }
    ela_cache_.push_back(std::move(ela));
    for (ClipRef r : split_into_clips(static_cast<int>(video.frames.size()),
                                      cfg_.effective_clip_len())) {
      r.video = static_cast<int>(v);
      clips_.push_back(r);
    }
  }
  if (clips_.empty())
    throw std::invalid_argument("training set yields no clips of length " +
                                std::to_string(cfg_.effective_clip_len()));
}

Clip Trainer::make_clip(const ClipRef& ref) {
  const media::Video& video = videos_.at(ref.video);
  const int len = cfg_.effective_clip_len();
  Clip clip;
  for (int t = ref.start; t < ref.start + len; ++t) {
    clip.frames.push_back(video.frames.at(t));
    clip.masks.push_back(video.masks.at(t));
  }
  if (cfg_.noise_augment &&
      std::bernoulli_distribution(cfg_.noise_probability)(rng_)) {
    ++noise_applications_;
    for (auto& f : clip.frames) {
      f = media::add_gaussian_noise(f, cfg_.noise_snr_db, rng_());
      clip.ela.push_back(media::compute_ela(f, net_.config().ela_quality));
    }
  } else {
    for (int t = ref.start; t < ref.start + len; ++t)
      clip.ela.push_back(ela_cache_[ref.video][t]);
  }
  if (cfg_.flip_augment) augment_clip(clip, rng_);
  return clip;
}

StepRecord Trainer::train_step(std::span<const Clip> batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const std::size_t len = batch[0].frames.size();
  const model::ModelConfig& mc = net_.config();
  std::vector<Tensor> rgb, ela, ys;
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<Tensor> r, e;
    std::vector<const media::MaskFrame*> m;
    for (const Clip& c : batch) {
      if (c.frames.size() != len || c.ela.size() != len || c.masks.size() != len)
        throw std::invalid_argument("train_step: clips differ in length");
      if (mc.encoder.use_rgb_stream)
        r.push_back(media::normalize_for_network(c.frames[t], mc.input_norm).values);
      if (mc.encoder.use_ela_stream)
        e.push_back(media::normalize_for_network(c.ela[t].pixels, mc.input_norm).values);
      m.push_back(&c.masks[t]);
    }
    rgb.push_back(model::stack_batch(r));
    ela.push_back(model::stack_batch(e));
    ys.push_back(mask_tensor(m));
  }
  const std::span<const Tensor> rgb_span = mc.encoder.use_rgb_stream
                                               ? std::span<const Tensor>(rgb)
                                               : std::span<const Tensor>();
  const std::span<const Tensor> ela_span = mc.encoder.use_ela_stream
                                               ? std::span<const Tensor>(ela)
                                               : std::span<const Tensor>();
  model::DecoderState state;
  const auto outs = net_.run_clip(rgb_span, ela_span, state, true, rng_);
  nn::Var loss;
  for (std::size_t t = 0; t < len; ++t) {
    nn::Var l = nn::iou_loss(outs[t].probability, ys[t], metrics::kIouEps, true);
    loss = loss.defined() ? nn::add(loss, l) : l;
  }
  const double value = loss.value()[0];
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite loss " << value << " at step " << global_step_ << " (epoch "
        << epoch_ << ")";
    throw TrainingDivergedError(msg.str());
  }
  nn::backward(loss);
  Adam& opt = global_step_ % 2 == 0 ? enc_opt_ : dec_opt_;
  opt.step();
  net_.params().zero_grad();

  StepRecord rec{global_step_, epoch_, value, opt.group(), opt.options().lr};
  if (log_) {
    nlohmann::ordered_json j{{"step", rec.step},
                             {"epoch", rec.epoch},
                             {"loss", rec.loss},
                             {"optimizer", optimizer_name(rec.optimizer)},
                             {"lr", rec.lr}};
    *log_ << j.dump() << "\n" << std::flush;
  }
  ++global_step_;
  return rec;
}

EpochRecord Trainer::train_epoch() {
  if (clips_.empty()) throw std::logic_error("train_epoch: no dataset loaded");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<ClipRef> order = clips_;
  std::shuffle(order.begin(), order.end(), rng_);
  double loss_sum = 0.0;
  int steps = 0;
  for (std::size_t i = 0; i < order.size(); i += cfg_.batch_size) {
    std::vector<Clip> batch;
    for (std::size_t k = i; k < std::min(order.size(), i + cfg_.batch_size); ++k)
      batch.push_back(make_clip(order[k]));
    loss_sum += train_step(batch).loss;
    ++steps;
  }
  EpochRecord rec;
  rec.epoch = epoch_;
  rec.mean_loss = loss_sum / steps;
  ++epoch_;
  if (cfg_.eval_every > 0 && epoch_ % cfg_.eval_every == 0)
    rec.train_iou = evaluate_training_set().mean_iou;
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  history_.push_back(rec);
  return rec;
}

std::vector<EpochRecord> Trainer::fit(
    const std::function<bool(const EpochRecord&)>& on_epoch) {
  std::vector<EpochRecord> out;
  while (epoch_ < cfg_.epochs) {
    const EpochRecord rec = train_epoch();
    out.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;
    if (cfg_.target_train_iou > 0 && rec.train_iou &&
        *rec.train_iou >= cfg_.target_train_iou)
      break;
  }
  return out;
}

metrics::MetricsReport Trainer::evaluate_training_set(
    const model::InferenceOptions& opts) const {
  model::VidNetDetector detector(net_, opts);
  return metrics::evaluate_dataset(detector, videos_);
}

void Trainer::set_log(const std::filesystem::path& path) {
  log_.emplace(path, std::ios::app);
  if (!*log_) throw media::IoError("cannot open training log " + path.string());
}

void Trainer::save_checkpoint(const std::filesystem::path& base,
                              const std::string& config_json) {
  auto entries = model_entries(net_);
  for (Adam* opt : {&enc_opt_, &dec_opt_})
    for (auto& [name, t] : opt->state())
      entries.emplace_back("optim." + optimizer_name(opt->group()) + "." + name, t);
  write_archive(archive_path(base), entries);

  nlohmann::ordered_json meta;
  meta["format"] = "vidnet-checkpoint";
  meta["version"] = 1;
  meta["model"] = config::to_json(net_.config());
  meta["train"] = config::to_json(cfg_);
  meta["run_config"] = nlohmann::ordered_json::parse(config_json);
  meta["epoch"] = epoch_;
  meta["global_step"] = global_step_;
  meta["encoder_updates"] = enc_opt_.steps();
  meta["decoder_updates"] = dec_opt_.steps();
  meta["noise_applications"] = noise_applications_;
  std::ostringstream rng;
  rng << rng_;
  meta["rng_state"] = rng.str();
  meta["history"] = nlohmann::ordered_json::array();
  for (const EpochRecord& r : history_) {
    nlohmann::ordered_json h{{"epoch", r.epoch}, {"mean_loss", r.mean_loss},
                             {"seconds", r.seconds}};
    h["train_iou"] = r.train_iou ? nlohmann::ordered_json(*r.train_iou)
                                 : nlohmann::ordered_json(nullptr);
    meta["history"].push_back(h);
  }
  std::ofstream out(sidecar_path(base));
  out << meta.dump(2) << "\n";
  if (!out) throw media::IoError("failed writing " + sidecar_path(base).string());
}

void Trainer::load_checkpoint(const std::filesystem::path& base) {
  const auto meta = read_sidecar(base);
  const auto archive = read_archive(archive_path(base));
  restore_model(net_, archive);
  for (Adam* opt : {&enc_opt_, &dec_opt_}) {
    for (auto& [name, t] : opt->state()) {
      auto it = archive.find("optim." + optimizer_name(opt->group()) + "." + name);
      if (it == archive.end() || it->second.shape() != t->shape())
        throw media::IoError("checkpoint lacks optimizer state " + name);
      *t = it->second;
    }
  }
  try {
    epoch_ = meta.at("epoch").get<int>();
    global_step_ = meta.at("global_step").get<std::int64_t>();
    enc_opt_.set_steps(meta.at("encoder_updates").get<std::int64_t>());
    dec_opt_.set_steps(meta.at("decoder_updates").get<std::int64_t>());
    noise_applications_ = meta.at("noise_applications").get<std::int64_t>();
    std::istringstream rng(meta.at("rng_state").get<std::string>());
    rng >> rng_;
    history_.clear();
    for (const auto& h : meta.at("history")) {
      EpochRecord r;
      r.epoch = h.at("epoch").get<int>();
      r.mean_loss = h.at("mean_loss").get<double>();
      r.seconds = h.at("seconds").get<double>();
      if (!h.at("train_iou").is_null()) r.train_iou = h.at("train_iou").get<double>();
      history_.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw media::IoError(sidecar_path(base).string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

std::string Perturbation::name() const {
  std::ostringstream s;
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kJpeg: s << "jpeg" << value; break;
    case Kind::kNoise: s << "snr" << value; break;
  }
  return s.str();
}

Perturbation Perturbation::parse(const std::string& text) {
  if (text == "none") return {};
  auto number = [&](std::size_t prefix) {
    const std::string rest = text.substr(prefix);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (rest.empty() || used != rest.size())
      throw std::invalid_argument("unknown perturbation '" + text + "'");
    return v;
  };
  if (text.rfind("jpeg", 0) == 0) {
    const double q = number(4);
    if (q != std::floor(q) || q < 1 || q > 100)
      throw std::invalid_argument("perturbation '" + text + "': quality must be 1..100");
    return {Kind::kJpeg, q};
  }
  if (text.rfind("snr", 0) == 0) {
    const double db = number(3);
    if (!std::isfinite(db))
      throw std::invalid_argument("perturbation '" + text + "': SNR must be finite");
    return {Kind::kNoise, db};
  }
  throw std::invalid_argument("unknown perturbation '" + text +
                              "' (expected none, jpeg<q> or snr<db>)");
}

media::Video apply_perturbation(const media::Video& video, const Perturbation& p,
                                std::uint64_t seed) {
  media::Video out = video;
  const std::uint64_t base = synth::video_seed(seed, std::hash<std::string>{}(video.id));
  for (std::size_t t = 0; t < out.frames.size(); ++t) {
    switch (p.kind) {
      case Perturbation::Kind::kNone: break;
      case Perturbation::Kind::kJpeg:
        out.frames[t] = media::jpeg_roundtrip(out.frames[t], static_cast<int>(p.value));
        break;
      case Perturbation::Kind::kNoise:
        out.frames[t] = media::add_gaussian_noise(out.frames[t], p.value,
                                                  synth::video_seed(base, t));
        break;
    }
  }
  return out;
}

std::vector<PerturbationResult> run_perturbation_suite(
    model::Detector& detector, const std::vector<media::Video>& videos,
    const std::vector<Perturbation>& kinds, const std::vector<media::Video>& negatives,
    const metrics::EvalOptions& opts, std::uint64_t seed) {
  std::vector<PerturbationResult> out;
  for (const Perturbation& p : kinds) {
    std::vector<media::Video> pv, pn;
    for (const auto& v : videos) pv.push_back(apply_perturbation(v, p, seed));
    for (const auto& v : negatives) pn.push_back(apply_perturbation(v, p, seed));
    out.push_back({p, metrics::evaluate_dataset(detector, pv, pn, opts)});
  }
  return out;
}

}  // namespace vidnet::train

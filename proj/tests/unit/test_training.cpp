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


#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "media/media.hpp"
#include "synth/synthdata.hpp"
#include "train/checkpoint.hpp"
#include "train/trainer.hpp"
#include "support/test_util.hpp"
#include "support/tiny_model.hpp"

using namespace vidnet;
using train::Perturbation;
using vidnet::testing::tiny_model_config;

namespace {

std::vector<media::Video> synth_videos(int n, int frames, bool pristine = false) {
  synth::SynthConfig cfg;
  cfg.num_videos = n;
  cfg.frames_per_video = frames;
  cfg.height = 32;
  cfg.width = 48;
  std::vector<media::Video> out;
  for (int i = 0; i < n; ++i)
    out.push_back(pristine ? synth::generate_pristine_video(cfg, i) : synth::generate_video(cfg, i));
  return out;
}

train::TrainConfig quick_config() {
  train::TrainConfig c;
  c.batch_size = 2;
  c.epochs = 2;
  c.eval_every = 0;
  return c;
}

std::vector<double> snapshot(const nn::ParamStore& store, nn::ParamGroup g) {
  std::vector<double> out;
  for (const auto& p : store.parameters())
    if (p.group == g)
      out.insert(out.end(), p.var.value().values().begin(), p.var.value().values().end());
  return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("videos split into consecutive clips") {
  const auto c = train::split_into_clips(7, 3);
  REQUIRE(c.size() == 2);
  CHECK(c[0].start == 0);
  CHECK(c[1].start == 3);
  CHECK(train::split_into_clips(2, 3).empty());
  CHECK(train::split_into_clips(4, 1).size() == 4);
  CHECK_THROWS_AS(train::split_into_clips(4, 0), std::invalid_argument);
}

TEST_CASE("flip augmentation moves frames, ELA and masks together") {
  std::mt19937_64 rng(3);
  const auto video = synth_videos(1, 3)[0];
  int flips = 0;
  for (int k = 0; k < 400; ++k) {
    train::Clip clip;
    clip.frames = video.frames;
    clip.masks = video.masks;
    for (const auto& f : video.frames) clip.ela.push_back(media::compute_ela(f));
    const train::Clip before = clip;
    const bool flipped = train::augment_clip(clip, rng);
    flips += flipped;
    if (k > 3) continue;
    for (std::size_t t = 0; t < 3; ++t) {
      const auto expect_f = flipped ? media::flip_horizontal(before.frames[t]) : before.frames[t];
      const auto expect_m = flipped ? media::flip_horizontal(before.masks[t]) : before.masks[t];
      CHECK(clip.frames[t] == expect_f);
      CHECK(clip.masks[t] == expect_m);
      CHECK(clip.ela[t].pixels == (flipped ? media::flip_horizontal(before.ela[t].pixels)
                                           : before.ela[t].pixels));
    }
  }
  CHECK(flips > 160);
  CHECK(flips < 240);
}

TEST_CASE("Adam follows the reference update") {
  nn::ParamStore store;
  nn::Var w = store.add("w", nn::ParamGroup::kEncoder, nn::Tensor({1, 1, 1, 2}, std::vector<double>{1.0, -2.0}));
  train::Adam::Options o;
  o.lr = 0.1;
  o.weight_decay = 0.01;
  train::Adam adam(store, nn::ParamGroup::kEncoder, o);
  double ref[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 5; ++t) {
    // Gradient of sum(w^2 / 2) is w.
    nn::Var(w).zero_grad();
    nn::backward(nn::scale(nn::sum_all(nn::mul(w, w)), 0.5));
    adam.step();
    for (int i = 0; i < 2; ++i) {
      const double g = ref[i] + 0.01 * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(w.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
  CHECK(adam.steps() == 5);
}

TEST_CASE("optimizers alternate between encoder and decoder groups") {
  model::VidNet net(tiny_model_config(32, 32));
  train::Trainer trainer(net, quick_config());
  trainer.set_dataset(synth_videos(2, 6));
  std::vector<train::Clip> batch{trainer.make_clip({0, 0}), trainer.make_clip({1, 3})};

  auto enc0 = snapshot(net.params(), nn::ParamGroup::kEncoder);
  auto dec0 = snapshot(net.params(), nn::ParamGroup::kDecoder);
  auto r0 = trainer.train_step(batch);
  CHECK(r0.optimizer == nn::ParamGroup::kEncoder);
  CHECK(r0.lr == 1e-4);
  CHECK(max_diff(enc0, snapshot(net.params(), nn::ParamGroup::kEncoder)) > 0.0);
  CHECK(max_diff(dec0, snapshot(net.params(), nn::ParamGroup::kDecoder)) == 0.0);

  enc0 = snapshot(net.params(), nn::ParamGroup::kEncoder);
  dec0 = snapshot(net.params(), nn::ParamGroup::kDecoder);
  auto r1 = trainer.train_step(batch);
  CHECK(r1.optimizer == nn::ParamGroup::kDecoder);
  CHECK(r1.lr == 1e-3);
  CHECK(max_diff(enc0, snapshot(net.params(), nn::ParamGroup::kEncoder)) == 0.0);
  CHECK(max_diff(dec0, snapshot(net.params(), nn::ParamGroup::kDecoder)) > 0.0);

  trainer.train_step(batch);
  trainer.train_step(batch);
  CHECK(trainer.global_step() == 4);
  CHECK(trainer.encoder_updates() == 2);
  CHECK(trainer.decoder_updates() == 2);
}

TEST_CASE("training is reproducible from the seed") {
  const auto videos = synth_videos(2, 6);
  std::vector<double> losses[2];
  for (auto& l : losses) {
    model::VidNet net(tiny_model_config(32, 32));
    train::Trainer trainer(net, quick_config());
    trainer.set_dataset(videos);
    for (const auto& rec : trainer.fit()) l.push_back(rec.mean_loss);
  }
  REQUIRE(losses[0].size() == 2);
  CHECK(losses[0] == losses[1]);
}

TEST_CASE("frame-by-frame training uses single-frame clips") {
  model::VidNet net(tiny_model_config(32, 32));
  auto cfg = quick_config();
  cfg.frame_by_frame = true;
  train::Trainer trainer(net, cfg);
  trainer.set_dataset(synth_videos(1, 6));
  CHECK(trainer.make_clip({0, 4}).frames.size() == 1);
  trainer.train_epoch();
  // Six clips in batches of two.
  CHECK(trainer.global_step() == 3);
}

TEST_CASE("noise augmentation is counted") {
  const auto videos = synth_videos(1, 6);
  for (bool on : {false, true}) {
    model::VidNet net(tiny_model_config(32, 32));
    auto cfg = quick_config();
    cfg.noise_augment = on;
    cfg.noise_probability = 1.0;
    train::Trainer trainer(net, cfg);
    trainer.set_dataset(videos);
    trainer.train_epoch();
    CHECK(trainer.noise_applications() == (on ? 2 : 0));
  }
}

TEST_CASE("RGB-only training never touches ELA parameters") {
  auto mc = tiny_model_config(32, 32);
  mc.encoder.use_ela_stream = false;
  model::VidNet net(mc);
  for (const auto& p : net.params().parameters()) CHECK(p.name.find(".ela.") == std::string::npos);
  train::Trainer trainer(net, quick_config());
  trainer.set_dataset(synth_videos(1, 6));
  CHECK(std::isfinite(trainer.train_epoch().mean_loss));
}

TEST_CASE("diverging parameters raise") {
  model::VidNet net(tiny_model_config(32, 32));
  for (auto& p : net.params().parameters())
    if (p.name == "decoder.head.bias") p.var.mutable_value().fill(std::nan(""));
  train::Trainer trainer(net, quick_config());
  trainer.set_dataset(synth_videos(1, 3));
  CHECK_THROWS_AS(trainer.train_epoch(), train::TrainingDivergedError);
}

TEST_CASE("configuration errors name the field") {
  auto cfg = quick_config();
  cfg.clip_len = 0;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("clip_len"), std::invalid_argument);
  cfg = quick_config();
  cfg.noise_probability = 1.5;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("noise_probability"),
                       std::invalid_argument);
}

TEST_CASE("checkpoints restore weights, optimizer state and counters") {
  vidnet::testing::TempDir dir("ckpt");
  const auto videos = synth_videos(2, 6);
  const auto base = dir.path() / "ck";

  model::VidNet straight(tiny_model_config(32, 32));
  train::Trainer a(straight, quick_config());
  a.set_dataset(videos);
  a.train_epoch();
  a.save_checkpoint(base, R"({"note": 1})");
  const double second = a.train_epoch().mean_loss;

  // A fresh model loaded from disk must continue identically.
  auto loaded = train::load_model(base);
  train::Trainer b(*loaded, quick_config());
  b.set_dataset(videos);
  b.load_checkpoint(base);
  CHECK(b.epoch() == 1);
  // Four clips in batches of two.
  CHECK(b.global_step() == 2);
  CHECK(b.encoder_updates() == 1);
  CHECK(b.decoder_updates() == 1);
  CHECK(b.train_epoch().mean_loss == doctest::Approx(second).epsilon(1e-9));
  CHECK(max_diff(snapshot(straight.params(), nn::ParamGroup::kDecoder),
                 snapshot(loaded->params(), nn::ParamGroup::kDecoder)) < 1e-6);

  const auto meta = train::read_sidecar(base);
  CHECK(meta.at("run_config").at("note") == 1);
  CHECK(meta.at("global_step") == 2);
}

TEST_CASE("saved models predict identically after loading") {
  vidnet::testing::TempDir dir("model");
  auto mc = tiny_model_config(32, 32);
  mc.encoder.norm_kind = nn::NormKind::kBatch;
  model::VidNet net(mc);
  train::Trainer trainer(net, quick_config());
  const auto videos = synth_videos(1, 3);
  trainer.set_dataset(videos);
  trainer.train_epoch();
  train::save_model(net, dir.path() / "m");
  auto loaded = train::load_model(dir.path() / "m");
  model::VidNetDetector da(net), db(*loaded);
  const auto pa = da.predict_video(videos[0]);
  const auto pb = db.predict_video(videos[0]);
  for (std::size_t t = 0; t < pa.size(); ++t)
    for (std::size_t i = 0; i < pa[t].size(); ++i) REQUIRE(std::abs(pa[t][i] - pb[t][i]) < 1e-6);

  // Truncated archives are rejected.
  const auto bin = train::archive_path(dir.path() / "m");
  std::filesystem::resize_file(bin, std::filesystem::file_size(bin) / 2);
  CHECK_THROWS(train::load_model(dir.path() / "m"));
  CHECK_THROWS(train::load_model(dir.path() / "absent"));
}

TEST_CASE("perturbation names parse and round-trip") {
  CHECK(Perturbation::parse("none").kind == Perturbation::Kind::kNone);
  const auto j = Perturbation::parse("jpeg70");
  CHECK(j.kind == Perturbation::Kind::kJpeg);
  CHECK(j.value == 70);
  CHECK(j.name() == "jpeg70");
  const auto s = Perturbation::parse("snr20");
  CHECK(s.kind == Perturbation::Kind::kNoise);
  CHECK(s.value == 20);
  CHECK(Perturbation::parse(s.name()).value == 20);
  CHECK_THROWS_AS(Perturbation::parse("jpeg0"), std::invalid_argument);
  CHECK_THROWS_AS(Perturbation::parse("blur3"), std::invalid_argument);
  CHECK_THROWS_AS(Perturbation::parse("snrx"), std::invalid_argument);
}

TEST_CASE("perturbations alter frames but not masks") {
  const auto v = synth_videos(1, 3)[0];
  for (const char* name : {"jpeg70", "snr20"}) {
    INFO(name);
    const auto p = Perturbation::parse(name);
    const auto a = train::apply_perturbation(v, p, 4);
    CHECK(a.masks == v.masks);
    CHECK(a.frames != v.frames);
    CHECK(train::apply_perturbation(v, p, 4).frames == a.frames);
  }
  CHECK(train::apply_perturbation(v, Perturbation::parse("none"), 4).frames == v.frames);
}

TEST_CASE("ground-truth echo survives every perturbation") {
  model::GroundTruthEcho echo;
  const auto videos = synth_videos(2, 3);
  std::vector<Perturbation> kinds;
  for (const char* k : {"jpeg90", "jpeg70", "snr30", "snr20"}) kinds.push_back(Perturbation::parse(k));
  const auto results = train::run_perturbation_suite(echo, videos, kinds, synth_videos(2, 3, true));
  REQUIRE(results.size() == 4);
  for (const auto& r : results) {
    CHECK(r.report.mean_iou == 1.0);
    CHECK(*r.report.auc == 1.0);
  }
}

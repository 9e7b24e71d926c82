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


#include "vidnet/vidnet.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "config/run_config.hpp"
#include "media/media.hpp"
#include "metrics/metrics.hpp"
#include "model/vidnet.hpp"
#include "synth/synthdata.hpp"
#include "train/checkpoint.hpp"
#include "train/dataset.hpp"
#include "train/trainer.hpp"

struct vidnet_model {
  std::unique_ptr<vidnet::model::VidNet> net;  // null for the ground-truth echo
};

namespace {

namespace fs = std::filesystem;
using vidnet::config::Json;

thread_local std::string g_last_error;

vidnet_status fail(vidnet_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs fn, translating exceptions into status codes.
template <typename F>
vidnet_status guarded(F&& fn) {
  g_last_error.clear();
  try {
    fn();
    return VIDNET_OK;
  } catch (const vidnet::config::ConfigError& e) {
    return fail(VIDNET_ERR_CONFIG, e.what());
  } catch (const vidnet::metrics::UndefinedMetricError& e) {
    return fail(VIDNET_ERR_UNDEFINED_METRIC, e.what());
  } catch (const vidnet::train::TrainingDivergedError& e) {
    return fail(VIDNET_ERR_DIVERGED, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(VIDNET_ERR_ARGUMENT, e.what());
  } catch (const vidnet::media::IoError& e) {
    return fail(VIDNET_ERR_IO, e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(VIDNET_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(VIDNET_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(VIDNET_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

vidnet::config::RunConfig parse_config(const char* config_json) {
  return vidnet::config::parse_run_config(config_json ? config_json : "{}");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fs::path output_dir(const char* out_dir) {
  require(out_dir && *out_dir, "output directory must be given");
  const fs::path dir = vidnet::config::resolve_output(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw vidnet::media::IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text << "\n";
  if (!out) throw vidnet::media::IoError("cannot write " + path.string());
}

std::unique_ptr<vidnet::model::Detector> make_detector(
    const vidnet_model* model, const vidnet::config::RunConfig& cfg) {
  if (!model->net) return std::make_unique<vidnet::model::GroundTruthEcho>();
  vidnet::model::InferenceOptions opts;
  opts.carry_state = cfg.eval.carry_state;
  opts.clip_len = cfg.train.effective_clip_len();
  return std::make_unique<vidnet::model::VidNetDetector>(*model->net, opts);
}

// The resolved config records the model actually used.
Json resolved_for(const vidnet_model* model, const vidnet::config::RunConfig& cfg) {
  Json j = vidnet::config::to_json(cfg);
  if (model->net) j["model"] = vidnet::config::to_json(model->net->config());
  else j["model"] = "ground-truth-echo";
  return j;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

}  // namespace

extern "C" {

const char* vidnet_version(void) { return "1.0.0"; }

const char* vidnet_last_error(void) { return g_last_error.c_str(); }

const char* vidnet_status_name(vidnet_status status) {
  switch (status) {
    case VIDNET_OK: return "ok";
    case VIDNET_ERR_ARGUMENT: return "invalid argument";
    case VIDNET_ERR_CONFIG: return "invalid configuration";
    case VIDNET_ERR_IO: return "i/o error";
    case VIDNET_ERR_UNDEFINED_METRIC: return "undefined metric";
    case VIDNET_ERR_DIVERGED: return "training diverged";
    case VIDNET_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void vidnet_string_free(char* s) { std::free(s); }

vidnet_status vidnet_synth(const char* config_json, const char* out_dir) {
  return guarded([&] {
    const auto cfg = parse_config(config_json);
    const fs::path dir = output_dir(out_dir);
    vidnet::synth::write_dataset(cfg.synth, dir);
    vidnet::config::write_resolved_config(vidnet::config::to_json(cfg), dir);
  });
}

vidnet_status vidnet_ela_video(const char* video_dir, const char* out_dir, int quality,
                               int* frames_written) {
  return guarded([&] {
    require(video_dir != nullptr, "video directory must be given");
    require(quality >= 1 && quality <= 100,
            "ELA quality must be in [1, 100], got " + std::to_string(quality));
    const auto video = vidnet::media::read_video_dir(video_dir, false);
    const fs::path dir = output_dir(out_dir);
    for (std::size_t t = 0; t < video.frames.size(); ++t)
      vidnet::media::write_png(dir / vidnet::media::frame_filename(t),
                               vidnet::media::compute_ela(video.frames[t], quality).pixels);
    Json resolved{{"command", "ela"}, {"video_dir", video_dir}, {"quality", quality}};
    vidnet::config::write_resolved_config(resolved, dir);
    if (frames_written) *frames_written = static_cast<int>(video.frames.size());
  });
}

vidnet_status vidnet_model_create(const char* config_json, vidnet_model** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    const auto cfg = parse_config(config_json);
    auto m = std::make_unique<vidnet_model>();
    m->net = std::make_unique<vidnet::model::VidNet>(cfg.model);
    *out = m.release();
  });
}

vidnet_status vidnet_model_create_gt_echo(vidnet_model** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    *out = new vidnet_model();
  });
}

vidnet_status vidnet_model_load(const char* checkpoint, vidnet_model** out) {
  return guarded([&] {
    require(out != nullptr && checkpoint != nullptr, "arguments must not be NULL");
    auto m = std::make_unique<vidnet_model>();
    m->net = vidnet::train::load_model(checkpoint);
    *out = m.release();
  });
}

vidnet_status vidnet_model_save(const vidnet_model* model, const char* checkpoint) {
  return guarded([&] {
    require(model != nullptr && checkpoint != nullptr, "arguments must not be NULL");
    require(model->net != nullptr, "the ground-truth echo has no weights to save");
    vidnet::train::save_model(*model->net, vidnet::config::resolve_output(checkpoint));
  });
}

vidnet_status vidnet_model_param_count(const vidnet_model* model, size_t* count) {
  return guarded([&] {
    require(model != nullptr && count != nullptr, "arguments must not be NULL");
    std::size_t total = 0;
    if (model->net)
      for (const auto& p : model->net->params().parameters()) total += p.var.value().size();
    *count = total;
  });
}

void vidnet_model_free(vidnet_model* model) { delete model; }

vidnet_status vidnet_train(const char* config_json, const char* data_dir,
                           const char* out_dir, const char* resume,
                           char** summary_json) {
  return guarded([&] {
    require(data_dir != nullptr, "data directory must be given");
    const auto cfg = parse_config(config_json);
    const fs::path dir = output_dir(out_dir);
    const Json resolved = vidnet::config::to_json(cfg);
    vidnet::config::write_resolved_config(resolved, dir);
    auto data = vidnet::train::load_dataset(data_dir);

    vidnet::model::VidNet net(cfg.model);
    vidnet::train::Trainer trainer(net, cfg.train);
    trainer.set_dataset(std::move(data.videos));
    if (resume && *resume) trainer.load_checkpoint(resume);
    trainer.set_log(dir / "train_log.jsonl");
    const std::string config_text = resolved.dump();
    trainer.fit([&](const vidnet::train::EpochRecord& rec) {
      const int every = cfg.train.checkpoint_every;
      if (every > 0 && (rec.epoch + 1) % every == 0) {
        fs::create_directories(dir / "checkpoints");
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04d", rec.epoch + 1);
        trainer.save_checkpoint(dir / "checkpoints" / name, config_text);
      }
      return true;
    });
    trainer.save_checkpoint(dir / "checkpoint", config_text);

    Json summary;
    summary["epochs"] = trainer.epoch();
    summary["global_step"] = trainer.global_step();
    summary["encoder_updates"] = trainer.encoder_updates();
    summary["decoder_updates"] = trainer.decoder_updates();
    summary["checkpoint"] = (dir / "checkpoint").string();
    summary["history"] = Json::array();
    for (const auto& r : trainer.history()) {
      Json h{{"epoch", r.epoch}, {"mean_loss", r.mean_loss}, {"seconds", r.seconds}};
      h["train_iou"] = r.train_iou ? Json(*r.train_iou) : Json(nullptr);
      summary["history"].push_back(h);
    }
    write_text(dir / "train_summary.json", summary.dump(2));
    if (summary_json) *summary_json = copy_string(summary.dump(2));
  });
}

vidnet_status vidnet_evaluate(vidnet_model* model, const char* config_json,
                              const char* data_dir, const char* out_dir,
                              char** report_json) {
  return guarded([&] {
    require(model != nullptr && data_dir != nullptr, "arguments must not be NULL");
    const auto cfg = parse_config(config_json);
    const auto data = vidnet::train::load_dataset(data_dir);
    auto detector = make_detector(model, cfg);
    vidnet::metrics::EvalOptions opts;
    opts.threshold = cfg.eval.threshold;
    const auto report =
        vidnet::metrics::evaluate_dataset(*detector, data.videos, data.negatives, opts);
    if (out_dir) {
      const fs::path dir = output_dir(out_dir);
      vidnet::config::write_resolved_config(resolved_for(model, cfg), dir);
      write_text(dir / "metrics.json", report.to_json());
    }
    if (report_json) *report_json = copy_string(report.to_json());
  });
}

vidnet_status vidnet_perturb(vidnet_model* model, const char* config_json,
                             const char* data_dir, const char* kinds,
                             const char* out_dir, char** reports_json) {
  return guarded([&] {
    require(model != nullptr && data_dir != nullptr, "arguments must not be NULL");
    auto cfg = parse_config(config_json);
    if (kinds) {
      cfg.eval.perturbations.clear();
      std::stringstream ss(kinds);
      for (std::string k; std::getline(ss, k, ',');)
        if (!k.empty()) cfg.eval.perturbations.push_back(k);
    }
    require(!cfg.eval.perturbations.empty(), "no perturbations requested");
    std::vector<vidnet::train::Perturbation> list;
    for (const auto& k : cfg.eval.perturbations)
      list.push_back(vidnet::train::Perturbation::parse(k));
    const auto data = vidnet::train::load_dataset(data_dir);
    auto detector = make_detector(model, cfg);
    vidnet::metrics::EvalOptions opts;
    opts.threshold = cfg.eval.threshold;
    const auto results = vidnet::train::run_perturbation_suite(
        *detector, data.videos, list, data.negatives, opts, cfg.eval.perturbation_seed);
    Json all = Json::object();
    for (const auto& r : results) all[r.perturbation.name()] = Json::parse(r.report.to_json());
    if (out_dir) {
      const fs::path dir = output_dir(out_dir);
      vidnet::config::write_resolved_config(resolved_for(model, cfg), dir);
      for (const auto& r : results)
        write_text(dir / ("perturb_" + r.perturbation.name() + ".json"), r.report.to_json());
    }
    if (reports_json) *reports_json = copy_string(all.dump(2));
  });
}

vidnet_status vidnet_predict(vidnet_model* model, const char* config_json,
                             const char* video_dir, const char* out_dir,
                             int* frames_written) {
  return guarded([&] {
    require(model != nullptr && video_dir != nullptr, "arguments must not be NULL");
    const auto cfg = parse_config(config_json);
    const auto video = vidnet::media::read_video_dir(video_dir, !model->net);
    auto detector = make_detector(model, cfg);
    const auto probs = detector->predict_video(video);
    const fs::path dir = output_dir(out_dir);
    fs::create_directories(dir / "prob");
    fs::create_directories(dir / "overlay");
    for (std::size_t t = 0; t < probs.size(); ++t) {
      const vidnet::nn::Tensor& p = probs[t];
      const vidnet::media::Frame& f = video.frames[t];
      std::vector<std::uint8_t> gray(p.size());
      std::vector<std::uint8_t> rgb = f.pixels();
      for (std::size_t i = 0; i < p.size(); ++i) {
        gray[i] = to_byte(p[i] * 255.0);
        // Red tint proportional to the probability.
        const double a = 0.6 * p[i];
        rgb[3 * i + 0] = to_byte((1 - a) * rgb[3 * i + 0] + a * 255.0);
        rgb[3 * i + 1] = to_byte((1 - a) * rgb[3 * i + 1]);
        rgb[3 * i + 2] = to_byte((1 - a) * rgb[3 * i + 2]);
      }
      const std::string name = vidnet::media::frame_filename(t);
      vidnet::media::write_gray_png(dir / "prob" / name, p.h(), p.w(), gray);
      vidnet::media::write_png(dir / "overlay" / name,
                               vidnet::media::Frame(f.height(), f.width(), std::move(rgb)));
    }
    vidnet::config::write_resolved_config(resolved_for(model, cfg), dir);
    if (frames_written) *frames_written = static_cast<int>(probs.size());
  });
}

}  // extern "C"

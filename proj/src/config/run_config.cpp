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


#include "config/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace vidnet::config {
namespace {

// Reads keys from one JSON object and remembers which ones were used.
class Section {
 public:
  Section(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object())
      throw ConfigError((where_.empty() ? "config" : where_) + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    auto it = j_.find(key);
    if (it == j_.end()) return;
    seen_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path(key) + ": wrong type (" + it->dump() + ")");
    }
  }

  // Enumerations written as strings.
  template <typename E>
  void read_enum(const char* key, E& out,
                 std::initializer_list<std::pair<const char*, E>> names) {
    std::string text;
    auto it = j_.find(key);
    if (it == j_.end()) return;
    read(key, text);
    for (const auto& [name, value] : names)
      if (text == name) {
        out = value;
        return;
      }
    std::string options;
    for (const auto& [name, value] : names) options += std::string(" ") + name;
    throw ConfigError(path(key) + ": unknown value '" + text + "', expected one of" +
                      options);
  }

  const Json* child(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + path(key) + "'");
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

// Re-raises validation failures with the section prefix.
template <typename F>
void checked(const std::string& where, F&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

const char* region_name(synth::RegionKind k) {
  return k == synth::RegionKind::kBlob ? "blob" : "rectangle";
}
const char* norm_name(nn::NormKind k) {
  return k == nn::NormKind::kBatch ? "batch" : "instance";
}
const char* axis_name(nn::L2Axis a) {
  return a == nn::L2Axis::kSpatialPerChannel ? "per_channel" : "per_location";
}
const char* input_norm_name(media::InputNormalization n) {
  return n == media::InputNormalization::kImageNet ? "imagenet" : "unit";
}

}  // namespace

void EvalConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw std::invalid_argument("eval.threshold must be in [0, 1]");
  for (const auto& p : perturbations) train::Perturbation::parse(p);
}

void RunConfig::validate() const {
  checked("synth", [&] { synth.validate(); });
  checked("model", [&] { model.validate(); });
  checked("train", [&] { train.validate(); });
  checked("eval", [&] { eval.validate(); });
}

Json to_json(const synth::SynthConfig& c) {
  Json j;
  j["num_videos"] = c.num_videos;
  j["frames_per_video"] = c.frames_per_video;
  j["height"] = c.height;
  j["width"] = c.width;
  j["region_kind"] = region_name(c.region_kind);
  j["area_fraction_range"] = {c.area_lo, c.area_hi};
  j["motion_amplitude"] = c.motion_amplitude;
  j["fill_jpeg_quality"] = c.fill_jpeg_quality;
  j["background_jpeg_quality"] = c.background_jpeg_quality;
  j["seed"] = c.seed;
  j["include_pristine"] = c.include_pristine;
  return j;
}

Json to_json(const model::ModelConfig& c) {
  Json j;
  j["stage_channels"] = c.encoder.stage_channels;
  j["convs_per_stage"] = c.encoder.convs_per_stage;
  j["norm"] = norm_name(c.encoder.norm_kind);
  j["dropout_rate"] = c.encoder.dropout_rate;
  j["use_rgb"] = c.encoder.use_rgb_stream;
  j["use_ela"] = c.encoder.use_ela_stream;
  j["l2_axis"] = axis_name(c.encoder.l2_axis);
  j["fusion_kernel"] = c.encoder.fusion_kernel;
  j["use_qdla"] = c.qdla.enabled;
  j["qdla_sequential"] = c.qdla.sequential;
  j["qdla_recursive"] = c.qdla.recursive;
  j["qdla_all_layers"] = c.qdla.all_layers;
  j["qdla_both_features"] = c.qdla.both_features;
  j["hidden_channels"] = c.decoder.hidden_channels;
  j["head_kernel"] = c.decoder.head_kernel;
  j["input_height"] = c.input_height;
  j["input_width"] = c.input_width;
  j["ela_quality"] = c.ela_quality;
  j["input_norm"] = input_norm_name(c.input_norm);
  j["seed"] = c.seed;
  return j;
}

Json to_json(const train::TrainConfig& c) {
  Json j;
  j["clip_len"] = c.clip_len;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["lr_encoder"] = c.lr_encoder;
  j["lr_decoder"] = c.lr_decoder;
  j["weight_decay"] = c.weight_decay;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  j["seed"] = c.seed;
  j["frame_by_frame"] = c.frame_by_frame;
  j["flip_augment"] = c.flip_augment;
  j["noise_augment"] = c.noise_augment;
  j["noise_snr_db"] = c.noise_snr_db;
  j["noise_probability"] = c.noise_probability;
  j["target_train_iou"] = c.target_train_iou;
  j["eval_every"] = c.eval_every;
  j["checkpoint_every"] = c.checkpoint_every;
  return j;
}

Json to_json(const EvalConfig& c) {
  Json j;
  j["threshold"] = c.threshold;
  j["carry_state"] = c.carry_state;
  j["perturbations"] = c.perturbations;
  j["perturbation_seed"] = c.perturbation_seed;
  return j;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["synth"] = to_json(c.synth);
  j["model"] = to_json(c.model);
  j["train"] = to_json(c.train);
  j["eval"] = to_json(c.eval);
  return j;
}

synth::SynthConfig synth_from_json(const Json& j, const std::string& where,
                                   synth::SynthConfig c) {
  Section s(j, where);
  s.read("num_videos", c.num_videos);
  s.read("frames_per_video", c.frames_per_video);
  s.read("height", c.height);
  s.read("width", c.width);
  s.read_enum("region_kind", c.region_kind,
              {{"rectangle", synth::RegionKind::kRectangle},
               {"blob", synth::RegionKind::kBlob}});
  if (const Json* r = s.child("area_fraction_range")) {
    if (!r->is_array() || r->size() != 2 || !(*r)[0].is_number() ||
        !(*r)[1].is_number())
      throw ConfigError(s.path("area_fraction_range") + ": expected [lo, hi]");
    c.area_lo = (*r)[0].get<double>();
    c.area_hi = (*r)[1].get<double>();
  }
  s.read("motion_amplitude", c.motion_amplitude);
  s.read("fill_jpeg_quality", c.fill_jpeg_quality);
  s.read("background_jpeg_quality", c.background_jpeg_quality);
  s.read("seed", c.seed);
  s.read("include_pristine", c.include_pristine);
  s.finish();
  return c;
}

model::ModelConfig model_from_json(const Json& j, const std::string& where,
                                   model::ModelConfig c) {
  Section s(j, where);
  s.read("stage_channels", c.encoder.stage_channels);
  s.read("convs_per_stage", c.encoder.convs_per_stage);
  s.read_enum("norm", c.encoder.norm_kind,
              {{"instance", nn::NormKind::kInstance}, {"batch", nn::NormKind::kBatch}});
  s.read("dropout_rate", c.encoder.dropout_rate);
  s.read("use_rgb", c.encoder.use_rgb_stream);
  s.read("use_ela", c.encoder.use_ela_stream);
  s.read_enum("l2_axis", c.encoder.l2_axis,
              {{"per_location", nn::L2Axis::kChannelsPerLocation},
               {"per_channel", nn::L2Axis::kSpatialPerChannel}});
  s.read("fusion_kernel", c.encoder.fusion_kernel);
  s.read("use_qdla", c.qdla.enabled);
  s.read("qdla_sequential", c.qdla.sequential);
  s.read("qdla_recursive", c.qdla.recursive);
  s.read("qdla_all_layers", c.qdla.all_layers);
  s.read("qdla_both_features", c.qdla.both_features);
  s.read("hidden_channels", c.decoder.hidden_channels);
  s.read("head_kernel", c.decoder.head_kernel);
  s.read("input_height", c.input_height);
  s.read("input_width", c.input_width);
  s.read("ela_quality", c.ela_quality);
  s.read_enum("input_norm", c.input_norm,
              {{"unit", media::InputNormalization::kUnit},
               {"imagenet", media::InputNormalization::kImageNet}});
  s.read("seed", c.seed);
  s.finish();
  return c;
}

train::TrainConfig train_from_json(const Json& j, const std::string& where,
                                   train::TrainConfig c) {
  Section s(j, where);
  s.read("clip_len", c.clip_len);
  s.read("batch_size", c.batch_size);
  s.read("epochs", c.epochs);
  s.read("lr_encoder", c.lr_encoder);
  s.read("lr_decoder", c.lr_decoder);
  s.read("weight_decay", c.weight_decay);
  s.read("adam_beta1", c.adam_beta1);
  s.read("adam_beta2", c.adam_beta2);
  s.read("adam_eps", c.adam_eps);
  s.read("seed", c.seed);
  s.read("frame_by_frame", c.frame_by_frame);
  s.read("flip_augment", c.flip_augment);
  s.read("noise_augment", c.noise_augment);
  s.read("noise_snr_db", c.noise_snr_db);
  s.read("noise_probability", c.noise_probability);
  s.read("target_train_iou", c.target_train_iou);
  s.read("eval_every", c.eval_every);
  s.read("checkpoint_every", c.checkpoint_every);
  s.finish();
  return c;
}

EvalConfig eval_from_json(const Json& j, const std::string& where, EvalConfig c) {
  Section s(j, where);
  s.read("threshold", c.threshold);
  s.read("carry_state", c.carry_state);
  s.read("perturbations", c.perturbations);
  s.read("perturbation_seed", c.perturbation_seed);
  s.finish();
  return c;
}

RunConfig parse_run_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section root(j, "");
  RunConfig c;
  if (const Json* s = root.child("synth")) c.synth = synth_from_json(*s, "synth");
  if (const Json* s = root.child("model")) c.model = model_from_json(*s, "model");
  if (const Json* s = root.child("train")) c.train = train_from_json(*s, "train");
  if (const Json* s = root.child("eval")) c.eval = eval_from_json(*s, "eval");
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::filesystem::path resolve_output(const std::filesystem::path& out) {
  const char* root = std::getenv(kOutputRootEnv);
  if (root && *root && out.is_relative()) return std::filesystem::path(root) / out;
  return out;
}

void write_resolved_config(const Json& resolved, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = dir / kResolvedConfigName;
  std::ofstream out(path);
  out << resolved.dump(2) << "\n";
  if (!out) throw media::IoError("cannot write " + path.string());
}

}  // namespace vidnet::config

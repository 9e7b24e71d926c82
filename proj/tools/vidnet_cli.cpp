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


// vidnet command-line tool. Everything goes through the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vidnet/vidnet.h"

namespace {

using Json = nlohmann::ordered_json;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // section.key=value
};

struct ModelSource {
  std::string checkpoint;
  std::string stub;
};

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(vidnet_status status) {
  if (status != VIDNET_OK)
    throw Failure(std::string(vidnet_status_name(status)) + ": " + vidnet_last_error());
}

// Config file contents with --set overrides applied. Values are parsed as
// JSON and fall back to plain strings.
std::string build_config(const CommonOptions& opts) {
  Json j = Json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw Failure("cannot read config file " + opts.config_path);
    try {
      j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Failure("config file " + opts.config_path + " is not valid JSON: " + e.what());
    }
  }
  for (const std::string& o : opts.overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw Failure("--set expects section.key=value, got '" + o + "'");
    const std::string section = o.substr(0, dot);
    const std::string key = o.substr(dot + 1, eq - dot - 1);
    const std::string text = o.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    j[section][key] = value;
  }
  return j.dump();
}

struct ModelHandle {
  vidnet_model* ptr = nullptr;
  ~ModelHandle() { vidnet_model_free(ptr); }
};

void open_model(const ModelSource& src, ModelHandle& m) {
  if (!src.stub.empty()) {
    if (src.stub != "gt-echo") throw Failure("unknown stub '" + src.stub + "'");
    check(vidnet_model_create_gt_echo(&m.ptr));
  } else if (!src.checkpoint.empty()) {
    check(vidnet_model_load(src.checkpoint.c_str(), &m.ptr));
  } else {
    throw Failure("either --checkpoint or --stub is required");
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  vidnet_string_free(s);
  return out;
}

void print_warnings(const Json& report) {
  if (report.contains("warnings"))
    for (const auto& w : report["warnings"])
      std::cerr << "vidnet: warning: " << w.get<std::string>() << "\n";
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "JSON run configuration")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides,
                  "Override a config value, e.g. --set train.epochs=5");
}

void add_model(CLI::App* cmd, ModelSource& src) {
  auto* ck = cmd->add_option("--checkpoint", src.checkpoint,
                             "Checkpoint path without the .bin/.json suffix");
  auto* st = cmd->add_option("--stub", src.stub, "Use a stub detector (gt-echo)");
  ck->excludes(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VIDNet video inpainting detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vidnet_version());

  CommonOptions common;
  ModelSource source;
  std::string out_dir, data_dir, video_dir, resume, kinds;
  int quality = 50;

  auto* synth = app.add_subcommand("synth", "Generate the synthetic dataset");
  add_common(synth, common);
  synth->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* ela = app.add_subcommand("ela", "Write ELA images for a video directory");
  ela->add_option("video", video_dir, "Video directory")->required();
  ela->add_option("-o,--out", out_dir, "Output directory")->required();
  ela->add_option("-q,--quality", quality, "JPEG quality for recompression");

  auto* train = app.add_subcommand("train", "Train a model");
  add_common(train, common);
  train->add_option("-d,--data", data_dir, "Dataset directory")->required();
  train->add_option("-o,--out", out_dir, "Output directory")->required();
  train->add_option("--resume", resume, "Checkpoint to resume from");

  auto* eval = app.add_subcommand("eval", "Evaluate a model and write metrics.json");
  add_common(eval, common);
  add_model(eval, source);
  eval->add_option("-d,--data", data_dir, "Dataset directory")->required();
  eval->add_option("-o,--out", out_dir, "Output directory")->required();

  auto* perturb = app.add_subcommand("perturb", "Evaluate under JPEG and noise perturbations");
  add_common(perturb, common);
  add_model(perturb, source);
  perturb->add_option("-d,--data", data_dir, "Dataset directory")->required();
  perturb->add_option("-o,--out", out_dir, "Output directory")->required();
  perturb->add_option("-k,--kinds", kinds, "Comma-separated list, e.g. jpeg90,snr20");

  auto* predict = app.add_subcommand("predict", "Write probability and overlay PNGs");
  add_common(predict, common);
  add_model(predict, source);
  predict->add_option("video", video_dir, "Video directory")->required();
  predict->add_option("-o,--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      check(vidnet_synth(build_config(common).c_str(), out_dir.c_str()));
      std::cout << "wrote dataset to " << out_dir << "\n";
    } else if (ela->parsed()) {
      int n = 0;
      check(vidnet_ela_video(video_dir.c_str(), out_dir.c_str(), quality, &n));
      std::cout << "wrote " << n << " ELA frames to " << out_dir << "\n";
    } else if (train->parsed()) {
      char* summary = nullptr;
      check(vidnet_train(build_config(common).c_str(), data_dir.c_str(), out_dir.c_str(),
                         resume.empty() ? nullptr : resume.c_str(), &summary));
      const Json s = Json::parse(take(summary));
      std::cout << "trained " << s["epochs"] << " epochs, checkpoint "
                << s["checkpoint"].get<std::string>() << "\n";
    } else if (eval->parsed()) {
      ModelHandle m;
      open_model(source, m);
      char* report = nullptr;
      check(vidnet_evaluate(m.ptr, build_config(common).c_str(), data_dir.c_str(),
                            out_dir.c_str(), &report));
      const Json r = Json::parse(take(report));
      print_warnings(r);
      std::cout << "mean_iou " << r["mean_iou"] << " f1 " << r["f1"] << " auc "
                << r["auc"] << "\n";
    } else if (perturb->parsed()) {
      ModelHandle m;
      open_model(source, m);
      char* reports = nullptr;
      check(vidnet_perturb(m.ptr, build_config(common).c_str(), data_dir.c_str(),
                           kinds.empty() ? nullptr : kinds.c_str(), out_dir.c_str(),
                           &reports));
      const Json all = Json::parse(take(reports));
      for (const auto& [name, r] : all.items()) {
        print_warnings(r);
        std::cout << name << ": mean_iou " << r["mean_iou"] << " f1 " << r["f1"]
                  << " auc " << r["auc"] << "\n";
      }
    } else if (predict->parsed()) {
      ModelHandle m;
      open_model(source, m);
      int n = 0;
      check(vidnet_predict(m.ptr, build_config(common).c_str(), video_dir.c_str(),
                           out_dir.c_str(), &n));
      std::cout << "wrote " << n << " predictions to " << out_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "vidnet: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

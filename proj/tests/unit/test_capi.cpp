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


// Exercises the shared library through its C header only.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <string>

#include "vidnet/vidnet.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path path;
  Scratch() {
    path = fs::temp_directory_path() / ("vidnet_capi_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

const char* kTinyConfig = R"({
  "synth": {"num_videos": 2, "frames_per_video": 3, "height": 32, "width": 48,
            "include_pristine": true},
  "model": {"stage_channels": [2, 3, 4, 4, 4], "convs_per_stage": [1, 1, 1, 1, 1],
            "hidden_channels": [3, 3, 2, 2], "input_height": 32, "input_width": 48},
  "train": {"epochs": 2, "batch_size": 2, "eval_every": 1}
})";

json take(char* s) {
  REQUIRE(s != nullptr);
  json j = json::parse(s);
  vidnet_string_free(s);
  return j;
}

}  // namespace

TEST_CASE("status codes have names and errors are reported") {
  CHECK(std::string(vidnet_version()).size() > 0);
  CHECK(std::string(vidnet_status_name(VIDNET_ERR_CONFIG)) == "invalid configuration");
  vidnet_model* m = nullptr;
  CHECK(vidnet_model_create(R"({"model": {"bogus": 1}})", &m) == VIDNET_ERR_CONFIG);
  CHECK(m == nullptr);
  CHECK(std::string(vidnet_last_error()).find("model.bogus") != std::string::npos);
  CHECK(vidnet_model_create(nullptr, nullptr) == VIDNET_ERR_ARGUMENT);
  CHECK(vidnet_model_load("/nonexistent/ckpt", &m) == VIDNET_ERR_IO);
  vidnet_model_free(nullptr);
}

TEST_CASE("models are created, saved and reloaded") {
  Scratch dir;
  vidnet_model* m = nullptr;
  REQUIRE(vidnet_model_create(kTinyConfig, &m) == VIDNET_OK);
  size_t count = 0;
  REQUIRE(vidnet_model_param_count(m, &count) == VIDNET_OK);
  CHECK(count > 0);
  REQUIRE(vidnet_model_save(m, (dir / "m").c_str()) == VIDNET_OK);
  vidnet_model* back = nullptr;
  REQUIRE(vidnet_model_load((dir / "m").c_str(), &back) == VIDNET_OK);
  size_t count2 = 0;
  vidnet_model_param_count(back, &count2);
  CHECK(count2 == count);
  vidnet_model_free(m);
  vidnet_model_free(back);

  // A stub has no parameters to save.
  vidnet_model* echo = nullptr;
  REQUIRE(vidnet_model_create_gt_echo(&echo) == VIDNET_OK);
  CHECK(vidnet_model_save(echo, (dir / "e").c_str()) == VIDNET_ERR_ARGUMENT);
  vidnet_model_free(echo);
}

TEST_CASE("synth, train, evaluate, perturb and predict end to end") {
  Scratch dir;
  REQUIRE(vidnet_synth(kTinyConfig, (dir / "data").c_str()) == VIDNET_OK);
  CHECK(fs::exists(dir.path / "data" / "manifest.json"));
  CHECK(fs::exists(dir.path / "data" / "resolved_config.json"));

  char* summary = nullptr;
  REQUIRE(vidnet_train(kTinyConfig, (dir / "data").c_str(), (dir / "run").c_str(), nullptr,
                       &summary) == VIDNET_OK);
  const json s = take(summary);
  CHECK(s.at("epochs") == 2);
  CHECK(s.at("history").size() == 2);
  CHECK(s.at("encoder_updates") == 1);
  for (const char* f : {"checkpoint.bin", "checkpoint.json", "train_log.jsonl",
                        "resolved_config.json", "train_summary.json"})
    CHECK(fs::exists(dir.path / "run" / f));
  std::ifstream log(dir.path / "run" / "train_log.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const json j = json::parse(line);
    CHECK(j.at("optimizer") == (j.at("step").get<int>() % 2 ? "decoder" : "encoder"));
    ++lines;
  }
  CHECK(lines == 2);  // two videos of three frames, batch two, two epochs

  vidnet_model* m = nullptr;
  REQUIRE(vidnet_model_load((dir / "run/checkpoint").c_str(), &m) == VIDNET_OK);
  char* report = nullptr;
  REQUIRE(vidnet_evaluate(m, kTinyConfig, (dir / "data").c_str(), (dir / "eval").c_str(),
                          &report) == VIDNET_OK);
  const json r = take(report);
  CHECK(r.at("frames") == 6);
  CHECK(r.at("mean_iou").get<double>() >= 0.0);
  CHECK(fs::exists(dir.path / "eval" / "metrics.json"));

  char* reports = nullptr;
  REQUIRE(vidnet_perturb(m, kTinyConfig, (dir / "data").c_str(), "jpeg70,snr20",
                         (dir / "pert").c_str(), &reports) == VIDNET_OK);
  CHECK(take(reports).size() == 2);
  CHECK(fs::exists(dir.path / "pert" / "perturb_jpeg70.json"));
  CHECK(vidnet_perturb(m, kTinyConfig, (dir / "data").c_str(), "blur", (dir / "pert").c_str(),
                       nullptr) == VIDNET_ERR_ARGUMENT);

  int frames = 0;
  const json manifest = json::parse(std::ifstream(dir.path / "data" / "manifest.json"));
  const std::string first = manifest.at("videos").at(0).at("id");
  REQUIRE(vidnet_predict(m, kTinyConfig, (dir.path / "data" / first).c_str(),
                         (dir / "pred").c_str(), &frames) == VIDNET_OK);
  CHECK(frames == 3);
  CHECK(std::distance(fs::directory_iterator(dir.path / "pred" / "prob"), {}) == 3);
  CHECK(std::distance(fs::directory_iterator(dir.path / "pred" / "overlay"), {}) == 3);

  // Resuming with a larger epoch budget continues from epoch 2.
  json cfg = json::parse(kTinyConfig);
  cfg["train"]["epochs"] = 3;
  REQUIRE(vidnet_train(cfg.dump().c_str(), (dir / "data").c_str(), (dir / "run2").c_str(),
                       (dir / "run/checkpoint").c_str(), &summary) == VIDNET_OK);
  const json resumed = take(summary);
  CHECK(resumed.at("epochs") == 3);
  CHECK(resumed.at("history").size() == 3);
  CHECK(resumed.at("global_step") == 3);
  vidnet_model_free(m);
}

TEST_CASE("the echo stub scores perfectly through the C API") {
  Scratch dir;
  REQUIRE(vidnet_synth(kTinyConfig, (dir / "data").c_str()) == VIDNET_OK);
  vidnet_model* echo = nullptr;
  REQUIRE(vidnet_model_create_gt_echo(&echo) == VIDNET_OK);
  char* report = nullptr;
  REQUIRE(vidnet_evaluate(echo, "{}", (dir / "data").c_str(), nullptr, &report) == VIDNET_OK);
  const json r = take(report);
  CHECK(r.at("mean_iou") == 1.0);
  CHECK(r.at("auc") == 1.0);
  vidnet_model_free(echo);
}

TEST_CASE("ELA of a video directory") {
  Scratch dir;
  REQUIRE(vidnet_synth(kTinyConfig, (dir / "data").c_str()) == VIDNET_OK);
  const json manifest = json::parse(std::ifstream(dir.path / "data" / "manifest.json"));
  const std::string first = manifest.at("videos").at(0).at("id");
  int n = 0;
  REQUIRE(vidnet_ela_video((dir.path / "data" / first).c_str(), (dir / "ela").c_str(), 50, &n) ==
          VIDNET_OK);
  CHECK(n == 3);
  CHECK(vidnet_ela_video((dir.path / "data" / first).c_str(), (dir / "ela").c_str(), 0, &n) ==
        VIDNET_ERR_ARGUMENT);
  CHECK(vidnet_ela_video((dir / "nothing").c_str(), (dir / "ela").c_str(), 50, &n) ==
        VIDNET_ERR_IO);
}

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


// Runs the built `vidnet` executable as a user would.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "media/media.hpp"
#include "support/test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using vidnet::testing::TempDir;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" VIDNET_CLI "' " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

int count_png(const fs::path& dir) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".png";
  return n;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

const char* kTiny =
    " --set model.stage_channels=[2,3,4,4,4] --set model.convs_per_stage=[1,1,1,1,1]"
    " --set model.hidden_channels=[3,3,2,2] --set model.input_height=32"
    " --set model.input_width=48 --set train.epochs=1 --set train.batch_size=2";

const char* kSmallData =
    " --set synth.num_videos=2 --set synth.frames_per_video=3 --set synth.height=32"
    " --set synth.width=48";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("synth writes eight videos and a manifest, reproducibly") {
  TempDir dir("cli_synth");
  REQUIRE(run("synth -o " + q(dir.path() / "a")).code == 0);
  REQUIRE(run("synth -o " + q(dir.path() / "b")).code == 0);
  int videos = 0;
  for (const auto& e : fs::directory_iterator(dir.path() / "a")) videos += e.is_directory();
  CHECK(videos == 8);
  const json manifest = json::parse(slurp(dir.path() / "a" / "manifest.json"));
  CHECK(manifest.at("videos").size() == 8);
  for (const auto& e : fs::recursive_directory_iterator(dir.path() / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir.path() / "a");
    REQUIRE(slurp(e.path()) == slurp(dir.path() / "b" / rel));
  }
}

TEST_CASE("unknown configuration keys fail and are named") {
  TempDir dir("cli_bad");
  const Result r = run("synth -o " + q(dir.path()) + " --set synth.num_vidoes=3");
  CHECK(r.code != 0);
  CHECK(r.output.find("synth.num_vidoes") != std::string::npos);
  std::ofstream(dir.path() / "bad.json") << R"({"model": {"dropout": 0.1}})";
  const Result r2 = run("synth -o " + q(dir.path() / "x") + " -c " + q(dir.path() / "bad.json"));
  CHECK(r2.code != 0);
  CHECK(r2.output.find("model.dropout") != std::string::npos);
  CHECK(run("frobnicate").code != 0);
}

TEST_CASE("ela writes one image per frame") {
  TempDir dir("cli_ela");
  REQUIRE(run("synth -o " + q(dir.path() / "data")).code == 0);
  const json manifest = json::parse(slurp(dir.path() / "data" / "manifest.json"));
  const fs::path video = dir.path() / "data" / manifest["videos"][0]["id"].get<std::string>();
  REQUIRE(run("ela " + q(video) + " -o " + q(dir.path() / "ela")).code == 0);
  CHECK(count_png(dir.path() / "ela") == 6);
  CHECK(fs::exists(dir.path() / "ela" / "resolved_config.json"));
  CHECK(run("ela " + q(video) + " -o " + q(dir.path() / "ela2") + " --quality 101").code != 0);

  // Uniform gray survives JPEG unchanged, so its ELA is black.
  vidnet::media::Video gray;
  gray.id = "gray";
  for (int t = 0; t < 2; ++t) gray.frames.emplace_back(32, 48, 128);
  vidnet::media::write_video_dir(dir.path() / "gray", gray);
  REQUIRE(run("ela " + q(dir.path() / "gray") + " -o " + q(dir.path() / "gray_ela") + " -q 50")
              .code == 0);
  CHECK(count_png(dir.path() / "gray_ela") == 2);
  for (const auto& e : fs::directory_iterator(dir.path() / "gray_ela")) {
    if (e.path().extension() != ".png") continue;
    const auto f = vidnet::media::read_png(e.path());
    for (auto v : f.pixels()) REQUIRE(v == 0);
  }
}

TEST_CASE("stub evaluation and perturbation reports") {
  TempDir dir("cli_eval");
  REQUIRE(run("synth -o " + q(dir.path() / "data") + kSmallData).code == 0);
  const Result e = run("eval --stub gt-echo -d " + q(dir.path() / "data") + " -o " +
                       q(dir.path() / "eval"));
  REQUIRE(e.code == 0);
  const json m = json::parse(slurp(dir.path() / "eval" / "metrics.json"));
  CHECK(m.at("mean_iou") == 1.0);
  // No pristine negatives, so AUC is undefined and flagged.
  CHECK(m.at("auc").is_null());
  CHECK(e.output.find("warning") != std::string::npos);

  REQUIRE(run("perturb --stub gt-echo -d " + q(dir.path() / "data") + " -o " +
              q(dir.path() / "pert")).code == 0);
  for (const char* k : {"jpeg90", "jpeg70", "snr30", "snr20"})
    CHECK(fs::exists(dir.path() / "pert" / (std::string("perturb_") + k + ".json")));
}

TEST_CASE("train then predict on a tiny model") {
  TempDir dir("cli_train");
  REQUIRE(run("synth -o " + q(dir.path() / "data") + kSmallData).code == 0);
  const Result t = run("train -d " + q(dir.path() / "data") + " -o " + q(dir.path() / "run") + kTiny);
  INFO(t.output);
  REQUIRE(t.code == 0);
  const fs::path ck = dir.path() / "run" / "checkpoint";
  const json manifest = json::parse(slurp(dir.path() / "data" / "manifest.json"));
  const fs::path video = dir.path() / "data" / manifest["videos"][1]["id"].get<std::string>();
  REQUIRE(run("predict " + q(video) + " --checkpoint " + q(ck) + " -o " + q(dir.path() / "pred"))
              .code == 0);
  CHECK(count_png(dir.path() / "pred" / "prob") == 3);
  CHECK(count_png(dir.path() / "pred" / "overlay") == 3);
  REQUIRE(run("eval --checkpoint " + q(ck) + " -d " + q(dir.path() / "data") + " -o " +
              q(dir.path() / "eval")).code == 0);
  CHECK(json::parse(slurp(dir.path() / "eval" / "metrics.json")).at("frames") == 6);
}

TEST_CASE("missing checkpoints fail cleanly") {
  TempDir dir("cli_missing");
  REQUIRE(run("synth -o " + q(dir.path() / "data") + kSmallData).code == 0);
  const Result r = run("eval --checkpoint " + q(dir.path() / "nope") + " -d " +
                       q(dir.path() / "data") + " -o " + q(dir.path() / "eval"));
  CHECK(r.code != 0);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("relative outputs land under the output root") {
  TempDir dir("cli_root");
  REQUIRE(run("synth -o rel_out" + std::string(kSmallData),
              "VIDNET_OUTPUT_ROOT=" + q(dir.path())).code == 0);
  CHECK(fs::exists(dir.path() / "rel_out" / "manifest.json"));
  CHECK(fs::exists(dir.path() / "rel_out" / "resolved_config.json"));
}

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


#include "train/dataset.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace vidnet::train {

Dataset load_dataset(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw media::IoError("dataset directory " + dir.string() +
                                                   " does not exist");
  Dataset out;
  const fs::path manifest = dir / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      for (const auto& v : j.at("videos")) {
        const std::string id = v.at("id").get<std::string>();
        const bool inpainted = v.value("inpainted", true);
        media::Video video = media::read_video_dir(dir / id, true);
        video.id = id;
        (inpainted ? out.videos : out.negatives).push_back(std::move(video));
      }
    } catch (const nlohmann::json::exception& e) {
      throw media::IoError(manifest.string() + ": " + e.what());
    }
  } else {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      media::Video video = media::read_video_dir(d, true);
      video.id = d.filename().string();
      out.videos.push_back(std::move(video));
    }
  }
  if (out.videos.empty())
    throw media::IoError("dataset " + dir.string() + " contains no inpainted videos");
  return out;
}

}  // namespace vidnet::train

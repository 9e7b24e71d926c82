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


// Loads a dataset directory: one video directory per entry, plus an optional
// manifest.json whose "inpainted": false entries are pristine negatives.

#pragma once

#include <filesystem>
#include <vector>

#include "media/media.hpp"

namespace vidnet::train {

struct Dataset {
  std::vector<media::Video> videos;     // inpainted, with masks
  std::vector<media::Video> negatives;  // pristine
};

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace vidnet::train

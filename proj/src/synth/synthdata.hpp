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

// Deterministic generator of small "inpainted" videos with exact masks.
//
// Each video is a textured background in which a moving region has been
// replaced by blurred surroundings and then JPEG round-tripped on its own,
// on an 8x8 grid offset from the frame's, at a lower quality. The region is
// therefore smooth in RGB but carries a compression history of its own.

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "media/media.hpp"

namespace vidnet::synth {

enum class RegionKind { kRectangle, kBlob };

struct SynthConfig {
  int num_videos = 8;
  int frames_per_video = 6;
  int height = 64;
  int width = 112;
  RegionKind region_kind = RegionKind::kRectangle;
  double area_lo = 0.08;
  double area_hi = 0.20;
  double motion_amplitude = 2.0;  // pixels per frame
  int fill_jpeg_quality = 15;
  int background_jpeg_quality = 60;
  std::uint64_t seed = 2024;
  // Also emit an un-inpainted twin of every video (negatives for frame AUC).
  bool include_pristine = false;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Order-independent per-video seed.
std::uint64_t video_seed(std::uint64_t seed, std::uint64_t index);

media::Video generate_video(const SynthConfig& cfg, int index);

// Same background as generate_video(cfg, index) without the inpainted region;
// masks are all zero.
media::Video generate_pristine_video(const SynthConfig& cfg, int index);

std::string video_id(int index, bool pristine = false);

// Writes every video in the media directory layout plus manifest.json.
void write_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace vidnet::synth

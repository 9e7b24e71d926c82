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

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "media/media.hpp"

namespace vidnet::media {
namespace {

std::vector<std::uint8_t> read_png_as(const std::filesystem::path& path,
                                      png_uint_32 format, int& height,
                                      int& width) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  height = static_cast<int>(image.height);
  width = static_cast<int>(image.width);
  return buffer;
}

void write_png_as(const std::filesystem::path& path, png_uint_32 format,
                  int height, int width, const std::uint8_t* data) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
}

}  // namespace

Frame read_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  auto rgb = read_png_as(path, PNG_FORMAT_RGB, h, w);
  return Frame(h, w, std::move(rgb));
}

void write_png(const std::filesystem::path& path, const Frame& frame) {
  write_png_as(path, PNG_FORMAT_RGB, frame.height(), frame.width(),
               frame.pixels().data());
}

MaskFrame read_mask_png(const std::filesystem::path& path) {
  int h = 0, w = 0;
  auto gray = read_png_as(path, PNG_FORMAT_GRAY, h, w);
  MaskFrame mask(h, w);
  std::transform(gray.begin(), gray.end(), mask.pixels().begin(),
                 [](std::uint8_t v) { return v ? 1 : 0; });
  return mask;
}

void write_mask_png(const std::filesystem::path& path, const MaskFrame& mask) {
  std::vector<std::uint8_t> gray(mask.pixels().size());
  std::transform(mask.pixels().begin(), mask.pixels().end(), gray.begin(),
                 [](std::uint8_t v) { return v ? 255 : 0; });
  write_png_as(path, PNG_FORMAT_GRAY, mask.height(), mask.width(), gray.data());
}

void write_gray_png(const std::filesystem::path& path, int height, int width,
                    const std::vector<std::uint8_t>& gray) {
  if (gray.size() != static_cast<std::size_t>(height) * width)
    throw std::invalid_argument("gray image size mismatch");
  write_png_as(path, PNG_FORMAT_GRAY, height, width, gray.data());
}

std::string frame_filename(std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof(name), "%05zu.png", index);
  return name;
}

Video read_video_dir(const std::filesystem::path& dir, bool require_masks) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw IoError("video directory not found: " + dir.string());
  Video video;
  video.id = dir.filename().string();
  if (video.id.empty()) video.id = dir.parent_path().filename().string();
  for (std::size_t i = 0;; ++i) {
    const fs::path p = dir / frame_filename(i);
    if (!fs::exists(p)) break;
    video.frames.push_back(read_png(p));
  }
  if (video.frames.empty())
    throw IoError("no frames (00000.png, ...) in " + dir.string());

  // Any other numbered PNG means the sequence has a gap.
  std::size_t numbered = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() == 9 &&
        name.substr(5) == ".png" &&
        std::all_of(name.begin(), name.begin() + 5,
                    [](char c) { return c >= '0' && c <= '9'; }))
      ++numbered;
  }
  if (numbered != video.frames.size())
    throw IoError("missing frames in " + dir.string() + ": found " +
                  std::to_string(numbered) + " numbered PNGs but only " +
                  std::to_string(video.frames.size()) + " are contiguous");

  const fs::path mask_dir = dir / "masks";
  if (fs::is_directory(mask_dir)) {
    for (std::size_t i = 0; i < video.frames.size(); ++i) {
      const fs::path p = mask_dir / frame_filename(i);
      if (!fs::exists(p)) throw IoError("missing mask " + p.string());
      video.masks.push_back(read_mask_png(p));
      if (video.masks.back().height() != video.frames[i].height() ||
          video.masks.back().width() != video.frames[i].width())
        throw IoError("mask size differs from frame size: " + p.string());
    }
  } else if (require_masks) {
    throw IoError("masks/ directory missing in " + dir.string());
  }
  return video;
}

void write_video_dir(const std::filesystem::path& dir, const Video& video) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < video.frames.size(); ++i)
    write_png(dir / frame_filename(i), video.frames[i]);
  if (!video.masks.empty()) {
    fs::create_directories(dir / "masks", ec);
    if (ec) throw IoError("cannot create masks dir: " + ec.message());
    for (std::size_t i = 0; i < video.masks.size(); ++i)
      write_mask_png(dir / "masks" / frame_filename(i), video.masks[i]);
  }
}

}  // namespace vidnet::media

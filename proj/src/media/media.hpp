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

// Frames, masks and the pixel-level transforms applied before the network
// sees a video: JPEG round-tripping, error level analysis, perturbations,
// resampling and tensor conversion.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nn/tensor.hpp"

namespace vidnet::media {

// Raised for unreadable/unwritable files and undecodable images.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMinFrameSide = 16;
inline constexpr int kDefaultElaQuality = 50;

// 8-bit RGB image, row-major, channels interleaved.
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width, std::uint8_t fill = 0);
  Frame(int height, int width, std::vector<std::uint8_t> rgb);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t& at(int y, int x, int c) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c];
  }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  bool operator==(const Frame&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct ElaFrame {
  Frame pixels;
  int source_quality = kDefaultElaQuality;
};

// Binary H x W mask, values in {0, 1}.
class MaskFrame {
 public:
  MaskFrame() = default;
  MaskFrame(int height, int width, std::uint8_t fill = 0);

  int height() const { return height_; }
  int width() const { return width_; }
  std::uint8_t& at(int y, int x) {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t at(int y, int x) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }
  std::size_t area() const;

  bool operator==(const MaskFrame&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Channels-first floating image with its declared value range.
struct NetworkTensor {
  nn::Tensor values;  // [1, C, H, W]
  double lo = -0.5;
  double hi = 0.5;
};

enum class InputNormalization {
  kUnit,      // x / 255 - 0.5
  kImageNet,  // (x / 255 - mean_c) / std_c, for pretrained backbones
};

// decode(encode(frame, quality)) with a baseline 4:4:4 JPEG codec using the
// standard quantization tables scaled by quality. Never touches disk.
Frame jpeg_roundtrip(const Frame& frame, int quality);

// |frame - jpeg_roundtrip(frame, quality)| per channel.
ElaFrame compute_ela(const Frame& frame, int quality = kDefaultElaQuality);

// The pre-clamp noise field added by add_gaussian_noise, one value per
// interleaved sample. Variance is mean(x^2) / 10^(snr_db / 10).
std::vector<double> gaussian_noise_field(const Frame& frame, double snr_db,
                                         std::uint64_t seed);
Frame add_gaussian_noise(const Frame& frame, double snr_db, std::uint64_t seed);

Frame resize_frame(const Frame& frame, int height, int width);
MaskFrame resize_mask(const MaskFrame& mask, int height, int width);

Frame flip_horizontal(const Frame& frame);
MaskFrame flip_horizontal(const MaskFrame& mask);

NetworkTensor normalize_for_network(
    const Frame& frame, InputNormalization mode = InputNormalization::kUnit);

// Reflect-pads bottom/right so H and W become multiples of `multiple`.
nn::Tensor reflect_pad(const nn::Tensor& t, int multiple);

// PNG I/O. Masks are stored as 8-bit gray, any nonzero value reads as 1.
Frame read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Frame& frame);
MaskFrame read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const MaskFrame& mask);
void write_gray_png(const std::filesystem::path& path, int height, int width,
                    const std::vector<std::uint8_t>& gray);

// One directory per video: 00000.png, 00001.png, ... and masks/ with the same
// names. Masks are optional on read.
struct Video {
  std::string id;
  std::vector<Frame> frames;
  std::vector<MaskFrame> masks;
};

std::string frame_filename(std::size_t index);
Video read_video_dir(const std::filesystem::path& dir, bool require_masks);
void write_video_dir(const std::filesystem::path& dir, const Video& video);

}  // namespace vidnet::media

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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "media/media.hpp"

namespace vidnet::media {
namespace {

void check_dims(int height, int width) {
  if (height < kMinFrameSide || width < kMinFrameSide)
    throw std::invalid_argument(
        "frame dimensions must be at least " + std::to_string(kMinFrameSide) +
        ", got " + std::to_string(height) + "x" + std::to_string(width));
}

// Default rounding mode is round-half-even.
std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::nearbyint(v), 0.0, 255.0));
}

struct Tap {
  int i0, i1;
  double frac;
};

std::vector<Tap> taps(int in, int out) {
  std::vector<Tap> t(out);
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = std::max(0.0, (o + 0.5) * ratio - 0.5);
    const int i0 = std::min(static_cast<int>(std::floor(src)), in - 1);
    const int i1 = std::min(i0 + 1, in - 1);
    t[o] = {i0, i1, i0 == in - 1 ? 0.0 : src - i0};
  }
  return t;
}

}  // namespace

Frame::Frame(int height, int width, std::uint8_t fill)
    : height_(height), width_(width) {
  check_dims(height, width);
  pixels_.assign(static_cast<std::size_t>(height) * width * 3, fill);
}

Frame::Frame(int height, int width, std::vector<std::uint8_t> rgb)
    : height_(height), width_(width), pixels_(std::move(rgb)) {
  check_dims(height, width);
  if (pixels_.size() != static_cast<std::size_t>(height) * width * 3)
    throw std::invalid_argument("frame expects H*W*3 RGB samples");
}

MaskFrame::MaskFrame(int height, int width, std::uint8_t fill)
    : height_(height), width_(width) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("mask dimensions must be positive");
  if (fill > 1) throw std::invalid_argument("mask values must be 0 or 1");
  pixels_.assign(static_cast<std::size_t>(height) * width, fill);
}

std::size_t MaskFrame::area() const {
  return static_cast<std::size_t>(
      std::count_if(pixels_.begin(), pixels_.end(),
                    [](std::uint8_t v) { return v != 0; }));
}

ElaFrame compute_ela(const Frame& frame, int quality) {
  const Frame recompressed = jpeg_roundtrip(frame, quality);
  Frame diff(frame.height(), frame.width());
  for (std::size_t i = 0; i < diff.pixels().size(); ++i)
    diff.pixels()[i] = static_cast<std::uint8_t>(
        std::abs(int{frame.pixels()[i]} - int{recompressed.pixels()[i]}));
  return {std::move(diff), quality};
}

std::vector<double> gaussian_noise_field(const Frame& frame, double snr_db,
                                         std::uint64_t seed) {
  if (std::isnan(snr_db) || snr_db == -INFINITY)
    throw std::invalid_argument("snr_db must be finite or +infinity");
  std::vector<double> noise(frame.pixels().size(), 0.0);
  if (std::isinf(snr_db)) return noise;
  double power = 0.0;
  for (std::uint8_t v : frame.pixels()) power += static_cast<double>(v) * v;
  power /= static_cast<double>(frame.pixels().size());
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& n : noise) n = sigma * dist(rng);
  return noise;
}

Frame add_gaussian_noise(const Frame& frame, double snr_db,
                         std::uint64_t seed) {
  const std::vector<double> noise = gaussian_noise_field(frame, snr_db, seed);
  Frame out = frame;
  for (std::size_t i = 0; i < noise.size(); ++i)
    out.pixels()[i] = quantize(frame.pixels()[i] + noise[i]);
  return out;
}

Frame resize_frame(const Frame& frame, int height, int width) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("resize target must be positive");
  if (height == frame.height() && width == frame.width()) return frame;
  Frame out(height, width);
  const auto ty = taps(frame.height(), height);
  const auto tx = taps(frame.width(), width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double a = frame.at(ty[y].i0, tx[x].i0, c);
        const double b = frame.at(ty[y].i0, tx[x].i1, c);
        const double d = frame.at(ty[y].i1, tx[x].i0, c);
        const double e = frame.at(ty[y].i1, tx[x].i1, c);
        const double top = a + tx[x].frac * (b - a);
        const double bot = d + tx[x].frac * (e - d);
        out.at(y, x, c) = quantize(top + ty[y].frac * (bot - top));
      }
  return out;
}

MaskFrame resize_mask(const MaskFrame& mask, int height, int width) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("resize target must be positive");
  if (height == mask.height() && width == mask.width()) return mask;
  // Nearest neighbour keeps the mask binary.
  MaskFrame out(height, width);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(mask.height() - 1,
                            static_cast<int>((y + 0.5) * mask.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(mask.width() - 1,
                              static_cast<int>((x + 0.5) * mask.width() / width));
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

Frame flip_horizontal(const Frame& frame) {
  Frame out = frame;
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = frame.at(y, frame.width() - 1 - x, c);
  return out;
}

MaskFrame flip_horizontal(const MaskFrame& mask) {
  MaskFrame out = mask;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      out.at(y, x) = mask.at(y, mask.width() - 1 - x);
  return out;
}

NetworkTensor normalize_for_network(const Frame& frame,
                                    InputNormalization mode) {
  static constexpr double kMean[3] = {0.485, 0.456, 0.406};
  static constexpr double kStd[3] = {0.229, 0.224, 0.225};
  NetworkTensor t;
  t.values = nn::Tensor(nn::Shape{1, 3, frame.height(), frame.width()});
  if (mode == InputNormalization::kImageNet) {
    t.lo = -kMean[0] / kStd[0];
    t.hi = (1 - kMean[2]) / kStd[2];
    for (int c = 0; c < 3; ++c) {
      t.lo = std::min(t.lo, -kMean[c] / kStd[c]);
      t.hi = std::max(t.hi, (1 - kMean[c]) / kStd[c]);
    }
  }
  for (int c = 0; c < 3; ++c) {
    double* plane = t.values.plane(0, c);
    for (int y = 0; y < frame.height(); ++y)
      for (int x = 0; x < frame.width(); ++x) {
        const double v = frame.at(y, x, c) / 255.0;
        plane[static_cast<std::size_t>(y) * frame.width() + x] =
            mode == InputNormalization::kUnit ? v - 0.5
                                              : (v - kMean[c]) / kStd[c];
      }
  }
  return t;
}

nn::Tensor reflect_pad(const nn::Tensor& t, int multiple) {
  if (multiple <= 0) throw std::invalid_argument("pad multiple must be positive");
  const nn::Shape s = t.shape();
  const int h = (s.h + multiple - 1) / multiple * multiple;
  const int w = (s.w + multiple - 1) / multiple * multiple;
  if (h == s.h && w == s.w) return t;
  if (h - s.h >= s.h || w - s.w >= s.w)
    throw std::invalid_argument("input too small to reflect-pad to a multiple of " +
                                std::to_string(multiple));
  auto reflect = [](int i, int n) { return i < n ? i : 2 * (n - 1) - i; };
  nn::Tensor out(nn::Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out.at(n, c, y, x) = t.at(n, c, reflect(y, s.h), reflect(x, s.w));
  return out;
}

}  // namespace vidnet::media

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

#include "synth/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

namespace vidnet::synth {
namespace {

using media::Frame;
using media::MaskFrame;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Float RGB canvas, values nominally in [0, 255].
struct Canvas {
  int h, w;
  std::vector<double> px;  // interleaved RGB
  Canvas(int height, int width) : h(height), w(width), px(height * width * 3) {}
  double& at(int y, int x, int c) { return px[(y * w + x) * 3 + c]; }
  double at(int y, int x, int c) const { return px[(y * w + x) * 3 + c]; }
};

double smoothstep(double t) { return t * t * (3 - 2 * t); }

// Lattice value noise with smoothstep interpolation; one octave.
void add_value_noise(Canvas& canvas, int cell, double amplitude,
                     const double tint[3], std::mt19937_64& rng) {
  const int gh = canvas.h / cell + 2;
  const int gw = canvas.w / cell + 2;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> lattice(gh * gw);
  for (double& v : lattice) v = u(rng);
  for (int y = 0; y < canvas.h; ++y) {
    const double fy = static_cast<double>(y) / cell;
    const int y0 = static_cast<int>(fy);
    const double ty = smoothstep(fy - y0);
    for (int x = 0; x < canvas.w; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const int x0 = static_cast<int>(fx);
      const double tx = smoothstep(fx - x0);
      const double a = lattice[y0 * gw + x0], b = lattice[y0 * gw + x0 + 1];
      const double c = lattice[(y0 + 1) * gw + x0],
                   d = lattice[(y0 + 1) * gw + x0 + 1];
      const double v = (a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty;
      for (int ch = 0; ch < 3; ++ch) canvas.at(y, x, ch) += amplitude * v * tint[ch];
    }
  }
}

// Soft-edged stripes and discs on top of the noise.
void add_geometry(Canvas& canvas, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int shapes = 3 + static_cast<int>(u(rng) * 4);
  for (int s = 0; s < shapes; ++s) {
    const double color[3] = {u(rng) * 120 - 60, u(rng) * 120 - 60,
                             u(rng) * 120 - 60};
    const bool disc = u(rng) < 0.5;
    const double cy = u(rng) * canvas.h, cx = u(rng) * canvas.w;
    const double radius = (0.1 + 0.25 * u(rng)) * std::min(canvas.h, canvas.w);
    const double angle = u(rng) * std::numbers::pi;
    const double period = 6 + 14 * u(rng);
    for (int y = 0; y < canvas.h; ++y)
      for (int x = 0; x < canvas.w; ++x) {
        double weight;
        if (disc) {
          const double d = std::hypot(y - cy, x - cx);
          weight = std::clamp(radius - d, 0.0, 1.0);
        } else {
          const double proj = (x - cx) * std::cos(angle) + (y - cy) * std::sin(angle);
          const double phase = std::sin(2 * std::numbers::pi * proj / period);
          weight = 0.5 * std::clamp(phase * 3.0, -1.0, 1.0) + 0.5;
          weight *= 0.6;
        }
        for (int c = 0; c < 3; ++c) canvas.at(y, x, c) += weight * color[c];
      }
  }
}

Frame to_frame(const Canvas& canvas) {
  Frame f(canvas.h, canvas.w);
  for (std::size_t i = 0; i < canvas.px.size(); ++i)
    f.pixels()[i] = static_cast<std::uint8_t>(
        std::clamp(std::nearbyint(canvas.px[i]), 0.0, 255.0));
  return f;
}

Frame make_background(const SynthConfig& cfg, std::mt19937_64& rng) {
  Canvas canvas(cfg.height, cfg.width);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double base[3] = {70 + 110 * u(rng), 70 + 110 * u(rng), 70 + 110 * u(rng)};
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x)
      for (int c = 0; c < 3; ++c) canvas.at(y, x, c) = base[c];
  double amplitude = 45.0;
  for (int cell : {32, 16, 8, 4}) {
    const double tint[3] = {0.6 + 0.4 * u(rng), 0.6 + 0.4 * u(rng),
                            0.6 + 0.4 * u(rng)};
    add_value_noise(canvas, cell, amplitude, tint, rng);
    amplitude *= 0.6;
  }
  add_geometry(canvas, rng);
  // Frames extracted from a compressed video already carry an aligned JPEG
  // history; the inpainted region will not share it.
  return media::jpeg_roundtrip(to_frame(canvas), cfg.background_jpeg_quality);
}

// Separable box blur, repeated; approximates a wide Gaussian.
Frame blur(const Frame& src, int radius, int passes) {
  const int h = src.height(), w = src.width();
  std::vector<double> a(src.pixels().begin(), src.pixels().end());
  std::vector<double> b(a.size());
  for (int p = 0; p < passes; ++p) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          double s = 0;
          for (int k = -radius; k <= radius; ++k) {
            const int xx = std::clamp(x + k, 0, w - 1);
            s += a[(y * w + xx) * 3 + c];
          }
          b[(y * w + x) * 3 + c] = s / (2 * radius + 1);
        }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          double s = 0;
          for (int k = -radius; k <= radius; ++k) {
            const int yy = std::clamp(y + k, 0, h - 1);
            s += b[(yy * w + x) * 3 + c];
          }
          a[(y * w + x) * 3 + c] = s / (2 * radius + 1);
        }
  }
  Frame out(h, w);
  for (std::size_t i = 0; i < a.size(); ++i)
    out.pixels()[i] =
        static_cast<std::uint8_t>(std::clamp(std::nearbyint(a[i]), 0.0, 255.0));
  return out;
}

// Binary region template of size rh x rw.
struct Region {
  int rh = 0, rw = 0;
  std::vector<std::uint8_t> cells;
  std::size_t area() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1));
  }
};

Region make_rectangle(const SynthConfig& cfg, double fraction,
                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> aspect_dist(0.6, 1.7);
  const double total = static_cast<double>(cfg.height) * cfg.width;
  const double target = fraction * total;
  const double aspect = aspect_dist(rng);  // width / height
  Region r;
  r.rh = std::clamp(static_cast<int>(std::lround(std::sqrt(target / aspect))), 2,
                    cfg.height - 2);
  r.rw = std::clamp(static_cast<int>(std::lround(target / r.rh)), 2, cfg.width - 2);
  // Nudge the width until the pixel fraction lands inside the range.
  while (r.rh * r.rw < cfg.area_lo * total && r.rw < cfg.width - 2) ++r.rw;
  while (r.rh * r.rw > cfg.area_hi * total && r.rw > 2) --r.rw;
  r.cells.assign(r.rh * r.rw, 1);
  return r;
}

Region rasterize_blob(double scale, const double harmonics[6]) {
  const double reach = scale * 1.45;
  Region r;
  r.rh = static_cast<int>(std::ceil(2 * reach)) + 1;
  r.rw = static_cast<int>(std::ceil(2 * reach * harmonics[5])) + 1;
  r.cells.assign(r.rh * r.rw, 0);
  const double cy = (r.rh - 1) / 2.0, cx = (r.rw - 1) / 2.0;
  for (int y = 0; y < r.rh; ++y)
    for (int x = 0; x < r.rw; ++x) {
      const double dy = y - cy, dx = (x - cx) / harmonics[5];
      const double theta = std::atan2(dy, dx);
      const double radius =
          scale * (1 + harmonics[0] * std::sin(2 * theta + harmonics[1]) +
                   harmonics[2] * std::sin(3 * theta + harmonics[3]) +
                   harmonics[4] * std::sin(5 * theta));
      if (std::hypot(dy, dx) <= radius) r.cells[y * r.rw + x] = 1;
    }
  return r;
}

Region make_blob(const SynthConfig& cfg, double fraction, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double harmonics[6] = {0.15 * u(rng), 6.28 * u(rng), 0.1 * u(rng),
                         6.28 * u(rng), 0.05 * u(rng), 1.0 + 0.6 * u(rng)};
  const double total = static_cast<double>(cfg.height) * cfg.width;
  // Bisect the scale so the rasterized area matches the target fraction.
  double lo = 1.0, hi = std::min(cfg.height, cfg.width) / 2.0;
  Region best = rasterize_blob(lo, harmonics);
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    Region r = rasterize_blob(mid, harmonics);
    const bool fits = r.rh <= cfg.height - 2 && r.rw <= cfg.width - 2;
    if (fits && r.area() <= fraction * total) {
      best = std::move(r);
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (best.area() < cfg.area_lo * total || best.area() > cfg.area_hi * total)
    throw std::runtime_error("blob rasterization could not hit the area range");
  return best;
}

// Integer top-left corners for every frame; the region bounces off borders.
std::vector<std::pair<int, int>> trajectory(const SynthConfig& cfg,
                                            const Region& region,
                                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double max_y = cfg.height - region.rh;
  const double max_x = cfg.width - region.rw;
  double y = u(rng) * max_y, x = u(rng) * max_x;
  const double angle = u(rng) * 2 * std::numbers::pi;
  double vy = cfg.motion_amplitude * std::sin(angle);
  double vx = cfg.motion_amplitude * std::cos(angle);
  std::vector<std::pair<int, int>> out;
  for (int t = 0; t < cfg.frames_per_video; ++t) {
    out.emplace_back(static_cast<int>(std::lround(y)),
                     static_cast<int>(std::lround(x)));
    y += vy;
    x += vx;
    if (y < 0) { y = -y; vy = -vy; }
    if (y > max_y) { y = 2 * max_y - y; vy = -vy; }
    if (x < 0) { x = -x; vx = -vx; }
    if (x > max_x) { x = 2 * max_x - x; vx = -vx; }
    y = std::clamp(y, 0.0, max_y);
    x = std::clamp(x, 0.0, max_x);
  }
  return out;
}

// Round-trips the frame through JPEG on a grid shifted by (oy, ox).
Frame shifted_roundtrip(const Frame& frame, int quality, int oy, int ox) {
  const int h = frame.height() + oy, w = frame.width() + ox;
  Frame padded(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        padded.at(y, x, c) = frame.at(std::max(0, y - oy), std::max(0, x - ox), c);
  const Frame rt = media::jpeg_roundtrip(padded, quality);
  Frame out(frame.height(), frame.width());
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = rt.at(y + oy, x + ox, c);
  return out;
}

struct VideoPlan {
  Frame background;
  Region region;
  std::vector<std::pair<int, int>> corners;
  int grid_dy = 0, grid_dx = 0;
};

VideoPlan plan_video(const SynthConfig& cfg, int index) {
  cfg.validate();
  std::mt19937_64 rng(video_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  VideoPlan plan;
  plan.background = make_background(cfg, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double fraction = cfg.area_lo + (0.2 + 0.6 * u(rng)) * (cfg.area_hi - cfg.area_lo);
  plan.region = cfg.region_kind == RegionKind::kRectangle
                    ? make_rectangle(cfg, fraction, rng)
                    : make_blob(cfg, fraction, rng);
  plan.corners = trajectory(cfg, plan.region, rng);
  std::uniform_int_distribution<int> offset(1, 7);
  plan.grid_dy = offset(rng);
  plan.grid_dx = offset(rng);
  return plan;
}

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("synth." + field + ": " + why);
  };
  if (num_videos < 1) fail("num_videos", "must be at least 1");
  if (frames_per_video < 3) fail("frames_per_video", "must be at least 3");
  if (height < media::kMinFrameSide) fail("height", "must be at least 16");
  if (width < media::kMinFrameSide) fail("width", "must be at least 16");
  if (!(area_lo > 0 && area_lo < area_hi && area_hi < 0.5))
    fail("area_fraction_range", "requires 0 < lo < hi < 0.5");
  if (!(motion_amplitude >= 0)) fail("motion_amplitude", "must be non-negative");
  if (fill_jpeg_quality < 1 || fill_jpeg_quality > 100)
    fail("fill_jpeg_quality", "must be in [1, 100]");
  if (background_jpeg_quality < 1 || background_jpeg_quality > 100)
    fail("background_jpeg_quality", "must be in [1, 100]");
}

std::uint64_t video_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xd1b54a32d192ed03ULL));
}

std::string video_id(int index, bool pristine) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "video_%03d%s", index, pristine ? "_clean" : "");
  return buf;
}

media::Video generate_video(const SynthConfig& cfg, int index) {
  const VideoPlan plan = plan_video(cfg, index);
  const Frame blurred = blur(plan.background, 4, 3);
  media::Video video;
  video.id = video_id(index);
  for (int t = 0; t < cfg.frames_per_video; ++t) {
    const auto [oy, ox] = plan.corners[t];
    MaskFrame mask(cfg.height, cfg.width);
    Frame filled = plan.background;
    for (int y = 0; y < plan.region.rh; ++y)
      for (int x = 0; x < plan.region.rw; ++x)
        if (plan.region.cells[y * plan.region.rw + x]) {
          mask.at(oy + y, ox + x) = 1;
          for (int c = 0; c < 3; ++c)
            filled.at(oy + y, ox + x, c) = blurred.at(oy + y, ox + x, c);
        }
    const Frame compressed = shifted_roundtrip(filled, cfg.fill_jpeg_quality,
                                               plan.grid_dy, plan.grid_dx);
    for (int y = 0; y < cfg.height; ++y)
      for (int x = 0; x < cfg.width; ++x)
        if (mask.at(y, x))
          for (int c = 0; c < 3; ++c) filled.at(y, x, c) = compressed.at(y, x, c);
    video.frames.push_back(std::move(filled));
    video.masks.push_back(std::move(mask));
  }
  return video;
}

media::Video generate_pristine_video(const SynthConfig& cfg, int index) {
  const VideoPlan plan = plan_video(cfg, index);
  media::Video video;
  video.id = video_id(index, true);
  for (int t = 0; t < cfg.frames_per_video; ++t) {
    video.frames.push_back(plan.background);
    video.masks.emplace_back(cfg.height, cfg.width);
  }
  return video;
}

void write_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw media::IoError("cannot create " + out_dir.string() + ": " + ec.message());
  nlohmann::json videos = nlohmann::json::array();
  for (int i = 0; i < cfg.num_videos; ++i) {
    const media::Video v = generate_video(cfg, i);
    media::write_video_dir(out_dir / v.id, v);
    videos.push_back({{"id", v.id}, {"frames", v.frames.size()}, {"inpainted", true}});
    if (cfg.include_pristine) {
      const media::Video p = generate_pristine_video(cfg, i);
      media::write_video_dir(out_dir / p.id, p);
      videos.push_back({{"id", p.id}, {"frames", p.frames.size()}, {"inpainted", false}});
    }
  }
  nlohmann::json manifest = {
      {"generator",
       {{"num_videos", cfg.num_videos},
        {"frames_per_video", cfg.frames_per_video},
        {"height", cfg.height},
        {"width", cfg.width},
        {"region_kind", cfg.region_kind == RegionKind::kRectangle ? "rectangle" : "blob"},
        {"area_fraction_range", {cfg.area_lo, cfg.area_hi}},
        {"motion_amplitude", cfg.motion_amplitude},
        {"fill_jpeg_quality", cfg.fill_jpeg_quality},
        {"background_jpeg_quality", cfg.background_jpeg_quality},
        {"seed", cfg.seed},
        {"include_pristine", cfg.include_pristine}}},
      {"videos", videos}};
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw media::IoError("cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << "\n";
  if (!out) throw media::IoError("failed writing manifest in " + out_dir.string());
}

}  // namespace vidnet::synth

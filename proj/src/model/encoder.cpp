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

#include "model/encoder.hpp"

#include <cstring>
#include <fstream>
#include <regex>
#include <stdexcept>

namespace vidnet::model {
namespace {

using nn::Conv2d;
using nn::Init;
using nn::ParamGroup;
using nn::Var;

// Minimal reader for little-endian float32/float64 C-order .npy arrays.
std::vector<double> read_npy(const std::filesystem::path& path,
                             std::vector<int>& shape) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw media::IoError("cannot open " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0)
    throw media::IoError(path.string() + " is not a .npy file");
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    unsigned char len[2];
    in.read(reinterpret_cast<char*>(len), 2);
    header_len = len[0] | (len[1] << 8);
  } else {
    unsigned char len[4];
    in.read(reinterpret_cast<char*>(len), 4);
    header_len = len[0] | (len[1] << 8) | (len[2] << 16) | (len[3] << 24);
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  std::smatch m;
  if (!std::regex_search(header, m, std::regex("'descr':\\s*'([<|])(f[48])'")))
    throw media::IoError(path.string() + ": unsupported dtype");
  const bool f8 = m[2] == "f8";
  if (header.find("'fortran_order': True") != std::string::npos)
    throw media::IoError(path.string() + ": fortran order not supported");
  if (!std::regex_search(header, m, std::regex("'shape':\\s*\\(([^)]*)\\)")))
    throw media::IoError(path.string() + ": missing shape");
  shape.clear();
  const std::string dims = m[1];
  static const std::regex kDigits("\\d+");
  std::sregex_iterator it(dims.begin(), dims.end(), kDigits), end;
  std::size_t count = 1;
  for (; it != end; ++it) {
    shape.push_back(std::stoi(it->str()));
    count *= shape.back();
  }
  std::vector<double> out(count);
  if (f8) {
    in.read(reinterpret_cast<char*>(out.data()), count * sizeof(double));
  } else {
    std::vector<float> tmp(count);
    in.read(reinterpret_cast<char*>(tmp.data()), count * sizeof(float));
    std::copy(tmp.begin(), tmp.end(), out.begin());
  }
  if (!in) throw media::IoError(path.string() + ": truncated data");
  return out;
}

}  // namespace

void EncoderConfig::validate() const {
  if (stage_channels.empty() || stage_channels.size() > kNumLevels)
    throw std::invalid_argument("encoder.stage_channels must have 1 to 5 entries");
  if (convs_per_stage.size() != stage_channels.size())
    throw std::invalid_argument(
        "encoder.convs_per_stage must match encoder.stage_channels in length");
  for (int c : stage_channels)
    if (c <= 0) throw std::invalid_argument("encoder.stage_channels must be positive");
  for (int c : convs_per_stage)
    if (c <= 0) throw std::invalid_argument("encoder.convs_per_stage must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw std::invalid_argument("encoder.dropout_rate must be in [0, 1)");
  if (!use_rgb_stream && !use_ela_stream)
    throw std::invalid_argument("encoder: at least one stream must be enabled");
  if (fusion_kernel != 1 && fusion_kernel != 3)
    throw std::invalid_argument("encoder.fusion_kernel must be 1 or 3");
}

EncoderStream::EncoderStream(nn::ParamStore& store, const std::string& prefix,
                             int in_channels, const EncoderConfig& cfg,
                             std::mt19937_64& rng) {
  int cin = in_channels;
  for (std::size_t s = 0; s < cfg.stage_channels.size(); ++s) {
    Stage stage;
    for (int k = 0; k < cfg.convs_per_stage[s]; ++k) {
      const std::string name = prefix + ".stage" + std::to_string(s + 1) +
                               ".conv" + std::to_string(k + 1);
      stage.convs.push_back(Conv2d::create(store, name, ParamGroup::kEncoder, cin,
                                           cfg.stage_channels[s], 3,
                                           Init::kHeNormal, rng));
      stage.norms.push_back(nn::Norm::create(store, name + ".norm",
                                             ParamGroup::kEncoder, cfg.norm_kind,
                                             cfg.stage_channels[s]));
      cin = cfg.stage_channels[s];
    }
    stages_.push_back(std::move(stage));
  }
}

FeaturePyramid EncoderStream::forward(const Var& x, bool training) const {
  const int factor = 1 << (stages() - 1);
  const nn::Shape s = x.shape();
  if (s.h < factor || s.w < factor || s.h % factor || s.w % factor)
    throw std::invalid_argument("encoder input " + s.str() +
                                " must have H and W divisible by " +
                                std::to_string(factor));
  FeaturePyramid out;
  Var h = x;
  for (std::size_t st = 0; st < stages_.size(); ++st) {
    if (st > 0) h = nn::max_pool2(h);
    const Stage& stage = stages_[st];
    for (std::size_t k = 0; k < stage.convs.size(); ++k)
      h = nn::relu(stage.norms[k](stage.convs[k](h), training));
    out.levels.push_back(h);
  }
  return out;
}

void EncoderStream::load_vgg16_npy(const std::filesystem::path& dir) {
  int index = 0;
  for (auto& stage : stages_) {
    for (auto& conv : stage.convs) {
      for (auto [suffix, var] : {std::pair{".weight.npy", &conv.weight},
                                 std::pair{".bias.npy", &conv.bias}}) {
        const auto path = dir / ("features." + std::to_string(index) + suffix);
        std::vector<int> shape;
        std::vector<double> data = read_npy(path, shape);
        nn::Tensor& dst = var->mutable_value();
        if (data.size() != dst.size())
          throw std::invalid_argument(
              path.string() + " has " + std::to_string(data.size()) +
              " values, layer expects " + std::to_string(dst.size()) +
              " (pretrained weights require full VGG-16 widths)");
        std::copy(data.begin(), data.end(), dst.data());
      }
      index += 2;  // conv + relu
    }
    index += 1;  // pool
  }
}

Var l2_normalize_channels(const Var& f, nn::L2Axis axis) {
  return nn::l2_normalize(f, axis);
}

Var fuse_multimodal(const Var& f_rgb, const Var& f_ela, int level,
                    const FusionLayer* fusion, nn::L2Axis axis) {
  if (level < 1 || level > kNumLevels)
    throw std::invalid_argument("fusion level must be in 1..5");
  if (level == kNumLevels) return f_rgb;
  if (!fusion) throw std::invalid_argument("fusion layer missing for level " +
                                           std::to_string(level));
  if (!fusion->two_branch) return nn::relu(fusion->conv(l2_normalize_channels(f_rgb, axis)));
  const nn::Shape a = f_rgb.shape(), b = f_ela.shape();
  if (a.n != b.n || a.h != b.h || a.w != b.w)
    throw std::invalid_argument("fusion inputs differ spatially: " + a.str() +
                                " vs " + b.str());
  const Var parts[2] = {l2_normalize_channels(f_rgb, axis),
                        l2_normalize_channels(f_ela, axis)};
  return nn::relu(fusion->conv(nn::concat_channels(parts)));
}

Encoder::Encoder(nn::ParamStore& store, const EncoderConfig& cfg,
                 std::mt19937_64& rng)
    : cfg_(cfg) {
  cfg.validate();
  if (cfg.stage_channels.size() != kNumLevels)
    throw std::invalid_argument("the detector encoder needs exactly 5 stages");
  if (cfg.use_rgb_stream) rgb_.emplace(store, "encoder.rgb", 3, cfg, rng);
  if (cfg.use_ela_stream) ela_.emplace(store, "encoder.ela", 3, cfg, rng);
  const bool both = cfg.use_rgb_stream && cfg.use_ela_stream;
  for (int l = 0; l < kNumLevels - 1; ++l) {
    const int c = cfg.stage_channels[l];
    const int cin = both ? 2 * c : c;
    FusionLayer layer;
    layer.two_branch = both;
    // Fusion layers are freshly initialized, so the decoder-side optimizer
    // owns them.
    layer.conv = Conv2d::create(store, "fusion.level" + std::to_string(l + 1),
                                ParamGroup::kDecoder, cin, c, cfg.fusion_kernel,
                                Init::kXavierUniform, rng);
    fusion_.push_back(std::move(layer));
  }
}

int Encoder::fused_channels(int level) const {
  return cfg_.stage_channels.at(level);
}

Encoder::Output Encoder::forward(const nn::Tensor& rgb, const nn::Tensor& ela,
                                 bool training, std::mt19937_64& rng) const {
  Output out;
  FeaturePyramid prgb, pela;
  if (rgb_) prgb = rgb_->forward(Var::constant(rgb), training);
  if (ela_) pela = ela_->forward(Var::constant(ela), training);
  // A single enabled stream takes the RGB slot.
  const FeaturePyramid& primary = rgb_ ? prgb : pela;
  if (rgb_) out.f5_rgb = prgb.levels.back();
  if (ela_) out.f5_ela = pela.levels.back();
  const double p = cfg_.dropout_rate;
  for (int l = 0; l < kNumLevels - 1; ++l) {
    const Var second = (rgb_ && ela_) ? pela.levels[l] : Var();
    Var fused = fuse_multimodal(primary.levels[l], second, l + 1, &fusion_[l],
                                cfg_.l2_axis);
    if (l >= 2) fused = nn::dropout(fused, p, rng, training);
    out.fused.levels.push_back(fused);
  }
  out.fused.levels.push_back(nn::dropout(
      fuse_multimodal(primary.levels.back(), Var(), kNumLevels, nullptr), p, rng,
      training));
  return out;
}

}  // namespace vidnet::model

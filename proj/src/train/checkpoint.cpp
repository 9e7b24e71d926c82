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


#include "train/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "config/run_config.hpp"

namespace vidnet::train {
namespace {

constexpr char kMagic[8] = {'V', 'I', 'D', 'N', 'E', 'T', 'A', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw media::IoError(path.string() + ": truncated archive");
  return v;
}

}  // namespace

std::filesystem::path archive_path(const std::filesystem::path& base) {
  return std::filesystem::path(base.string() + ".bin");
}

std::filesystem::path sidecar_path(const std::filesystem::path& base) {
  return std::filesystem::path(base.string() + ".json");
}

void write_archive(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, const nn::Tensor*>>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw media::IoError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint64_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const nn::Shape s = t->shape();
    for (int d : {s.n, s.c, s.h, s.w}) put(out, static_cast<std::int32_t>(d));
    out.write(reinterpret_cast<const char*>(t->data()),
              static_cast<std::streamsize>(sizeof(double) * t->size()));
  }
  if (!out) throw media::IoError("failed writing " + path.string());
}

std::map<std::string, nn::Tensor> read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw media::IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw media::IoError(path.string() + " is not a checkpoint archive");
  if (get<std::uint32_t>(in, path) != kVersion)
    throw media::IoError(path.string() + ": unsupported archive version");
  const auto count = get<std::uint64_t>(in, path);
  std::map<std::string, nn::Tensor> out;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(in, path), '\0');
    in.read(name.data(), static_cast<std::streamsize>(name.size()));
    nn::Shape s;
    s.n = get<std::int32_t>(in, path);
    s.c = get<std::int32_t>(in, path);
    s.h = get<std::int32_t>(in, path);
    s.w = get<std::int32_t>(in, path);
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
      throw media::IoError(path.string() + ": bad shape for " + name);
    nn::Tensor t(s);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double) * t.size()));
    if (!in) throw media::IoError(path.string() + ": truncated data for " + name);
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

std::vector<std::pair<std::string, const nn::Tensor*>> model_entries(
    const model::VidNet& net) {
  std::vector<std::pair<std::string, const nn::Tensor*>> out;
  for (const auto& p : net.params().parameters()) out.emplace_back(p.name, &p.var.value());
  for (const auto& [name, t] : net.params().buffers()) out.emplace_back(name, t);
  return out;
}

void restore_model(model::VidNet& net, const std::map<std::string, nn::Tensor>& archive) {
  auto assign = [&](const std::string& name, nn::Tensor& dst) {
    auto it = archive.find(name);
    if (it == archive.end())
      throw media::IoError("checkpoint is missing tensor " + name);
    if (it->second.shape() != dst.shape())
      throw media::IoError("checkpoint tensor " + name + " has shape " +
                           it->second.shape().str() + ", model expects " +
                           dst.shape().str());
    dst = it->second;
  };
  for (auto& p : net.params().parameters()) assign(p.name, p.var.mutable_value());
  for (auto& [name, t] : net.params().buffers()) assign(name, *t);
}

nlohmann::ordered_json read_sidecar(const std::filesystem::path& base) {
  std::ifstream in(sidecar_path(base));
  if (!in) throw media::IoError("cannot open checkpoint metadata " +
                                sidecar_path(base).string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw media::IoError(sidecar_path(base).string() + ": " + e.what());
  }
}

void save_model(const model::VidNet& net, const std::filesystem::path& base,
                const nlohmann::ordered_json& extra) {
  write_archive(archive_path(base), model_entries(net));
  nlohmann::ordered_json meta;
  meta["format"] = "vidnet-checkpoint";
  meta["version"] = kVersion;
  meta["model"] = config::to_json(net.config());
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  std::ofstream out(sidecar_path(base));
  out << meta.dump(2) << "\n";
  if (!out) throw media::IoError("failed writing " + sidecar_path(base).string());
}

std::unique_ptr<model::VidNet> load_model(const std::filesystem::path& base) {
  const nlohmann::ordered_json meta = read_sidecar(base);
  if (!meta.contains("model"))
    throw media::IoError(sidecar_path(base).string() + " has no model config");
  auto net = std::make_unique<model::VidNet>(
      config::model_from_json(meta["model"], "model"));
  restore_model(*net, read_archive(archive_path(base)));
  return net;
}

}  // namespace vidnet::train

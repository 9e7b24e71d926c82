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

#include "nn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace vidnet::nn {

const char* group_name(ParamGroup g) {
  return g == ParamGroup::kEncoder ? "encoder" : "decoder";
}

Var ParamStore::add(const std::string& name, ParamGroup group, Tensor init) {
  if (index_.count(name))
    throw std::logic_error("duplicate parameter name " + name);
  Var v = Var::leaf(std::move(init), true);
  index_[name] = params_.size();
  params_.push_back({name, group, v});
  return v;
}

RunningStats& ParamStore::add_stats(const std::string& name, int channels) {
  auto stats = std::make_unique<RunningStats>();
  stats->mean = Tensor(Shape{1, channels, 1, 1}, 0.0);
  stats->var = Tensor(Shape{1, channels, 1, 1}, 1.0);
  RunningStats& ref = *stats;
  stats_.emplace_back(name, std::move(stats));
  return ref;
}

const Parameter* ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::map<std::string, Tensor*> ParamStore::buffers() {
  std::map<std::string, Tensor*> out;
  for (auto& [name, stats] : stats_) {
    out[name + ".running_mean"] = &stats->mean;
    out[name + ".running_var"] = &stats->var;
  }
  return out;
}

std::map<std::string, const Tensor*> ParamStore::buffers() const {
  std::map<std::string, const Tensor*> out;
  for (const auto& [name, stats] : stats_) {
    out[name + ".running_mean"] = &stats->mean;
    out[name + ".running_var"] = &stats->var;
  }
  return out;
}

std::size_t ParamStore::count(ParamGroup group) const {
  std::size_t total = 0;
  for (const auto& p : params_)
    if (p.group == group) total += p.var.value().size();
  return total;
}

std::size_t ParamStore::count() const {
  return count(ParamGroup::kEncoder) + count(ParamGroup::kDecoder);
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

Tensor conv_weight(int cout, int cin, int k, Init init, std::mt19937_64& rng) {
  Tensor w(Shape{cout, cin, k, k});
  const double fan_in = static_cast<double>(cin) * k * k;
  const double fan_out = static_cast<double>(cout) * k * k;
  switch (init) {
    case Init::kXavierUniform: {
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-a, a);
      for (auto& v : w.values()) v = dist(rng);
      break;
    }
    case Init::kHeNormal: {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      for (auto& v : w.values()) v = dist(rng);
      break;
    }
    case Init::kZero:
      break;
  }
  return w;
}

Conv2d Conv2d::create(ParamStore& store, const std::string& name,
                      ParamGroup group, int cin, int cout, int k, Init init,
                      std::mt19937_64& rng) {
  Conv2d conv;
  conv.weight = store.add(name + ".weight", group,
                          conv_weight(cout, cin, k, init, rng));
  conv.bias = store.add(name + ".bias", group, Tensor(Shape{1, cout, 1, 1}));
  conv.padding = k / 2;
  return conv;
}

Norm Norm::create(ParamStore& store, const std::string& name, ParamGroup group,
                  NormKind kind, int channels) {
  Norm norm;
  norm.kind = kind;
  norm.gamma = store.add(name + ".gamma", group,
                         Tensor(Shape{1, channels, 1, 1}, 1.0));
  norm.beta = store.add(name + ".beta", group, Tensor(Shape{1, channels, 1, 1}));
  if (kind == NormKind::kBatch) norm.stats = &store.add_stats(name, channels);
  return norm;
}

Var Norm::operator()(const Var& x, bool training) const {
  if (kind == NormKind::kInstance) return instance_norm(x, gamma, beta);
  return batch_norm(x, gamma, beta, *stats, training);
}

}  // namespace vidnet::nn

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

#pragma once

#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "nn/graph.hpp"
#include "nn/ops.hpp"

namespace vidnet::nn {

// Which optimizer owns a parameter.
enum class ParamGroup { kEncoder, kDecoder };
const char* group_name(ParamGroup g);

struct Parameter {
  std::string name;
  ParamGroup group;
  Var var;
};

// Ordered registry of trainable tensors and non-trainable buffers, keyed by
// hierarchical names such as "encoder.rgb.stage1.conv2.weight".
class ParamStore {
 public:
  Var add(const std::string& name, ParamGroup group, Tensor init);
  RunningStats& add_stats(const std::string& name, int channels);

  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }
  const Parameter* find(const std::string& name) const;

  // Buffers are exported as "<name>.running_mean" / "<name>.running_var".
  std::map<std::string, Tensor*> buffers();
  std::map<std::string, const Tensor*> buffers() const;

  // Number of scalar values.
  std::size_t count(ParamGroup group) const;
  std::size_t count() const;
  void zero_grad();

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::pair<std::string, std::unique_ptr<RunningStats>>> stats_;
};

enum class Init { kXavierUniform, kHeNormal, kZero };

// Initialized [cout, cin, k, k] weight plus [cout] bias (zeros).
Tensor conv_weight(int cout, int cin, int k, Init init, std::mt19937_64& rng);

struct Conv2d {
  Var weight;
  Var bias;
  int padding = 0;

  static Conv2d create(ParamStore& store, const std::string& name,
                       ParamGroup group, int cin, int cout, int k, Init init,
                       std::mt19937_64& rng);
  Var operator()(const Var& x) const {
    return conv2d(x, weight, bias, padding);
  }
  int out_channels() const { return weight.shape().n; }
  int in_channels() const { return weight.shape().c; }
};

enum class NormKind { kBatch, kInstance };

struct Norm {
  NormKind kind = NormKind::kInstance;
  Var gamma;
  Var beta;
  RunningStats* stats = nullptr;  // owned by the store; batch kind only

  static Norm create(ParamStore& store, const std::string& name,
                     ParamGroup group, NormKind kind, int channels);
  Var operator()(const Var& x, bool training) const;
};

}  // namespace vidnet::nn

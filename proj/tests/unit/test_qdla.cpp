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


#include <doctest.h>

#include <algorithm>

#include "model/qdla.hpp"
#include "support/gradcheck.hpp"
#include "support/test_util.hpp"

using namespace vidnet;
using nn::Direction;
using vidnet::testing::random_tensor;

namespace {

nn::Var constant(const nn::Tensor& t) { return nn::Var::constant(t); }

nn::Tensor mirror_w(const nn::Tensor& t) {
  nn::Tensor out(t.shape());
  for (int n = 0; n < t.n(); ++n)
    for (int c = 0; c < t.c(); ++c)
      for (int y = 0; y < t.h(); ++y)
        for (int x = 0; x < t.w(); ++x) out.at(n, c, y, t.w() - 1 - x) = t.at(n, c, y, x);
  return out;
}

double max_diff(const nn::Tensor& a, const nn::Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

model::Qdla make_qdla(nn::ParamStore& store, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return model::Qdla(store, "qdla", channels, rng);
}

}  // namespace

TEST_CASE("zero transform gives attention one half everywhere") {
  nn::ParamStore store;
  model::Qdla q = make_qdla(store, 3, 1);
  for (auto& p : store.parameters()) p.var.mutable_value().fill(0.0);
  const nn::Var f = constant(random_tensor({2, 3, 5, 6}, 2));
  for (Direction d : nn::kAllDirections) {
    const nn::Tensor a = model::compute_attention_map(f, q.transform(d)).value();
    CHECK(a.shape() == f.shape());
    for (double v : a.values()) REQUIRE(v == 0.5);
  }
}

TEST_CASE("attention maps lie strictly inside the unit interval") {
  nn::ParamStore store;
  model::Qdla q = make_qdla(store, 4, 3);
  const nn::Var f = constant(random_tensor({1, 4, 6, 7}, 4, -3, 3));
  for (Direction d : nn::kAllDirections) {
    const nn::Tensor a = model::compute_attention_map(f, q.transform(d)).value();
    for (double v : a.values()) {
      REQUIRE(v > 0.0);
      REQUIRE(v < 1.0);
    }
  }
}

TEST_CASE("strongly negative bias gives near-zero attention") {
  nn::ParamStore store;
  model::Qdla q = make_qdla(store, 2, 5);
  for (Direction d : nn::kAllDirections) {
    q.transform(d).weight.mutable_value().fill(0.0);
    q.transform(d).bias.mutable_value().fill(-20.0);
  }
  const nn::Var f = constant(random_tensor({1, 2, 4, 4}, 6));
  for (Direction d : nn::kAllDirections)
    CHECK(model::compute_attention_map(f, q.transform(d)).value().max_abs() < 1e-8);
  for (bool sequential : {false, true}) {
    const auto out = q.forward(f, sequential);
    for (int d = 0; d < 4; ++d) CHECK(max_diff(out.refined[d].value(), f.value()) < 1e-7);
  }
}

TEST_CASE("zero attention is the identity, full attention a one-pixel shift") {
  const nn::Tensor f = random_tensor({1, 2, 4, 5}, 7);
  const nn::Tensor zero(f.shape()), one(f.shape(), 1.0);
  for (Direction d : nn::kAllDirections)
    CHECK(max_diff(model::directional_refine(constant(f), constant(zero), d).value(), f) == 0.0);
  const nn::Tensor lr = model::directional_refine(constant(f), constant(one),
                                                  Direction::kLeftToRight).value();
  const nn::Tensor tb = model::directional_refine(constant(f), constant(one),
                                                  Direction::kTopToBottom).value();
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) {
        CHECK(lr.at(0, c, y, x) == f.at(0, c, y, x > 0 ? x - 1 : 0));
        CHECK(tb.at(0, c, y, x) == f.at(0, c, y > 0 ? y - 1 : 0, x));
      }
}

TEST_CASE("half attention averages with the neighbour") {
  const nn::Tensor f({1, 1, 1, 2}, std::vector<double>{2.0, 4.0});
  const nn::Tensor half(f.shape(), 0.5);
  const nn::Tensor out =
      model::directional_refine(constant(f), constant(half), Direction::kLeftToRight).value();
  CHECK(out[0] == 2.0);
  CHECK(out[1] == 3.0);
  const nn::Tensor back =
      model::directional_refine(constant(f), constant(half), Direction::kRightToLeft).value();
  CHECK(back[0] == 3.0);
  CHECK(back[1] == 4.0);
}

TEST_CASE("refinement stays within the input range") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const nn::Tensor f = random_tensor({1, 2, 5, 6}, 100 + seed, -4, 4);
    const nn::Tensor a = random_tensor(f.shape(), 200 + seed, 0, 1);
    const double lo = *std::min_element(f.values().begin(), f.values().end());
    const double hi = *std::max_element(f.values().begin(), f.values().end());
    for (Direction d : nn::kAllDirections)
      for (bool recursive : {false, true}) {
        const nn::Tensor out =
            model::directional_refine(constant(f), constant(a), d, recursive).value();
        for (double v : out.values()) {
          REQUIRE(v >= lo - 1e-12);
          REQUIRE(v <= hi + 1e-12);
        }
      }
  }
}

TEST_CASE("mismatched attention shape is rejected") {
  const nn::Var f = constant(nn::Tensor({1, 2, 4, 4}));
  const nn::Var a = constant(nn::Tensor({1, 2, 4, 5}));
  CHECK_THROWS_AS(model::directional_refine(f, a, Direction::kLeftToRight),
                  std::invalid_argument);
}

TEST_CASE("mirrored input with mirrored weights swaps left and right") {
  nn::ParamStore store;
  model::Qdla q = make_qdla(store, 3, 9);
  // Mirror the right-to-left kernel into the left-to-right slot.
  q.transform(Direction::kLeftToRight).weight.mutable_value() =
      mirror_w(q.transform(Direction::kRightToLeft).weight.value());
  q.transform(Direction::kLeftToRight).bias.mutable_value() =
      q.transform(Direction::kRightToLeft).bias.value();
  const nn::Tensor f = random_tensor({1, 3, 5, 7}, 10);
  const auto plain = q.forward(constant(f));
  const auto mirrored = q.forward(constant(mirror_w(f)));
  CHECK(max_diff(mirrored.refined[0].value(), mirror_w(plain.refined[1].value())) < 1e-12);
}

TEST_CASE("literal refinement only reads the adjacent column") {
  const nn::Tensor f = random_tensor({1, 1, 3, 6}, 11);
  const nn::Tensor a(f.shape(), 0.7);
  nn::Tensor g = f;
  for (int y = 0; y < 3; ++y) g.at(0, 0, y, 1) += 5.0;
  const nn::Tensor a1 =
      model::directional_refine(constant(f), constant(a), Direction::kLeftToRight).value();
  const nn::Tensor a2 =
      model::directional_refine(constant(g), constant(a), Direction::kLeftToRight).value();
  for (int y = 0; y < 3; ++y) {
    CHECK(a1.at(0, 0, y, 3) == a2.at(0, 0, y, 3));
    CHECK(a1.at(0, 0, y, 2) != a2.at(0, 0, y, 2));
  }
  // The recursive scan carries the change further along the row.
  const nn::Tensor r1 = model::directional_refine(constant(f), constant(a),
                                                  Direction::kLeftToRight, true).value();
  const nn::Tensor r2 = model::directional_refine(constant(g), constant(a),
                                                  Direction::kLeftToRight, true).value();
  CHECK(r1.at(0, 0, 0, 3) != r2.at(0, 0, 0, 3));
}

TEST_CASE("sequential and parallel modes differ") {
  nn::ParamStore store;
  model::Qdla q = make_qdla(store, 2, 12);
  const nn::Var f = constant(random_tensor({1, 2, 4, 4}, 13));
  const auto par = q.forward(f, false);
  const auto seq = q.forward(f, true);
  CHECK(max_diff(par.refined[0].value(), seq.refined[0].value()) == 0.0);
  CHECK(max_diff(par.refined[3].value(), seq.refined[3].value()) > 1e-6);
  for (int d = 0; d < 4; ++d) CHECK(seq.refined[d].shape() == f.shape());
}

TEST_CASE("attention gradients match finite differences") {
  nn::ParamStore store;
  model::Qdla q = make_qdla(store, 3, 14);
  for (Direction d : nn::kAllDirections)
    q.transform(d).bias.mutable_value() =
        random_tensor(q.transform(d).bias.shape(), 15, -0.3, 0.3);
  nn::Var f = nn::Var::leaf(random_tensor({2, 3, 4, 5}, 16));
  std::vector<nn::Tensor> probes;
  for (int d = 0; d < 4; ++d) probes.push_back(random_tensor({2, 3, 4, 5}, 20 + d));
  for (bool sequential : {false, true})
    for (bool recursive : {false, true}) {
      auto loss = [&] {
        const auto out = q.forward(f, sequential, recursive);
        nn::Var total;
        for (int d = 0; d < 4; ++d) {
          nn::Var term = nn::sum_all(nn::mul(out.refined[d], constant(probes[d])));
          total = total.defined() ? nn::add(total, term) : term;
        }
        return total;
      };
      std::vector<std::pair<std::string, nn::Var>> leaves{{"f", f}};
      for (const auto& p : store.parameters()) leaves.emplace_back(p.name, p.var);
      const auto r = vidnet::testing::gradcheck(loss, leaves);
      INFO("sequential " << sequential << " recursive " << recursive << " worst "
                         << r.worst()->name);
      CHECK(r.max_rel_error() < 1e-4);
    }
}

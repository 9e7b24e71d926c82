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

#include <cmath>

#include "nn/ops.hpp"
#include "nn/params.hpp"
#include "support/gradcheck.hpp"
#include "support/test_util.hpp"

using namespace vidnet;
using nn::Shape;
using nn::Tensor;
using nn::Var;
using testing::gradcheck;
using testing::random_tensor;

namespace {

constexpr double kGradTol = 1e-6;

// Weighted sum so that no gradient cancels by symmetry.
Var probe(const Var& y, std::uint64_t seed) {
  return nn::sum_all(nn::mul(y, Var::constant(random_tensor(y.shape(), seed))));
}

void check_unary(const std::function<Var(const Var&)>& op, Shape shape,
                 std::uint64_t seed = 1, double lo = -1.0, double hi = 1.0) {
  Var x = Var::leaf(random_tensor(shape, seed, lo, hi));
  const auto r = gradcheck([&] { return probe(op(x), seed + 100); }, {{"x", x}});
  CHECK(r.max_rel_error() < kGradTol);
}

// Direct six-loop convolution with zero padding.
Tensor naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, int pad) {
  const Shape xs = x.shape(), ws = w.shape();
  Tensor out(Shape{xs.n, ws.n, xs.h, xs.w});
  for (int n = 0; n < xs.n; ++n)
    for (int o = 0; o < ws.n; ++o)
      for (int y = 0; y < xs.h; ++y)
        for (int xx = 0; xx < xs.w; ++xx) {
          double acc = b.empty() ? 0.0 : b[o];
          for (int c = 0; c < xs.c; ++c)
            for (int ky = 0; ky < ws.h; ++ky)
              for (int kx = 0; kx < ws.w; ++kx) {
                const int iy = y + ky - pad, ix = xx + kx - pad;
                if (iy < 0 || ix < 0 || iy >= xs.h || ix >= xs.w) continue;
                acc += w.at(o, c, ky, kx) * x.at(n, c, iy, ix);
              }
          out.at(n, o, y, xx) = acc;
        }
  return out;
}

}  // namespace

TEST_CASE("conv2d matches a direct convolution") {
  for (int k : {1, 3}) {
    const Tensor x = random_tensor({2, 3, 5, 6}, 1);
    const Tensor w = random_tensor({4, 3, k, k}, 2);
    const Tensor b = random_tensor({1, 4, 1, 1}, 3);
    const Tensor got = nn::conv2d(Var::constant(x), Var::constant(w), Var::constant(b), k / 2).value();
    CHECK(nn::max_abs_diff(got, naive_conv(x, w, b, k / 2)) < 1e-12);
  }
}

TEST_CASE("conv2d gradients") {
  for (int k : {1, 3}) {
    Var x = Var::leaf(random_tensor({2, 3, 5, 4}, 4));
    Var w = Var::leaf(random_tensor({2, 3, k, k}, 5));
    Var b = Var::leaf(random_tensor({1, 2, 1, 1}, 6));
    const auto r = gradcheck([&] { return probe(nn::conv2d(x, w, b, k / 2), 7); },
                             {{"x", x}, {"w", w}, {"b", b}});
    CHECK(r.max_rel_error() < kGradTol);
  }
}

TEST_CASE("elementwise gradients") {
  check_unary([](const Var& x) { return nn::relu(x); }, {2, 2, 3, 3});
  check_unary([](const Var& x) { return nn::sigmoid(x); }, {2, 2, 3, 3}, 2, -4, 4);
  check_unary([](const Var& x) { return nn::tanh(x); }, {2, 2, 3, 3}, 3, -2, 2);
  check_unary([](const Var& x) { return nn::scale(x, -2.5); }, {1, 2, 3, 3});
  Var a = Var::leaf(random_tensor({2, 2, 3, 3}, 8));
  Var b = Var::leaf(random_tensor({2, 2, 3, 3}, 9));
  for (auto op : {nn::add, nn::sub, nn::mul}) {
    const auto r = gradcheck([&] { return probe(op(a, b), 10); }, {{"a", a}, {"b", b}});
    CHECK(r.max_rel_error() < kGradTol);
  }
}

TEST_CASE("sigmoid is stable at large magnitudes") {
  Tensor t({1, 1, 1, 2}, std::vector<double>{-800.0, 800.0});
  const Tensor s = nn::sigmoid(Var::constant(t)).value();
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 1.0);
}

TEST_CASE("max_pool2 forward and gradient") {
  Tensor t({1, 1, 2, 4}, std::vector<double>{1, 5, 2, 0, 3, 4, 7, 6});
  const Tensor p = nn::max_pool2(Var::constant(t)).value();
  CHECK(p.shape() == Shape{1, 1, 1, 2});
  CHECK(p[0] == 5);
  CHECK(p[1] == 7);
  check_unary([](const Var& x) { return nn::max_pool2(x); }, {2, 2, 4, 6});
}

TEST_CASE("instance_norm statistics and gradient") {
  const Tensor x = random_tensor({2, 3, 6, 5}, 11, -3, 5);
  Var gamma = Var::leaf(Tensor({1, 3, 1, 1}, 1.0));
  Var beta = Var::leaf(Tensor({1, 3, 1, 1}, 0.0));
  const Tensor y = nn::instance_norm(Var::constant(x), gamma, beta).value();
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 3; ++c) {
      double mean = 0, var = 0;
      const int m = 30;
      for (int i = 0; i < m; ++i) mean += y.plane(n, c)[i];
      mean /= m;
      for (int i = 0; i < m; ++i) var += (y.plane(n, c)[i] - mean) * (y.plane(n, c)[i] - mean);
      var /= m;
      CHECK(std::abs(mean) < 1e-5);
      CHECK(std::abs(var - 1.0) < 1e-4);
    }
  Var xv = Var::leaf(x);
  Var g2 = Var::leaf(random_tensor({1, 3, 1, 1}, 12, 0.5, 1.5));
  Var b2 = Var::leaf(random_tensor({1, 3, 1, 1}, 13));
  const auto r = gradcheck([&] { return probe(nn::instance_norm(xv, g2, b2), 14); },
                           {{"x", xv}, {"gamma", g2}, {"beta", b2}});
  CHECK(r.max_rel_error() < kGradTol);
}

TEST_CASE("batch_norm training, running statistics and eval mode") {
  nn::RunningStats stats{Tensor({1, 2, 1, 1}, 0.0), Tensor({1, 2, 1, 1}, 1.0)};
  Var x = Var::leaf(random_tensor({3, 2, 4, 4}, 15, -2, 3));
  Var g = Var::leaf(random_tensor({1, 2, 1, 1}, 16, 0.5, 1.5));
  Var b = Var::leaf(random_tensor({1, 2, 1, 1}, 17));
  // Gradient in training mode (running stats drift but do not feed the output).
  const auto r = gradcheck([&] { return probe(nn::batch_norm(x, g, b, stats, true), 18); },
                           {{"x", x}, {"gamma", g}, {"beta", b}});
  CHECK(r.max_rel_error() < kGradTol);

  nn::RunningStats fresh{Tensor({1, 2, 1, 1}, 0.0), Tensor({1, 2, 1, 1}, 1.0)};
  nn::batch_norm(Var::constant(x.value()), g, b, fresh, true, 0.1);
  // Running mean after one update is 0.1 * batch mean.
  double mean0 = 0;
  for (int n = 0; n < 3; ++n)
    for (int i = 0; i < 16; ++i) mean0 += x.value().plane(n, 0)[i];
  mean0 /= 48;
  CHECK(fresh.mean[0] == doctest::Approx(0.1 * mean0).epsilon(1e-12));

  // Eval mode applies the stored statistics.
  nn::RunningStats fixed{Tensor({1, 2, 1, 1}, 0.5), Tensor({1, 2, 1, 1}, 4.0)};
  Tensor one({1, 2, 1, 1}, 1.0), zero({1, 2, 1, 1}, 0.0);
  Tensor in({1, 2, 1, 1}, 2.5);
  const Tensor out = nn::batch_norm(Var::constant(in), Var::constant(one), Var::constant(zero),
                                    fixed, false).value();
  CHECK(out[0] == doctest::Approx((2.5 - 0.5) / std::sqrt(4.0 + 1e-5)));
}

TEST_CASE("dropout is the identity at eval and rescales in training") {
  std::mt19937_64 rng(1);
  const Tensor x({1, 1, 40, 40}, 1.0);
  CHECK(nn::max_abs_diff(nn::dropout(Var::constant(x), 0.5, rng, false).value(), x) == 0.0);
  const Tensor y = nn::dropout(Var::constant(x), 0.5, rng, true).value();
  int kept = 0;
  for (double v : y.values()) {
    CHECK((v == 0.0 || v == 2.0));
    kept += v != 0.0;
  }
  CHECK(kept > 600);
  CHECK(kept < 1000);
}

TEST_CASE("l2_normalize forward cases and gradient") {
  Tensor t({1, 2, 1, 2}, std::vector<double>{3, 0, 4, 0});
  const Tensor y = nn::l2_normalize(Var::constant(t), nn::L2Axis::kChannelsPerLocation).value();
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(y.at(0, 1, 0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(y.at(0, 0, 0, 1) == 0.0);
  CHECK(y.at(0, 1, 0, 1) == 0.0);
  for (auto axis : {nn::L2Axis::kChannelsPerLocation, nn::L2Axis::kSpatialPerChannel})
    check_unary([axis](const Var& x) { return nn::l2_normalize(x, axis); }, {2, 3, 3, 4});
}

TEST_CASE("shape plumbing gradients") {
  Var a = Var::leaf(random_tensor({2, 2, 3, 4}, 20));
  Var b = Var::leaf(random_tensor({2, 3, 3, 4}, 21));
  const Var parts[2] = {a, b};
  auto r = gradcheck([&] { return probe(nn::concat_channels(parts), 22); }, {{"a", a}, {"b", b}});
  CHECK(r.max_rel_error() < kGradTol);
  check_unary([](const Var& x) { return nn::slice_channels(x, 1, 3); }, {2, 4, 2, 2});
  check_unary([](const Var& x) { return nn::repeat_batch(x, 3); }, {2, 2, 2, 3});
  check_unary([](const Var& x) { return nn::batch_to_channels(x, 4); }, {8, 2, 2, 3});
  check_unary([](const Var& x) { return nn::slice_batch(x, 1, 3); }, {4, 2, 2, 3});
  check_unary([](const Var& x) { return nn::crop(x, 3, 2); }, {2, 2, 4, 5});
  check_unary([](const Var& x) { return nn::resize_bilinear(x, 6, 10); }, {1, 2, 3, 5});
  check_unary([](const Var& x) { return nn::resize_bilinear(x, 2, 3); }, {1, 2, 5, 7});
  Var c = Var::leaf(random_tensor({1, 2, 3, 4}, 23));
  const Var stack[3] = {a, c, a};
  r = gradcheck([&] { return probe(nn::concat_batch(stack), 24); }, {{"a", a}, {"c", c}});
  CHECK(r.max_rel_error() < kGradTol);
}

TEST_CASE("batch_to_channels places route g of sample b at channel block g") {
  Tensor t({4, 1, 1, 1}, std::vector<double>{10, 11, 20, 21});  // 2 routes x 2 samples
  const Tensor y = nn::batch_to_channels(Var::constant(t), 2).value();
  CHECK(y.shape() == Shape{2, 2, 1, 1});
  CHECK(y.at(0, 0, 0, 0) == 10);
  CHECK(y.at(0, 1, 0, 0) == 20);
  CHECK(y.at(1, 0, 0, 0) == 11);
  CHECK(y.at(1, 1, 0, 0) == 21);
}

TEST_CASE("resize_bilinear reproduces a linear ramp at interior points") {
  Tensor t({1, 1, 4, 6});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) t.at(0, 0, y, x) = 2.0 * x - 3.0 * y;
  const Tensor u = nn::resize_bilinear(Var::constant(t), 8, 12).value();
  for (int y = 1; y < 7; ++y)
    for (int x = 1; x < 11; ++x) {
      const double sx = (x + 0.5) / 2 - 0.5, sy = (y + 0.5) / 2 - 0.5;
      CHECK(u.at(0, 0, y, x) == doctest::Approx(2.0 * sx - 3.0 * sy).epsilon(1e-12));
    }
}

TEST_CASE("directional_mix gradients in every direction, literal and recursive") {
  for (nn::Direction d : nn::kAllDirections)
    for (bool recursive : {false, true}) {
      Var f = Var::leaf(random_tensor({2, 2, 3, 4}, 30));
      Var a = Var::leaf(random_tensor({2, 2, 3, 4}, 31, 0.05, 0.95));
      const auto r = gradcheck([&] { return probe(nn::directional_mix(f, a, d, recursive), 32); },
                               {{"f", f}, {"A", a}});
      CHECK_MESSAGE(r.max_rel_error() < kGradTol, nn::direction_name(d), recursive);
    }
}

TEST_CASE("recursive mix is a running scan") {
  Tensor f({1, 1, 1, 3}, std::vector<double>{1, 3, 5});
  Tensor a({1, 1, 1, 3}, 0.5);
  const Tensor y = nn::directional_mix(Var::constant(f), Var::constant(a),
                                       nn::Direction::kLeftToRight, true).value();
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 2.0);
  CHECK(y[2] == 3.5);
}

TEST_CASE("iou_loss gradient, joint and per-sample") {
  Tensor y({2, 1, 3, 4});
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = (i % 3 == 0);
  for (bool per_sample : {false, true}) {
    Var p = Var::leaf(random_tensor({2, 1, 3, 4}, 40, 0.05, 0.95));
    const auto r = gradcheck([&] { return nn::iou_loss(p, y, 1e-6, per_sample); }, {{"P", p}});
    CHECK(r.max_rel_error() < kGradTol);
  }
}

TEST_CASE("backward through a shared subgraph accumulates") {
  Var x = Var::leaf(Tensor({1, 1, 1, 1}, 3.0));
  const Var y = nn::mul(x, x);
  nn::backward(nn::sum_all(nn::add(y, y)));
  CHECK(x.grad()[0] == doctest::Approx(12.0));
}

TEST_CASE("no-grad mode builds no graph") {
  Var x = Var::leaf(Tensor({1, 1, 1, 1}, 3.0));
  nn::NoGradGuard guard;
  CHECK_FALSE(nn::mul(x, x).requires_grad());
}

TEST_CASE("parameter store rejects duplicate names and groups parameters") {
  nn::ParamStore store;
  std::mt19937_64 rng(1);
  nn::Conv2d::create(store, "a", nn::ParamGroup::kEncoder, 2, 3, 3, nn::Init::kHeNormal, rng);
  nn::Conv2d::create(store, "b", nn::ParamGroup::kDecoder, 3, 1, 1, nn::Init::kXavierUniform, rng);
  CHECK(store.count(nn::ParamGroup::kEncoder) == 3 * 2 * 9 + 3);
  CHECK(store.count(nn::ParamGroup::kDecoder) == 3 + 1);
  CHECK(store.parameters().size() == 4);
  CHECK_THROWS_AS(store.add("a.weight", nn::ParamGroup::kEncoder, Tensor({1, 1, 1, 1})),
                  std::logic_error);
}

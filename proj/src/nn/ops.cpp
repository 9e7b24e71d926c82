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

#include "nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>

namespace vidnet::nn {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

const Tensor& parent_value(const Node& node, std::size_t i) {
  return node.parents[i]->value;
}

// Adds g into parent i's gradient when that parent wants one.
Tensor* parent_grad(Node& node, std::size_t i) {
  Node& p = *node.parents[i];
  return p.requires_grad ? &p.ensure_grad() : nullptr;
}

// ---------------------------------------------------------------------------
// im2col helpers. col is (C*k*k) x (H*W), row-major.

void im2col(const double* img, int channels, int height, int width, int k,
            int pad, double* col) {
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c) {
    const double* src_plane = img + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(width, width - dx);
        for (int y = 0; y < height; ++y) {
          double* dst = row + static_cast<std::size_t>(y) * width;
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= height || x0 >= x1) {
            std::fill(dst, dst + width, 0.0);
            continue;
          }
          const double* src = src_plane + static_cast<std::size_t>(sy) * width;
          std::fill(dst, dst + x0, 0.0);
          std::memcpy(dst + x0, src + x0 + dx, sizeof(double) * (x1 - x0));
          std::fill(dst + x1, dst + width, 0.0);
        }
      }
    }
  }
}

void col2im_add(const double* col, int channels, int height, int width, int k,
                int pad, double* img) {
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c) {
    double* dst_plane = img + c * hw;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row =
            col + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * hw;
        const int dx = kx - pad;
        const int x0 = std::max(0, -dx);
        const int x1 = std::min(width, width - dx);
        for (int y = 0; y < height; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= height) continue;
          const double* src = row + static_cast<std::size_t>(y) * width;
          double* dst = dst_plane + static_cast<std::size_t>(sy) * width;
          for (int x = x0; x < x1; ++x) dst[x + dx] += src[x];
        }
      }
    }
  }
}

template <typename Fwd, typename Deriv>
Var unary(const Var& x, Fwd fwd, Deriv deriv_from_output) {
  Tensor out(x.shape());
  const Tensor& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return make_result(std::move(out), {x}, [deriv_from_output](Node& node) {
    Tensor* gx = parent_grad(node, 0);
    if (!gx) return;
    const Tensor& in = parent_value(node, 0);
    for (std::size_t i = 0; i < node.value.size(); ++i)
      (*gx)[i] += node.grad[i] * deriv_from_output(in[i], node.value[i]);
  });
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------

Var conv2d(const Var& x, const Var& weight, const Var& bias, int padding) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  require(ws.h == ws.w, "conv2d: kernel must be square");
  require(ws.c == xs.c, "conv2d: input has " + std::to_string(xs.c) +
                            " channels, kernel expects " + std::to_string(ws.c));
  require(2 * padding == ws.h - 1, "conv2d: only 'same' padding is supported");
  if (bias.defined())
    require(bias.value().size() == static_cast<std::size_t>(ws.n),
            "conv2d: bias size mismatch");

  const int k = ws.h;
  const int cout = ws.n;
  const int kdim = xs.c * k * k;
  const int hw = xs.h * xs.w;
  const bool pointwise = (k == 1);

  Tensor out(Shape{xs.n, cout, xs.h, xs.w});
  ConstMatMap wm(weight.value().data(), cout, kdim);
  std::vector<double> col(pointwise ? 0 : static_cast<std::size_t>(kdim) * hw);
  for (int n = 0; n < xs.n; ++n) {
    const double* colp = x.value().plane(n, 0);
    if (!pointwise) {
      im2col(x.value().plane(n, 0), xs.c, xs.h, xs.w, k, padding, col.data());
      colp = col.data();
    }
    MatMap om(out.plane(n, 0), cout, hw);
    om.noalias() = wm * ConstMatMap(colp, kdim, hw);
    if (bias.defined())
      for (int o = 0; o < cout; ++o) om.row(o).array() += bias.value()[o];
  }

  std::vector<Var> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_result(
      std::move(out), std::move(parents),
      [k, padding, cout, kdim, hw, pointwise](Node& node) {
        const Tensor& xin = parent_value(node, 0);
        const Tensor& w = parent_value(node, 1);
        const Shape xs = xin.shape();
        Tensor* gx = parent_grad(node, 0);
        Tensor* gw = parent_grad(node, 1);
        Tensor* gb = node.parents.size() > 2 ? parent_grad(node, 2) : nullptr;
        ConstMatMap wm(w.data(), cout, kdim);
        std::vector<double> col(pointwise ? 0 : static_cast<std::size_t>(kdim) * hw);
        std::vector<double> dcol(
            (gx && !pointwise) ? static_cast<std::size_t>(kdim) * hw : 0);
        for (int n = 0; n < xs.n; ++n) {
          ConstMatMap g(node.grad.plane(n, 0), cout, hw);
          if (gb)
            for (int o = 0; o < cout; ++o) (*gb)[o] += g.row(o).sum();
          if (gw) {
            const double* colp = xin.plane(n, 0);
            if (!pointwise) {
              im2col(xin.plane(n, 0), xs.c, xs.h, xs.w, k, padding, col.data());
              colp = col.data();
            }
            MatMap(gw->data(), cout, kdim).noalias() +=
                g * ConstMatMap(colp, kdim, hw).transpose();
          }
          if (gx) {
            if (pointwise) {
              MatMap(gx->plane(n, 0), kdim, hw).noalias() += wm.transpose() * g;
            } else {
              MatMap(dcol.data(), kdim, hw).noalias() = wm.transpose() * g;
              col2im_add(dcol.data(), xs.c, xs.h, xs.w, k, padding,
                         gx->plane(n, 0));
            }
          }
        }
      });
}

Var relu(const Var& x) {
  return unary(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double in, double) { return in > 0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& x) {
  return unary(x, stable_sigmoid,
               [](double, double out) { return out * (1.0 - out); });
}

Var tanh(const Var& x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double out) { return 1.0 - out * out; });
}

Var add(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " + a.shape().str() +
                                      " vs " + b.shape().str());
  Tensor out = a.value();
  out.add_inplace(b.value());
  return make_result(std::move(out), {a, b}, [](Node& node) {
    for (std::size_t p = 0; p < 2; ++p)
      if (Tensor* g = parent_grad(node, p)) g->add_inplace(node.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), "sub: shape mismatch " + a.shape().str() +
                                      " vs " + b.shape().str());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& node) {
    if (Tensor* g = parent_grad(node, 0)) g->add_inplace(node.grad);
    if (Tensor* g = parent_grad(node, 1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= node.grad[i];
  });
}

Var mul(const Var& a, const Var& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch " + a.shape().str() +
                                      " vs " + b.shape().str());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] * b.value()[i];
  return make_result(std::move(out), {a, b}, [](Node& node) {
    const Tensor& av = parent_value(node, 0);
    const Tensor& bv = parent_value(node, 1);
    if (Tensor* g = parent_grad(node, 0))
      for (std::size_t i = 0; i < g->size(); ++i)
        (*g)[i] += node.grad[i] * bv[i];
    if (Tensor* g = parent_grad(node, 1))
      for (std::size_t i = 0; i < g->size(); ++i)
        (*g)[i] += node.grad[i] * av[i];
  });
}

Var scale(const Var& x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Var max_pool2(const Var& x) {
  const Shape s = x.shape();
  require(s.h >= 2 && s.w >= 2, "max_pool2: input too small " + s.str());
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  Tensor out(os);
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(os.numel());
  std::size_t o = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* in = x.value().plane(n, c);
      for (int y = 0; y < os.h; ++y)
        for (int xx = 0; xx < os.w; ++xx, ++o) {
          std::uint32_t best = (2 * y) * s.w + 2 * xx;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::uint32_t idx = (2 * y + dy) * s.w + 2 * xx + dx;
              if (in[idx] > in[best]) best = idx;
            }
          out[o] = in[best];
          (*argmax)[o] = best;
        }
    }
  return make_result(std::move(out), {x}, [argmax](Node& node) {
    Tensor* gx = parent_grad(node, 0);
    if (!gx) return;
    const Shape os = node.value.shape();
    std::size_t o = 0;
    for (int n = 0; n < os.n; ++n)
      for (int c = 0; c < os.c; ++c) {
        double* g = gx->plane(n, c);
        for (std::size_t i = 0; i < os.plane(); ++i, ++o)
          g[(*argmax)[o]] += node.grad[o];
      }
  });
}

// ---------------------------------------------------------------------------
// Normalization. Both variants share the affine backward; they differ in
// which axes the statistics pool over.

namespace {

struct NormCache {
  Tensor xhat;
  std::vector<double> inv_std;  // per statistics group
};

// groups_are_instances: statistics per (n, c) when true, per c otherwise.
Var normalize_affine(const Var& x, const Var& gamma, const Var& beta,
                     std::shared_ptr<NormCache> cache, bool per_instance) {
  const Shape s = x.shape();
  Tensor out(s);
  const Tensor& g = gamma.value();
  const Tensor& b = beta.value();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* xh = cache->xhat.plane(n, c);
      double* o = out.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) o[i] = g[c] * xh[i] + b[c];
    }
  return make_result(
      std::move(out), {x, gamma, beta}, [cache, per_instance](Node& node) {
        const Shape s = node.value.shape();
        const Tensor& gamma = parent_value(node, 1);
        Tensor* gx = parent_grad(node, 0);
        Tensor* gg = parent_grad(node, 1);
        Tensor* gb = parent_grad(node, 2);
        const double plane = static_cast<double>(s.plane());
        const double count = per_instance ? plane : plane * s.n;
        for (int c = 0; c < s.c; ++c) {
          // Channel totals over the statistics group.
          auto group_sums = [&](int n0, int n1, double& sdy, double& sdyx) {
            sdy = 0.0;
            sdyx = 0.0;
            for (int n = n0; n < n1; ++n) {
              const double* dy = node.grad.plane(n, c);
              const double* xh = cache->xhat.plane(n, c);
              for (std::size_t i = 0; i < s.plane(); ++i) {
                sdy += dy[i];
                sdyx += dy[i] * xh[i];
              }
            }
          };
          auto apply = [&](int n0, int n1, double sdy, double sdyx,
                           double inv_std) {
            if (!gx) return;
            const double k = gamma[c] * inv_std / count;
            for (int n = n0; n < n1; ++n) {
              const double* dy = node.grad.plane(n, c);
              const double* xh = cache->xhat.plane(n, c);
              double* dx = gx->plane(n, c);
              for (std::size_t i = 0; i < s.plane(); ++i)
                dx[i] += k * (count * dy[i] - sdy - xh[i] * sdyx);
            }
          };
          if (per_instance) {
            for (int n = 0; n < s.n; ++n) {
              double sdy, sdyx;
              group_sums(n, n + 1, sdy, sdyx);
              if (gg) (*gg)[c] += sdyx;
              if (gb) (*gb)[c] += sdy;
              apply(n, n + 1, sdy, sdyx, cache->inv_std[n * s.c + c]);
            }
          } else {
            double sdy, sdyx;
            group_sums(0, s.n, sdy, sdyx);
            if (gg) (*gg)[c] += sdyx;
            if (gb) (*gb)[c] += sdy;
            apply(0, s.n, sdy, sdyx, cache->inv_std[c]);
          }
        }
      });
}

}  // namespace

Var batch_norm(const Var& x, const Var& gamma, const Var& beta,
               RunningStats& running, bool training, double momentum,
               double eps) {
  const Shape s = x.shape();
  require(gamma.value().size() == static_cast<std::size_t>(s.c) &&
              beta.value().size() == static_cast<std::size_t>(s.c),
          "batch_norm: affine size mismatch");
  if (running.mean.empty()) {
    running.mean = Tensor(Shape{1, s.c, 1, 1}, 0.0);
    running.var = Tensor(Shape{1, s.c, 1, 1}, 1.0);
  }
  auto cache = std::make_shared<NormCache>();
  cache->xhat = Tensor(s);
  cache->inv_std.assign(s.c, 0.0);
  const double count = static_cast<double>(s.plane()) * s.n;

  if (!training) {
    // Fixed statistics make this an affine map of x.
    Tensor out(s);
    for (int c = 0; c < s.c; ++c) {
      const double inv = 1.0 / std::sqrt(running.var[c] + eps);
      cache->inv_std[c] = inv;
      for (int n = 0; n < s.n; ++n) {
        const double* in = x.value().plane(n, c);
        double* xh = cache->xhat.plane(n, c);
        double* o = out.plane(n, c);
        for (std::size_t i = 0; i < s.plane(); ++i) {
          xh[i] = (in[i] - running.mean[c]) * inv;
          o[i] = gamma.value()[c] * xh[i] + beta.value()[c];
        }
      }
    }
    return make_result(std::move(out), {x, gamma, beta}, [cache](Node& node) {
      const Shape s = node.value.shape();
      const Tensor& gamma = parent_value(node, 1);
      Tensor* gx = parent_grad(node, 0);
      Tensor* gg = parent_grad(node, 1);
      Tensor* gb = parent_grad(node, 2);
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
          const double* dy = node.grad.plane(n, c);
          const double* xh = cache->xhat.plane(n, c);
          for (std::size_t i = 0; i < s.plane(); ++i) {
            if (gx) gx->plane(n, c)[i] += dy[i] * gamma[c] * cache->inv_std[c];
            if (gg) (*gg)[c] += dy[i] * xh[i];
            if (gb) (*gb)[c] += dy[i];
          }
        }
    });
  }

  for (int c = 0; c < s.c; ++c) {
    double mean = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const double* in = x.value().plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) mean += in[i];
    }
    mean /= count;
    double var = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const double* in = x.value().plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i)
        var += (in[i] - mean) * (in[i] - mean);
    }
    var /= count;
    const double inv = 1.0 / std::sqrt(var + eps);
    cache->inv_std[c] = inv;
    for (int n = 0; n < s.n; ++n) {
      const double* in = x.value().plane(n, c);
      double* xh = cache->xhat.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) xh[i] = (in[i] - mean) * inv;
    }
    const double unbiased = count > 1 ? var * count / (count - 1) : var;
    running.mean[c] = (1 - momentum) * running.mean[c] + momentum * mean;
    running.var[c] = (1 - momentum) * running.var[c] + momentum * unbiased;
  }
  return normalize_affine(x, gamma, beta, cache, /*per_instance=*/false);
}

Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const Shape s = x.shape();
  require(gamma.value().size() == static_cast<std::size_t>(s.c) &&
              beta.value().size() == static_cast<std::size_t>(s.c),
          "instance_norm: affine size mismatch");
  auto cache = std::make_shared<NormCache>();
  cache->xhat = Tensor(s);
  cache->inv_std.assign(static_cast<std::size_t>(s.n) * s.c, 0.0);
  const double count = static_cast<double>(s.plane());
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* in = x.value().plane(n, c);
      double mean = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) mean += in[i];
      mean /= count;
      double var = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i)
        var += (in[i] - mean) * (in[i] - mean);
      var /= count;
      const double inv = 1.0 / std::sqrt(var + eps);
      cache->inv_std[n * s.c + c] = inv;
      double* xh = cache->xhat.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) xh[i] = (in[i] - mean) * inv;
    }
  return normalize_affine(x, gamma, beta, cache, /*per_instance=*/true);
}

Var dropout(const Var& x, double p, std::mt19937_64& rng, bool training) {
  require(p >= 0.0 && p < 1.0, "dropout: rate must be in [0, 1)");
  if (!training || p == 0.0) return x;
  auto mask = std::make_shared<Tensor>(x.shape());
  std::bernoulli_distribution keep(1.0 - p);
  const double inv_keep = 1.0 / (1.0 - p);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = keep(rng) ? inv_keep : 0.0;
    out[i] = x.value()[i] * (*mask)[i];
  }
  return make_result(std::move(out), {x}, [mask](Node& node) {
    if (Tensor* g = parent_grad(node, 0))
      for (std::size_t i = 0; i < g->size(); ++i)
        (*g)[i] += node.grad[i] * (*mask)[i];
  });
}

Var l2_normalize(const Var& x, L2Axis axis, double eps) {
  const Shape s = x.shape();
  Tensor out(s);
  const Tensor& in = x.value();
  const std::size_t hw = s.plane();
  const bool per_location = axis == L2Axis::kChannelsPerLocation;
  // One norm per location (n, p) or per plane (n, c).
  auto norms = std::make_shared<std::vector<double>>(
      static_cast<std::size_t>(s.n) * (per_location ? hw : s.c));
  for (int n = 0; n < s.n; ++n) {
    if (per_location) {
      for (std::size_t p = 0; p < hw; ++p) {
        double ss = 0.0;
        for (int c = 0; c < s.c; ++c) ss += in.plane(n, c)[p] * in.plane(n, c)[p];
        const double r = std::sqrt(ss + eps);
        (*norms)[n * hw + p] = r;
        for (int c = 0; c < s.c; ++c) out.plane(n, c)[p] = in.plane(n, c)[p] / r;
      }
    } else {
      for (int c = 0; c < s.c; ++c) {
        double ss = 0.0;
        for (std::size_t p = 0; p < hw; ++p) ss += in.plane(n, c)[p] * in.plane(n, c)[p];
        const double r = std::sqrt(ss + eps);
        (*norms)[n * s.c + c] = r;
        for (std::size_t p = 0; p < hw; ++p) out.plane(n, c)[p] = in.plane(n, c)[p] / r;
      }
    }
  }
  return make_result(std::move(out), {x}, [norms, per_location](Node& node) {
    Tensor* gx = parent_grad(node, 0);
    if (!gx) return;
    const Shape s = node.value.shape();
    const std::size_t hw = s.plane();
    const Tensor& y = node.value;
    const Tensor& g = node.grad;
    for (int n = 0; n < s.n; ++n) {
      if (per_location) {
        for (std::size_t p = 0; p < hw; ++p) {
          double dot = 0.0;
          for (int c = 0; c < s.c; ++c) dot += g.plane(n, c)[p] * y.plane(n, c)[p];
          const double r = (*norms)[n * hw + p];
          for (int c = 0; c < s.c; ++c)
            gx->plane(n, c)[p] += (g.plane(n, c)[p] - y.plane(n, c)[p] * dot) / r;
        }
      } else {
        for (int c = 0; c < s.c; ++c) {
          double dot = 0.0;
          for (std::size_t p = 0; p < hw; ++p) dot += g.plane(n, c)[p] * y.plane(n, c)[p];
          const double r = (*norms)[n * s.c + c];
          for (std::size_t p = 0; p < hw; ++p)
            gx->plane(n, c)[p] += (g.plane(n, c)[p] - y.plane(n, c)[p] * dot) / r;
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Layout ops.

Var concat_channels(std::span<const Var> parts) {
  require(!parts.empty(), "concat_channels: no inputs");
  Shape s = parts[0].shape();
  int total = 0;
  for (const auto& p : parts) {
    const Shape ps = p.shape();
    require(ps.n == s.n && ps.h == s.h && ps.w == s.w,
            "concat_channels: spatial/batch mismatch " + ps.str() + " vs " +
                s.str());
    total += ps.c;
  }
  Shape os{s.n, total, s.h, s.w};
  Tensor out(os);
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    for (int n = 0; n < s.n; ++n)
      std::memcpy(out.plane(n, off), p.value().plane(n, 0),
                  sizeof(double) * p.shape().c * s.plane());
    off += p.shape().c;
  }
  return make_result(std::move(out), {parts.begin(), parts.end()},
                     [offsets](Node& node) {
                       const Shape os = node.value.shape();
                       for (std::size_t i = 0; i < node.parents.size(); ++i) {
                         Tensor* g = parent_grad(node, i);
                         if (!g) continue;
                         const std::size_t len = g->c() * os.plane();
                         for (int n = 0; n < os.n; ++n) {
                           const double* src = node.grad.plane(n, offsets[i]);
                           double* dst = g->plane(n, 0);
                           for (std::size_t j = 0; j < len; ++j) dst[j] += src[j];
                         }
                       }
                     });
}

Var slice_channels(const Var& x, int begin, int end) {
  const Shape s = x.shape();
  require(0 <= begin && begin < end && end <= s.c,
          "slice_channels: bad range for " + s.str());
  Shape os{s.n, end - begin, s.h, s.w};
  Tensor out(os);
  for (int n = 0; n < s.n; ++n)
    std::memcpy(out.plane(n, 0), x.value().plane(n, begin),
                sizeof(double) * os.c * s.plane());
  return make_result(std::move(out), {x}, [begin](Node& node) {
    Tensor* g = parent_grad(node, 0);
    if (!g) return;
    const Shape os = node.value.shape();
    const std::size_t len = os.c * os.plane();
    for (int n = 0; n < os.n; ++n) {
      const double* src = node.grad.plane(n, 0);
      double* dst = g->plane(n, begin);
      for (std::size_t j = 0; j < len; ++j) dst[j] += src[j];
    }
  });
}

namespace {
struct Interp {
  int i0, i1;
  double frac;
};

std::vector<Interp> interp_table(int in, int out) {
  std::vector<Interp> t(out);
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    if (src < 0) src = 0;
    int i0 = static_cast<int>(std::floor(src));
    if (i0 >= in - 1) {
      t[o] = {in - 1, in - 1, 0.0};
    } else {
      t[o] = {i0, i0 + 1, src - i0};
    }
  }
  return t;
}
}  // namespace

Var resize_bilinear(const Var& x, int height, int width) {
  const Shape s = x.shape();
  require(height > 0 && width > 0, "resize_bilinear: non-positive target");
  auto ty = std::make_shared<std::vector<Interp>>(interp_table(s.h, height));
  auto tx = std::make_shared<std::vector<Interp>>(interp_table(s.w, width));
  Shape os{s.n, s.c, height, width};
  Tensor out(os);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* in = x.value().plane(n, c);
      double* o = out.plane(n, c);
      for (int y = 0; y < height; ++y) {
        const Interp& iy = (*ty)[y];
        const double* r0 = in + static_cast<std::size_t>(iy.i0) * s.w;
        const double* r1 = in + static_cast<std::size_t>(iy.i1) * s.w;
        for (int xx = 0; xx < width; ++xx) {
          const Interp& ix = (*tx)[xx];
          const double top = r0[ix.i0] + ix.frac * (r0[ix.i1] - r0[ix.i0]);
          const double bot = r1[ix.i0] + ix.frac * (r1[ix.i1] - r1[ix.i0]);
          o[static_cast<std::size_t>(y) * width + xx] = top + iy.frac * (bot - top);
        }
      }
    }
  return make_result(std::move(out), {x}, [ty, tx](Node& node) {
    Tensor* gx = parent_grad(node, 0);
    if (!gx) return;
    const Shape os = node.value.shape();
    const int in_w = gx->w();
    for (int n = 0; n < os.n; ++n)
      for (int c = 0; c < os.c; ++c) {
        const double* g = node.grad.plane(n, c);
        double* d = gx->plane(n, c);
        for (int y = 0; y < os.h; ++y) {
          const Interp& iy = (*ty)[y];
          for (int xx = 0; xx < os.w; ++xx) {
            const Interp& ix = (*tx)[xx];
            const double v = g[static_cast<std::size_t>(y) * os.w + xx];
            const double top = v * (1 - iy.frac);
            const double bot = v * iy.frac;
            d[iy.i0 * in_w + ix.i0] += top * (1 - ix.frac);
            d[iy.i0 * in_w + ix.i1] += top * ix.frac;
            d[iy.i1 * in_w + ix.i0] += bot * (1 - ix.frac);
            d[iy.i1 * in_w + ix.i1] += bot * ix.frac;
          }
        }
      }
  });
}

Var repeat_batch(const Var& x, int times) {
  require(times >= 1, "repeat_batch: times must be positive");
  if (times == 1) return x;
  const Shape s = x.shape();
  Tensor out(Shape{s.n * times, s.c, s.h, s.w});
  const std::size_t block = s.numel();
  for (int t = 0; t < times; ++t)
    std::memcpy(out.data() + t * block, x.value().data(), sizeof(double) * block);
  return make_result(std::move(out), {x}, [times, block](Node& node) {
    Tensor* g = parent_grad(node, 0);
    if (!g) return;
    for (int t = 0; t < times; ++t)
      for (std::size_t i = 0; i < block; ++i) (*g)[i] += node.grad[t * block + i];
  });
}

Var batch_to_channels(const Var& x, int groups) {
  const Shape s = x.shape();
  require(groups >= 1 && s.n % groups == 0,
          "batch_to_channels: batch not divisible by groups");
  const int b = s.n / groups;
  Tensor out(Shape{b, groups * s.c, s.h, s.w});
  const std::size_t len = s.c * s.plane();
  for (int g = 0; g < groups; ++g)
    for (int n = 0; n < b; ++n)
      std::memcpy(out.plane(n, g * s.c), x.value().plane(g * b + n, 0),
                  sizeof(double) * len);
  return make_result(std::move(out), {x}, [groups, b, len](Node& node) {
    Tensor* gx = parent_grad(node, 0);
    if (!gx) return;
    const int c = gx->c();
    for (int g = 0; g < groups; ++g)
      for (int n = 0; n < b; ++n) {
        const double* src = node.grad.plane(n, g * c);
        double* dst = gx->plane(g * b + n, 0);
        for (std::size_t j = 0; j < len; ++j) dst[j] += src[j];
      }
  });
}

Var slice_batch(const Var& x, int begin, int end) {
  const Shape s = x.shape();
  require(0 <= begin && begin < end && end <= s.n,
          "slice_batch: bad range for " + s.str());
  Tensor out(Shape{end - begin, s.c, s.h, s.w});
  const std::size_t block = static_cast<std::size_t>(s.c) * s.plane();
  std::memcpy(out.data(), x.value().data() + begin * block,
              sizeof(double) * out.size());
  return make_result(std::move(out), {x}, [begin, block](Node& node) {
    Tensor* g = parent_grad(node, 0);
    if (!g) return;
    double* dst = g->data() + begin * block;
    for (std::size_t i = 0; i < node.grad.size(); ++i) dst[i] += node.grad[i];
  });
}

Var concat_batch(std::span<const Var> parts) {
  require(!parts.empty(), "concat_batch: no inputs");
  const Shape s0 = parts[0].shape();
  int n = 0;
  for (const Var& p : parts) {
    const Shape s = p.shape();
    require(s.c == s0.c && s.h == s0.h && s.w == s0.w,
            "concat_batch: shape mismatch " + s0.str() + " vs " + s.str());
    n += s.n;
  }
  Tensor out(Shape{n, s0.c, s0.h, s0.w});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::memcpy(out.data() + offset, p.value().data(),
                sizeof(double) * p.value().size());
    offset += p.value().size();
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return make_result(std::move(out), parents, [](Node& node) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < node.parents.size(); ++k) {
      const std::size_t len = node.parents[k]->value.size();
      if (Tensor* g = parent_grad(node, k)) {
        for (std::size_t i = 0; i < len; ++i) (*g)[i] += node.grad[offset + i];
      }
      offset += len;
    }
  });
}

Var crop(const Var& x, int height, int width) {
  const Shape s = x.shape();
  require(height >= 1 && width >= 1 && height <= s.h && width <= s.w,
          "crop: target larger than input " + s.str());
  if (height == s.h && width == s.w) return x;
  Tensor out(Shape{s.n, s.c, height, width});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < height; ++y)
        std::memcpy(out.plane(n, c) + static_cast<std::size_t>(y) * width,
                    x.value().plane(n, c) + static_cast<std::size_t>(y) * s.w,
                    sizeof(double) * width);
  return make_result(std::move(out), {x}, [](Node& node) {
    Tensor* g = parent_grad(node, 0);
    if (!g) return;
    const Shape os = node.value.shape();
    for (int n = 0; n < os.n; ++n)
      for (int c = 0; c < os.c; ++c)
        for (int y = 0; y < os.h; ++y)
          for (int xx = 0; xx < os.w; ++xx)
            g->plane(n, c)[static_cast<std::size_t>(y) * g->w() + xx] +=
                node.grad.plane(n, c)[static_cast<std::size_t>(y) * os.w + xx];
  });
}

// ---------------------------------------------------------------------------

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::kLeftToRight: return "lr";
    case Direction::kRightToLeft: return "rl";
    case Direction::kTopToBottom: return "tb";
    case Direction::kBottomToTop: return "bt";
  }
  return "?";
}

namespace {

// Walks a plane as lines ordered along the direction of travel: step s = 0 is
// the boundary (no neighbour) and step s - 1 is the neighbour of step s.
struct LineWalk {
  int lines = 0;
  int length = 0;
  int h = 0, w = 0;
  Direction dir{};

  LineWalk(Direction d, int height, int width) : h(height), w(width), dir(d) {
    const bool horizontal =
        d == Direction::kLeftToRight || d == Direction::kRightToLeft;
    lines = horizontal ? height : width;
    length = horizontal ? width : height;
  }
  std::size_t at(int line, int s) const {
    switch (dir) {
      case Direction::kLeftToRight:
        return static_cast<std::size_t>(line) * w + s;
      case Direction::kRightToLeft:
        return static_cast<std::size_t>(line) * w + (w - 1 - s);
      case Direction::kTopToBottom:
        return static_cast<std::size_t>(s) * w + line;
      case Direction::kBottomToTop:
        return static_cast<std::size_t>(h - 1 - s) * w + line;
    }
    return 0;
  }
};

}  // namespace

Var directional_mix(const Var& f, const Var& attention, Direction direction,
                    bool recursive) {
  require(f.shape() == attention.shape(),
          "directional_mix: attention shape " + attention.shape().str() +
              " does not match features " + f.shape().str());
  const Shape s = f.shape();
  Tensor out(s);
  const LineWalk walk(direction, s.h, s.w);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* fv = f.value().plane(n, c);
      const double* a = attention.value().plane(n, c);
      double* o = out.plane(n, c);
      for (int line = 0; line < walk.lines; ++line) {
        o[walk.at(line, 0)] = fv[walk.at(line, 0)];
        for (int st = 1; st < walk.length; ++st) {
          const std::size_t k = walk.at(line, st);
          const std::size_t prev = walk.at(line, st - 1);
          const double neighbour = recursive ? o[prev] : fv[prev];
          o[k] = (1.0 - a[k]) * fv[k] + a[k] * neighbour;
        }
      }
    }
  return make_result(
      std::move(out), {f, attention}, [direction, recursive](Node& node) {
        const Tensor& fval = parent_value(node, 0);
        const Tensor& aval = parent_value(node, 1);
        Tensor* gf = parent_grad(node, 0);
        Tensor* ga = parent_grad(node, 1);
        const Shape s = node.value.shape();
        const LineWalk walk(direction, s.h, s.w);
        std::vector<double> carry(walk.length);
        for (int n = 0; n < s.n; ++n)
          for (int c = 0; c < s.c; ++c) {
            const double* fv = fval.plane(n, c);
            const double* a = aval.plane(n, c);
            const double* o = node.value.plane(n, c);
            const double* g = node.grad.plane(n, c);
            double* df = gf ? gf->plane(n, c) : nullptr;
            double* da = ga ? ga->plane(n, c) : nullptr;
            for (int line = 0; line < walk.lines; ++line) {
              if (!recursive) {
                if (df) df[walk.at(line, 0)] += g[walk.at(line, 0)];
                for (int st = 1; st < walk.length; ++st) {
                  const std::size_t k = walk.at(line, st);
                  const std::size_t prev = walk.at(line, st - 1);
                  if (df) {
                    df[k] += g[k] * (1.0 - a[k]);
                    df[prev] += g[k] * a[k];
                  }
                  if (da) da[k] += g[k] * (fv[prev] - fv[k]);
                }
                continue;
              }
              for (int st = 0; st < walk.length; ++st)
                carry[st] = g[walk.at(line, st)];
              for (int st = walk.length - 1; st >= 1; --st) {
                const std::size_t k = walk.at(line, st);
                const std::size_t prev = walk.at(line, st - 1);
                if (df) df[k] += carry[st] * (1.0 - a[k]);
                if (da) da[k] += carry[st] * (o[prev] - fv[k]);
                carry[st - 1] += carry[st] * a[k];
              }
              if (df) df[walk.at(line, 0)] += carry[0];
            }
          }
      });
}

Var iou_loss(const Var& p, const Tensor& y, double eps, bool per_sample) {
  require(p.shape() == y.shape(), "iou_loss: prediction " + p.shape().str() +
                                      " and mask " + y.shape().str() +
                                      " differ in shape");
  const Shape s = p.shape();
  const int groups = per_sample ? s.n : 1;
  const std::size_t len = p.value().size() / groups;
  auto inter = std::make_shared<std::vector<double>>(groups, 0.0);
  auto uni = std::make_shared<std::vector<double>>(groups, 0.0);
  double loss = 0.0;
  for (int gi = 0; gi < groups; ++gi) {
    const double* pv = p.value().data() + gi * len;
    const double* yv = y.data() + gi * len;
    double i_sum = 0.0, u_sum = 0.0;
    for (std::size_t j = 0; j < len; ++j) {
      i_sum += pv[j] * yv[j];
      u_sum += pv[j] + yv[j] - pv[j] * yv[j];
    }
    (*inter)[gi] = i_sum;
    (*uni)[gi] = u_sum + eps;
    loss += 1.0 - i_sum / (u_sum + eps);
  }
  loss /= groups;
  auto target = std::make_shared<Tensor>(y);
  return make_result(Tensor(Shape{}, loss), {p},
                     [inter, uni, target, groups, len](Node& node) {
                       Tensor* gp = parent_grad(node, 0);
                       if (!gp) return;
                       const double up = node.grad[0] / groups;
                       for (int gi = 0; gi < groups; ++gi) {
                         const double i_sum = (*inter)[gi];
                         const double u = (*uni)[gi];
                         const double* yv = target->data() + gi * len;
                         double* d = gp->data() + gi * len;
                         for (std::size_t j = 0; j < len; ++j)
                           d[j] += up * -(yv[j] * u - i_sum * (1.0 - yv[j])) /
                                   (u * u);
                       }
                     });
}

Var sum_all(const Var& x) {
  return make_result(Tensor(Shape{}, x.value().sum()), {x}, [](Node& node) {
    if (Tensor* g = parent_grad(node, 0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += node.grad[0];
  });
}

}  // namespace vidnet::nn

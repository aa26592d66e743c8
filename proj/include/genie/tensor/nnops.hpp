/* Copyright 2026 The Genie Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GENIE_TENSOR_NNOPS_HPP_
#define GENIE_TENSOR_NNOPS_HPP_

// Network-level ops: convolution (im2col + gemm, the column buffer is
// recomputed in backward instead of stored), linear, pooling, padding,
// upsampling, cross entropy, batch norm and the LSQ activation quantizer.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "genie/rng.hpp"
#include "genie/tensor/ops.hpp"
#include "genie/tensor/tensor.hpp"

namespace genie::tns {
namespace detail {

template <typename T>
void gemm(bool ta, bool tb, int m, int n, int k, T alpha, const T* a, int lda,
          const T* b, int ldb, T beta, T* c, int ldc) {
  if constexpr (std::is_same_v<T, float>) {
    kern::table().sgemm(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int p = 0; p < k; ++p) {
          T av = ta ? a[static_cast<std::size_t>(p) * lda + i]
                    : a[static_cast<std::size_t>(i) * lda + p];
          T bv = tb ? b[static_cast<std::size_t>(j) * ldb + p]
                    : b[static_cast<std::size_t>(p) * ldb + j];
          acc += double(av) * bv;
        }
        T* cp = c + static_cast<std::size_t>(i) * ldc + j;
        *cp = static_cast<T>(alpha * acc + (beta == T(0) ? 0.0 : beta * *cp));
      }
  }
}

struct ConvDims {
  int n, ci, h, w;
  int co, kh, kw;
  int stride, pad;
  int oh, ow;
  std::size_t k() const { return std::size_t(ci) * kh * kw; }
  std::size_t s() const { return std::size_t(oh) * ow; }
};

template <typename T>
void im2col(const T* x, const ConvDims& d, T* col) {
  for (int ci = 0; ci < d.ci; ++ci)
    for (int kh = 0; kh < d.kh; ++kh)
      for (int kw = 0; kw < d.kw; ++kw) {
        T* crow = col + ((std::size_t(ci) * d.kh + kh) * d.kw + kw) * d.s();
        for (int oh = 0; oh < d.oh; ++oh) {
          int ih = oh * d.stride - d.pad + kh;
          T* dst = crow + std::size_t(oh) * d.ow;
          if (ih < 0 || ih >= d.h) {
            std::memset(dst, 0, sizeof(T) * d.ow);
            continue;
          }
          const T* xrow = x + (std::size_t(ci) * d.h + ih) * d.w;
          for (int ow = 0; ow < d.ow; ++ow) {
            int iw = ow * d.stride - d.pad + kw;
            dst[ow] = (iw >= 0 && iw < d.w) ? xrow[iw] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_acc(const T* col, const ConvDims& d, T* dx) {
  for (int ci = 0; ci < d.ci; ++ci)
    for (int kh = 0; kh < d.kh; ++kh)
      for (int kw = 0; kw < d.kw; ++kw) {
        const T* crow =
            col + ((std::size_t(ci) * d.kh + kh) * d.kw + kw) * d.s();
        for (int oh = 0; oh < d.oh; ++oh) {
          int ih = oh * d.stride - d.pad + kh;
          if (ih < 0 || ih >= d.h) continue;
          T* xrow = dx + (std::size_t(ci) * d.h + ih) * d.w;
          const T* src = crow + std::size_t(oh) * d.ow;
          for (int ow = 0; ow < d.ow; ++ow) {
            int iw = ow * d.stride - d.pad + kw;
            if (iw >= 0 && iw < d.w) xrow[iw] += src[ow];
          }
        }
      }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: x NCHW, w OIHW, optional bias O, zero padding

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int stride, int pad) {
  GENIE_CHECK(x.shape().size() == 4 && w.shape().size() == 4, ShapeError,
              "conv2d: expected 4-d input and weight");
  detail::ConvDims d;
  d.n = x.dim(0);
  d.ci = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.co = w.dim(0);
  d.kh = w.dim(2);
  d.kw = w.dim(3);
  d.stride = stride;
  d.pad = pad;
  GENIE_CHECK(w.dim(1) == d.ci, ShapeError,
              "conv2d: input has " + std::to_string(d.ci) +
                  " channels, weight expects " + std::to_string(w.dim(1)));
  GENIE_CHECK(stride >= 1 && pad >= 0, ConfigError,
              "conv2d: stride must be >= 1 and padding >= 0");
  GENIE_CHECK(d.h + 2 * pad >= d.kh && d.w + 2 * pad >= d.kw, ShapeError,
              "conv2d: padded input smaller than kernel");
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  if (bias.defined())
    GENIE_CHECK(bias.size() == std::size_t(d.co), ShapeError,
                "conv2d: bias length mismatch");
  detail::check_finite(x, "conv2d");

  std::size_t k = d.k(), s = d.s();
  std::vector<T> out(std::size_t(d.n) * d.co * s);
  std::vector<T> col(k * s);
  for (int n = 0; n < d.n; ++n) {
    detail::im2col(x.data().data() + std::size_t(n) * d.ci * d.h * d.w, d,
                   col.data());
    detail::gemm(false, false, d.co, int(s), int(k), T(1), w.data().data(),
                 int(k), col.data(), int(s), T(0),
                 out.data() + std::size_t(n) * d.co * s, int(s));
  }
  if (bias.defined()) {
    const T* b = bias.data().data();
    for (int n = 0; n < d.n; ++n)
      for (int co = 0; co < d.co; ++co) {
        T* row = out.data() + (std::size_t(n) * d.co + co) * s;
        for (std::size_t i = 0; i < s; ++i) row[i] += b[co];
      }
  }

  std::vector<Tensor<T>> parents = {x, w};
  if (bias.defined()) parents.push_back(bias);
  return make_op(
      Shape{d.n, d.co, d.oh, d.ow}, std::move(out), std::move(parents),
      [d](Node<T>& nd) {
        auto& px = *nd.parents[0];
        auto& pw = *nd.parents[1];
        Node<T>* pb = nd.parents.size() > 2 ? nd.parents[2].get() : nullptr;
        std::size_t k = d.k(), s = d.s();
        if (px.requires_grad) px.ensure_grad();
        if (pw.requires_grad) pw.ensure_grad();
        if (pb && pb->requires_grad) pb->ensure_grad();
        std::vector<T> col(pw.requires_grad ? k * s : 0);
        std::vector<T> dcol(px.requires_grad ? k * s : 0);
        for (int n = 0; n < d.n; ++n) {
          const T* dy = nd.grad.data() + std::size_t(n) * d.co * s;
          if (pw.requires_grad) {
            detail::im2col(px.value.data() + std::size_t(n) * d.ci * d.h * d.w,
                           d, col.data());
            detail::gemm(false, true, d.co, int(k), int(s), T(1), dy, int(s),
                         col.data(), int(s), T(1), pw.grad.data(), int(k));
          }
          if (px.requires_grad) {
            detail::gemm(true, false, int(k), int(s), d.co, T(1),
                         pw.value.data(), int(k), dy, int(s), T(0),
                         dcol.data(), int(s));
            detail::col2im_acc(dcol.data(), d,
                               px.grad.data() +
                                   std::size_t(n) * d.ci * d.h * d.w);
          }
          if (pb && pb->requires_grad) {
            for (int co = 0; co < d.co; ++co) {
              double acc = 0.0;
              const T* row = dy + std::size_t(co) * s;
              for (std::size_t i = 0; i < s; ++i) acc += row[i];
              pb->grad[co] += static_cast<T>(acc);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad) {
  return conv2d(x, w, Tensor<T>(), stride, pad);
}

// ---------------------------------------------------------------------------
// linear: y = x wᵀ + b

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  GENIE_CHECK(x.shape().size() == 2 && w.shape().size() == 2, ShapeError,
              "linear: expected 2-d input and weight");
  int n = x.dim(0), dIn = x.dim(1), m = w.dim(0);
  GENIE_CHECK(w.dim(1) == dIn, ShapeError,
              "linear: input dim " + std::to_string(dIn) +
                  " vs weight dim " + std::to_string(w.dim(1)));
  GENIE_CHECK(b.size() == std::size_t(m), ShapeError,
              "linear: bias length mismatch");
  std::vector<T> out(std::size_t(n) * m);
  detail::gemm(false, true, n, m, dIn, T(1), x.data().data(), dIn,
               w.data().data(), dIn, T(0), out.data(), m);
  const T* bd = b.data().data();
  for (int i = 0; i < n; ++i) {
    T* row = out.data() + std::size_t(i) * m;
    for (int j = 0; j < m; ++j) row[j] += bd[j];
  }
  return make_op(
      Shape{n, m}, std::move(out), {x, w, b}, [n, dIn, m](Node<T>& nd) {
        auto& px = *nd.parents[0];
        auto& pw = *nd.parents[1];
        auto& pb = *nd.parents[2];
        const T* dy = nd.grad.data();
        if (px.requires_grad) {
          px.ensure_grad();
          detail::gemm(false, false, n, dIn, m, T(1), dy, m, pw.value.data(),
                       dIn, T(1), px.grad.data(), dIn);
        }
        if (pw.requires_grad) {
          pw.ensure_grad();
          detail::gemm(true, false, m, dIn, n, T(1), dy, m, px.value.data(),
                       dIn, T(1), pw.grad.data(), dIn);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (int i = 0; i < n; ++i)
            detail::add_into(pb.grad, dy + std::size_t(i) * m, m);
        }
      });
}

// ---------------------------------------------------------------------------
// pooling / upsampling

template <typename T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int k, int stride) {
  GENIE_CHECK(x.shape().size() == 4, ShapeError, "avg_pool2d: expected NCHW");
  GENIE_CHECK(k >= 1 && stride >= 1, ConfigError,
              "avg_pool2d: window and stride must be >= 1");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  GENIE_CHECK(h >= k && w >= k, ShapeError, "avg_pool2d: window exceeds input");
  int oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  std::vector<T> out(std::size_t(n) * c * oh * ow);
  const T* xd = x.data().data();
  T inv = T(1) / static_cast<T>(k * k);
  std::size_t idx = 0;
  for (int i = 0; i < n * c; ++i) {
    const T* plane = xd + std::size_t(i) * h * w;
    for (int po = 0; po < oh; ++po)
      for (int qo = 0; qo < ow; ++qo, ++idx) {
        T acc = 0;
        for (int a = 0; a < k; ++a)
          for (int bq = 0; bq < k; ++bq)
            acc += plane[(po * stride + a) * w + qo * stride + bq];
        out[idx] = acc * inv;
      }
  }
  return make_op(
      Shape{n, c, oh, ow}, std::move(out), {x},
      [n, c, h, w, k, stride, oh, ow](Node<T>& nd) {
        auto& p = *nd.parents[0];
        p.ensure_grad();
        T inv = T(1) / static_cast<T>(k * k);
        std::size_t idx = 0;
        for (int i = 0; i < n * c; ++i) {
          T* plane = p.grad.data() + std::size_t(i) * h * w;
          for (int po = 0; po < oh; ++po)
            for (int qo = 0; qo < ow; ++qo, ++idx) {
              T g = nd.grad[idx] * inv;
              for (int a = 0; a < k; ++a)
                for (int bq = 0; bq < k; ++bq)
                  plane[(po * stride + a) * w + qo * stride + bq] += g;
            }
        }
      });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  GENIE_CHECK(x.shape().size() == 4, ShapeError,
              "global_avg_pool: expected NCHW");
  int n = x.dim(0), c = x.dim(1);
  std::size_t hw = std::size_t(x.dim(2)) * x.dim(3);
  std::vector<T> out(std::size_t(n) * c);
  const T* xd = x.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    double acc = 0.0;
    const T* plane = xd + i * hw;
    for (std::size_t j = 0; j < hw; ++j) acc += plane[j];
    out[i] = static_cast<T>(acc / static_cast<double>(hw));
  }
  return make_op(Shape{n, c}, std::move(out), {x}, [hw](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    T inv = T(1) / static_cast<T>(hw);
    for (std::size_t i = 0; i < nd.grad.size(); ++i) {
      T g = nd.grad[i] * inv;
      T* plane = p.grad.data() + i * hw;
      for (std::size_t j = 0; j < hw; ++j) plane[j] += g;
    }
  });
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
  GENIE_CHECK(x.shape().size() == 4, ShapeError,
              "upsample_nearest2x: expected NCHW");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  std::vector<T> out(std::size_t(n) * c * 4 * h * w);
  const T* xd = x.data().data();
  for (int i = 0; i < n * c; ++i) {
    const T* src = xd + std::size_t(i) * h * w;
    T* dst = out.data() + std::size_t(i) * 4 * h * w;
    for (int r = 0; r < 2 * h; ++r)
      for (int q = 0; q < 2 * w; ++q)
        dst[std::size_t(r) * 2 * w + q] = src[std::size_t(r / 2) * w + q / 2];
  }
  return make_op(
      Shape{n, c, 2 * h, 2 * w}, std::move(out), {x},
      [n, c, h, w](Node<T>& nd) {
        auto& p = *nd.parents[0];
        p.ensure_grad();
        for (int i = 0; i < n * c; ++i) {
          const T* g = nd.grad.data() + std::size_t(i) * 4 * h * w;
          T* dst = p.grad.data() + std::size_t(i) * h * w;
          for (int r = 0; r < 2 * h; ++r)
            for (int q = 0; q < 2 * w; ++q)
              dst[std::size_t(r / 2) * w + q / 2] +=
                  g[std::size_t(r) * 2 * w + q];
        }
      });
}

// ---------------------------------------------------------------------------
// spatial crop / reflection padding

template <typename T>
Tensor<T> crop2d(const Tensor<T>& x, int top, int left, int oh, int ow) {
  GENIE_CHECK(x.shape().size() == 4, ShapeError, "crop2d: expected NCHW");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  GENIE_CHECK(top >= 0 && left >= 0 && oh >= 1 && ow >= 1 && top + oh <= h &&
                  left + ow <= w,
              ShapeError, "crop2d: window outside input");
  std::vector<T> out(std::size_t(n) * c * oh * ow);
  const T* xd = x.data().data();
  for (int i = 0; i < n * c; ++i)
    for (int r = 0; r < oh; ++r)
      std::memcpy(out.data() + (std::size_t(i) * oh + r) * ow,
                  xd + (std::size_t(i) * h + top + r) * w + left,
                  sizeof(T) * ow);
  return make_op(
      Shape{n, c, oh, ow}, std::move(out), {x},
      [n, c, h, w, top, left, oh, ow](Node<T>& nd) {
        auto& p = *nd.parents[0];
        p.ensure_grad();
        for (int i = 0; i < n * c; ++i)
          for (int r = 0; r < oh; ++r) {
            const T* g = nd.grad.data() + (std::size_t(i) * oh + r) * ow;
            T* dst = p.grad.data() + (std::size_t(i) * h + top + r) * w + left;
            for (int q = 0; q < ow; ++q) dst[q] += g[q];
          }
      });
}

// mirror padding that excludes the border pixel itself
template <typename T>
Tensor<T> reflection_pad2d(const Tensor<T>& x, int left, int right, int top,
                           int bottom) {
  GENIE_CHECK(x.shape().size() == 4, ShapeError,
              "reflection_pad2d: expected NCHW");
  GENIE_CHECK(left >= 0 && right >= 0 && top >= 0 && bottom >= 0, ConfigError,
              "reflection_pad2d: negative padding");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  GENIE_CHECK(left < w && right < w && top < h && bottom < h, ShapeError,
              "reflection_pad2d: padding must be smaller than the dimension");
  int oh = h + top + bottom, ow = w + left + right;
  std::vector<int> rmap(oh), cmap(ow);
  auto mirror = [](int i, int dim) {
    if (i < 0) return -i;
    if (i >= dim) return 2 * dim - 2 - i;
    return i;
  };
  for (int r = 0; r < oh; ++r) rmap[r] = mirror(r - top, h);
  for (int q = 0; q < ow; ++q) cmap[q] = mirror(q - left, w);

  std::vector<T> out(std::size_t(n) * c * oh * ow);
  const T* xd = x.data().data();
  for (int i = 0; i < n * c; ++i) {
    const T* plane = xd + std::size_t(i) * h * w;
    T* dst = out.data() + std::size_t(i) * oh * ow;
    for (int r = 0; r < oh; ++r)
      for (int q = 0; q < ow; ++q)
        dst[std::size_t(r) * ow + q] = plane[std::size_t(rmap[r]) * w + cmap[q]];
  }
  return make_op(
      Shape{n, c, oh, ow}, std::move(out), {x},
      [n, c, h, w, oh, ow, rmap, cmap](Node<T>& nd) {
        auto& p = *nd.parents[0];
        p.ensure_grad();
        for (int i = 0; i < n * c; ++i) {
          const T* g = nd.grad.data() + std::size_t(i) * oh * ow;
          T* dst = p.grad.data() + std::size_t(i) * h * w;
          for (int r = 0; r < oh; ++r)
            for (int q = 0; q < ow; ++q)
              dst[std::size_t(rmap[r]) * w + cmap[q]] +=
                  g[std::size_t(r) * ow + q];
        }
      });
}

// ---------------------------------------------------------------------------
// cross entropy over logits, mean over the batch

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& y) {
  GENIE_CHECK(logits.shape().size() == 2, ShapeError,
              "cross_entropy: expected N x K logits");
  int n = logits.dim(0), k = logits.dim(1);
  GENIE_CHECK(static_cast<int>(y.size()) == n, ShapeError,
              "cross_entropy: label count mismatch");
  for (int lbl : y)
    GENIE_CHECK(lbl >= 0 && lbl < k, ShapeError,
                "cross_entropy: label out of range");
  const T* ld = logits.data().data();
  std::vector<T> lse(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const T* row = ld + std::size_t(i) * k;
    T mx = row[0];
    for (int j = 1; j < k; ++j) mx = row[j] > mx ? row[j] : mx;
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += std::exp(double(row[j]) - mx);
    lse[i] = static_cast<T>(double(mx) + std::log(acc));
    total += double(lse[i]) - row[y[i]];
  }
  T loss = static_cast<T>(total / n);
  return make_op(
      Shape{1}, std::vector<T>{loss}, {logits},
      [n, k, y, lse](Node<T>& nd) {
        auto& p = *nd.parents[0];
        p.ensure_grad();
        T g = nd.grad[0] / static_cast<T>(n);
        for (int i = 0; i < n; ++i) {
          const T* row = p.value.data() + std::size_t(i) * k;
          T* dst = p.grad.data() + std::size_t(i) * k;
          for (int j = 0; j < k; ++j) {
            T prob = std::exp(row[j] - lse[i]);
            dst[j] += g * (prob - (j == y[i] ? T(1) : T(0)));
          }
        }
      });
}

// ---------------------------------------------------------------------------
// batch norm, composed from differentiable primitives so that the batch
// statistics stay valid gradient taps

template <typename T>
struct BnOut {
  Tensor<T> y, mu, sigma;
};

template <typename T>
BnOut<T> batchnorm_train(const Tensor<T>& x, const Tensor<T>& gamma,
                         const Tensor<T>& beta, T eps) {
  GENIE_CHECK(x.shape().size() == 4, ShapeError,
              "batchnorm: expected NCHW input");
  int c = x.dim(1);
  GENIE_CHECK(gamma.size() == std::size_t(c) && beta.size() == std::size_t(c),
              ShapeError, "batchnorm: affine parameter length mismatch");
  GENIE_CHECK(std::size_t(x.dim(0)) * x.dim(2) * x.dim(3) > 1, ShapeError,
              "batchnorm: train mode needs more than one value per channel");
  auto mu = channel_mean(x, 1);
  auto xc = sub_ch(x, mu, 1);
  auto var = channel_mean(mul(xc, xc), 1);
  auto sigma = sqrt_eps(var, eps);
  auto xhat = div_ch(xc, sigma, 1);
  auto y = add_ch(mul_ch(xhat, gamma, 1), beta, 1);
  return {y, mu, sigma};
}

template <typename T>
Tensor<T> batchnorm_eval(const Tensor<T>& x, const Tensor<T>& gamma,
                         const Tensor<T>& beta, const Tensor<T>& run_mu,
                         const Tensor<T>& run_sigma) {
  GENIE_CHECK(x.shape().size() == 4, ShapeError,
              "batchnorm: expected NCHW input");
  int c = x.dim(1);
  GENIE_CHECK(gamma.size() == std::size_t(c) && beta.size() == std::size_t(c) &&
                  run_mu.size() == std::size_t(c) &&
                  run_sigma.size() == std::size_t(c),
              ShapeError, "batchnorm: parameter length mismatch");
  auto xhat = div_ch(sub_ch(x, run_mu, 1), run_sigma, 1);
  return add_ch(mul_ch(xhat, gamma, 1), beta, 1);
}

// ---------------------------------------------------------------------------
// LSQ activation quantizer with optional per-element drop. Forward is
// x_q = s * clip(round(x/s), qn, qp); the step gradient follows the LSQ
// piecewise form scaled by 1/sqrt(numel * qp), the input gradient is a
// straight-through pass inside (qn, qp). Dropped elements bypass the
// quantizer entirely. The gradient convention (and the forward) evaluates
// the ratio as x * (1/s).

template <typename T>
Tensor<T> lsq_act_quant(const Tensor<T>& x, const Tensor<T>& s, int qn, int qp,
                        double drop_prob, Rng* rng) {
  GENIE_CHECK(s.size() == 1, ShapeError,
              "lsq_act_quant: step must be a scalar tensor");
  GENIE_CHECK(qn < 0 && qp > 0, ConfigError,
              "lsq_act_quant: expected symmetric bounds");
  T sv = s.data()[0];
  GENIE_CHECK(sv > T(0), NumericError, "lsq_act_quant: step must be positive");
  GENIE_CHECK(drop_prob >= 0.0 && drop_prob <= 1.0, ConfigError,
              "lsq_act_quant: drop probability outside [0,1]");
  GENIE_CHECK(drop_prob == 0.0 || rng != nullptr, ConfigError,
              "lsq_act_quant: drop requires an rng");

  std::size_t n = x.size();
  T inv = T(1) / sv;
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>) {
    const auto& kt = kern::table();
    kt.scale(x.data().data(), inv, out.data(), n);
    kt.round_away(out.data(), out.data(), n);
    kt.clamp(out.data(), T(qn), T(qp), out.data(), n);
    kt.scale(out.data(), sv, out.data(), n);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      T r = std::round(x.data()[i] * inv);
      r = r < T(qn) ? T(qn) : (r > T(qp) ? T(qp) : r);
      out[i] = sv * r;
    }
  }
  std::vector<std::uint8_t> mask;
  if (drop_prob > 0.0) {
    mask.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = rng->bernoulli(drop_prob) ? 1 : 0;
      if (mask[i]) out[i] = x.data()[i];
    }
  }
  T grad_scale = T(1) / std::sqrt(static_cast<T>(n) * static_cast<T>(qp));
  return make_op(
      x.shape(), std::move(out), {x, s},
      [qn, qp, grad_scale, mask = std::move(mask)](Node<T>& nd) {
        auto& px = *nd.parents[0];
        auto& ps = *nd.parents[1];
        T sv = ps.value[0];
        T inv = T(1) / sv;
        if (px.requires_grad) px.ensure_grad();
        double ds = 0.0;
        const T* xd = px.value.data();
        const T* g = nd.grad.data();
        T* dx = px.requires_grad ? px.grad.data() : nullptr;
        for (std::size_t i = 0; i < nd.grad.size(); ++i) {
          if (!mask.empty() && mask[i]) {
            if (dx) dx[i] += g[i];
            continue;
          }
          T ratio = xd[i] * inv;
          if (ratio <= T(qn)) {
            ds += double(g[i]) * qn;
          } else if (ratio >= T(qp)) {
            ds += double(g[i]) * qp;
          } else {
            if (dx) dx[i] += g[i];
            ds += double(g[i]) * (std::round(ratio) - ratio);
          }
        }
        if (ps.requires_grad) {
          ps.ensure_grad();
          ps.grad[0] += static_cast<T>(grad_scale * ds);
        }
      });
}

}  // namespace genie::tns

#endif  // GENIE_TENSOR_NNOPS_HPP_

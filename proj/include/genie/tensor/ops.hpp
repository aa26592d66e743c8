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

#ifndef GENIE_TENSOR_OPS_HPP_
#define GENIE_TENSOR_OPS_HPP_

// Elementwise, broadcast, reduction and shape ops. Broadcasting is limited
// to scalars and per-channel vectors (a tensor viewed as outer x C x inner
// with the vector indexed by the C axis); that covers batch-norm affine
// parameters (axis 1 of NCHW) and per-output-channel quantizer steps
// (axis 0 of OIHW).

#include <cmath>
#include <cstring>
#include <vector>

#include "genie/kernels/kernels.hpp"
#include "genie/rng.hpp"
#include "genie/tensor/tensor.hpp"

namespace genie::tns {
namespace detail {

template <typename T>
void add_into(std::vector<T>& dst, const T* src, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    kern::table().axpy(1.0f, src, dst.data(), n);
  } else {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
  }
}

template <typename T>
struct AxisSplit {
  std::size_t outer, ch, inner;
};

template <typename T>
AxisSplit<T> split_axis(const Shape& s, int axis) {
  GENIE_CHECK(axis >= 0 && axis < static_cast<int>(s.size()), ShapeError,
              "broadcast axis " + std::to_string(axis) +
                  " out of range for shape " + shape_str(s));
  AxisSplit<T> a{1, static_cast<std::size_t>(s[axis]), 1};
  for (int i = 0; i < axis; ++i) a.outer *= static_cast<std::size_t>(s[i]);
  for (int i = axis + 1; i < static_cast<int>(s.size()); ++i)
    a.inner *= static_cast<std::size_t>(s[i]);
  return a;
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                      const char* op) {
  GENIE_CHECK(a.shape() == b.shape(), ShapeError,
              std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                  " vs " + shape_str(b.shape()));
}

template <typename T>
void check_finite(const Tensor<T>& t, const char* op) {
  if (!checked_mode()) return;
  for (T v : t.data())
    GENIE_CHECK(std::isfinite(static_cast<double>(v)), NumericError,
                std::string(op) + ": non-finite input value");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary, same shape

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::size_t n = a.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().add(a.data().data(), b.data().data(), out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] + b.data()[i];
  return make_op(
      a.shape(), std::move(out), {a, b}, [](Node<T>& nd) {
        for (int pi : {0, 1}) {
          auto& p = *nd.parents[pi];
          if (!p.requires_grad) continue;
          p.ensure_grad();
          detail::add_into(p.grad, nd.grad.data(), nd.grad.size());
        }
      });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "sub");
  std::size_t n = a.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().sub(a.data().data(), b.data().data(), out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op(
      a.shape(), std::move(out), {a, b}, [](Node<T>& nd) {
        auto& pa = *nd.parents[0];
        auto& pb = *nd.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          detail::add_into(pa.grad, nd.grad.data(), nd.grad.size());
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t i = 0; i < nd.grad.size(); ++i)
            pb.grad[i] -= nd.grad[i];
        }
      });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::size_t n = a.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().mul(a.data().data(), b.data().data(), out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op(
      a.shape(), std::move(out), {a, b}, [](Node<T>& nd) {
        auto& pa = *nd.parents[0];
        auto& pb = *nd.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          if constexpr (std::is_same_v<T, float>)
            kern::table().fma_acc(nd.grad.data(), pb.value.data(),
                                  pa.grad.data(), nd.grad.size());
          else
            for (std::size_t i = 0; i < nd.grad.size(); ++i)
              pa.grad[i] += nd.grad[i] * pb.value[i];
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          if constexpr (std::is_same_v<T, float>)
            kern::table().fma_acc(nd.grad.data(), pa.value.data(),
                                  pb.grad.data(), nd.grad.size());
          else
            for (std::size_t i = 0; i < nd.grad.size(); ++i)
              pb.grad[i] += nd.grad[i] * pa.value[i];
        }
      });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "div");
  std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i)
    GENIE_CHECK(b.data()[i] != T(0), NumericError, "div: division by zero");
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().div(a.data().data(), b.data().data(), out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[i] / b.data()[i];
  return make_op(
      a.shape(), std::move(out), {a, b}, [](Node<T>& nd) {
        auto& pa = *nd.parents[0];
        auto& pb = *nd.parents[1];
        const auto& av = pa.value;
        const auto& bv = pb.value;
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (std::size_t i = 0; i < nd.grad.size(); ++i)
            pa.grad[i] += nd.grad[i] / bv[i];
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t i = 0; i < nd.grad.size(); ++i)
            pb.grad[i] -= nd.grad[i] * av[i] / (bv[i] * bv[i]);
        }
      });
}

// ---------------------------------------------------------------------------
// per-channel broadcast: x viewed as outer x C x inner, v has C elements

namespace detail {

enum class ChOp { kAdd, kSub, kMul, kDiv };

template <typename T>
Tensor<T> channel_binary(const Tensor<T>& x, const Tensor<T>& v, int axis,
                         ChOp op) {
  auto ax = split_axis<T>(x.shape(), axis);
  GENIE_CHECK(v.size() == ax.ch, ShapeError,
              "channel broadcast: vector length " + std::to_string(v.size()) +
                  " does not match axis extent " + std::to_string(ax.ch));
  if (op == ChOp::kDiv)
    for (std::size_t c = 0; c < ax.ch; ++c)
      GENIE_CHECK(v.data()[c] != T(0), NumericError, "div: division by zero");
  std::vector<T> out(x.size());
  const T* xd = x.data().data();
  const T* vd = v.data().data();
  std::size_t idx = 0;
  for (std::size_t o = 0; o < ax.outer; ++o)
    for (std::size_t c = 0; c < ax.ch; ++c) {
      T s = vd[c];
      for (std::size_t i = 0; i < ax.inner; ++i, ++idx) {
        switch (op) {
          case ChOp::kAdd: out[idx] = xd[idx] + s; break;
          case ChOp::kSub: out[idx] = xd[idx] - s; break;
          case ChOp::kMul: out[idx] = xd[idx] * s; break;
          case ChOp::kDiv: out[idx] = xd[idx] / s; break;
        }
      }
    }
  return make_op(
      x.shape(), std::move(out), {x, v}, [ax, op](Node<T>& nd) {
        auto& px = *nd.parents[0];
        auto& pv = *nd.parents[1];
        const T* vd = pv.value.data();
        const T* xd = px.value.data();
        const T* g = nd.grad.data();
        if (px.requires_grad) {
          px.ensure_grad();
          T* dx = px.grad.data();
          std::size_t idx = 0;
          for (std::size_t o = 0; o < ax.outer; ++o)
            for (std::size_t c = 0; c < ax.ch; ++c) {
              T s = vd[c];
              for (std::size_t i = 0; i < ax.inner; ++i, ++idx) {
                switch (op) {
                  case ChOp::kAdd:
                  case ChOp::kSub: dx[idx] += g[idx]; break;
                  case ChOp::kMul: dx[idx] += g[idx] * s; break;
                  case ChOp::kDiv: dx[idx] += g[idx] / s; break;
                }
              }
            }
        }
        if (pv.requires_grad) {
          pv.ensure_grad();
          T* dv = pv.grad.data();
          for (std::size_t c = 0; c < ax.ch; ++c) {
            double acc = 0.0;
            T s = vd[c];
            for (std::size_t o = 0; o < ax.outer; ++o) {
              const T* gb = g + (o * ax.ch + c) * ax.inner;
              const T* xb = xd + (o * ax.ch + c) * ax.inner;
              for (std::size_t i = 0; i < ax.inner; ++i) {
                switch (op) {
                  case ChOp::kAdd: acc += gb[i]; break;
                  case ChOp::kSub: acc -= gb[i]; break;
                  case ChOp::kMul: acc += double(gb[i]) * xb[i]; break;
                  case ChOp::kDiv:
                    acc -= double(gb[i]) * xb[i] / (double(s) * s);
                    break;
                }
              }
            }
            dv[c] += static_cast<T>(acc);
          }
        }
      });
}

}  // namespace detail

template <typename T>
Tensor<T> add_ch(const Tensor<T>& x, const Tensor<T>& v, int axis) {
  return detail::channel_binary(x, v, axis, detail::ChOp::kAdd);
}
template <typename T>
Tensor<T> sub_ch(const Tensor<T>& x, const Tensor<T>& v, int axis) {
  return detail::channel_binary(x, v, axis, detail::ChOp::kSub);
}
template <typename T>
Tensor<T> mul_ch(const Tensor<T>& x, const Tensor<T>& v, int axis) {
  return detail::channel_binary(x, v, axis, detail::ChOp::kMul);
}
template <typename T>
Tensor<T> div_ch(const Tensor<T>& x, const Tensor<T>& v, int axis) {
  return detail::channel_binary(x, v, axis, detail::ChOp::kDiv);
}

// ---------------------------------------------------------------------------
// scalar-constant ops

template <typename T>
Tensor<T> add_s(const Tensor<T>& x, T c) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x.data()[i] + c;
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    detail::add_into(p.grad, nd.grad.data(), nd.grad.size());
  });
}

template <typename T>
Tensor<T> mul_s(const Tensor<T>& x, T c) {
  std::size_t n = x.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().scale(x.data().data(), c, out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = x.data()[i] * c;
  return make_op(x.shape(), std::move(out), {x}, [c](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    if constexpr (std::is_same_v<T, float>)
      kern::table().axpy(c, nd.grad.data(), p.grad.data(), nd.grad.size());
    else
      for (std::size_t i = 0; i < nd.grad.size(); ++i)
        p.grad[i] += c * nd.grad[i];
  });
}

template <typename T>
Tensor<T> rsub_s(T c, const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c - x.data()[i];
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < nd.grad.size(); ++i)
      p.grad[i] -= nd.grad[i];
  });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& x) {
  return mul_s(x, T(-1));
}

// ---------------------------------------------------------------------------
// unary ops

template <typename T>
Tensor<T> abs_t(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::fabs(x.data()[i]);
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < nd.grad.size(); ++i) {
      T v = p.value[i];
      if (v > T(0))
        p.grad[i] += nd.grad[i];
      else if (v < T(0))
        p.grad[i] -= nd.grad[i];
    }
  });
}

// out = sqrt(x + eps); eps > 0 keeps the derivative finite at x == 0
template <typename T>
Tensor<T> sqrt_eps(const Tensor<T>& x, T eps) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    T v = x.data()[i] + eps;
    GENIE_CHECK(v > T(0), NumericError, "sqrt_eps: non-positive operand");
    out[i] = std::sqrt(v);
  }
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < nd.grad.size(); ++i)
      p.grad[i] += nd.grad[i] * T(0.5) / nd.value[i];
  });
}

// out = x^p for x >= 0
template <typename T>
Tensor<T> pow_s(const Tensor<T>& x, T p) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    GENIE_CHECK(x.data()[i] >= T(0), NumericError,
                "pow_s: negative base");
    out[i] = std::pow(x.data()[i], p);
  }
  return make_op(x.shape(), std::move(out), {x}, [p](Node<T>& nd) {
    auto& pa = *nd.parents[0];
    pa.ensure_grad();
    for (std::size_t i = 0; i < nd.grad.size(); ++i)
      pa.grad[i] += nd.grad[i] * p * std::pow(pa.value[i], p - T(1));
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    T v = x.data()[i];
    if (v >= T(0)) {
      T e = std::exp(-v);
      out[i] = T(1) / (T(1) + e);
    } else {
      T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < nd.grad.size(); ++i) {
      T y = nd.value[i];
      p.grad[i] += nd.grad[i] * y * (T(1) - y);
    }
  });
}

template <typename T>
Tensor<T> tanh_t(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x.data()[i]);
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < nd.grad.size(); ++i) {
      T y = nd.value[i];
      p.grad[i] += nd.grad[i] * (T(1) - y * y);
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::size_t n = x.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().relu(x.data().data(), out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i)
      out[i] = x.data()[i] > T(0) ? x.data()[i] : T(0);
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    if constexpr (std::is_same_v<T, float>)
      kern::table().relu_bwd(nd.grad.data(), p.value.data(), p.grad.data(),
                             nd.grad.size());
    else
      for (std::size_t i = 0; i < nd.grad.size(); ++i)
        if (p.value[i] > T(0)) p.grad[i] += nd.grad[i];
  });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  std::size_t n = x.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().leaky_relu(x.data().data(), slope, out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i)
      out[i] = x.data()[i] > T(0) ? x.data()[i] : slope * x.data()[i];
  return make_op(x.shape(), std::move(out), {x}, [slope](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    if constexpr (std::is_same_v<T, float>)
      kern::table().leaky_relu_bwd(nd.grad.data(), p.value.data(), slope,
                                   p.grad.data(), nd.grad.size());
    else
      for (std::size_t i = 0; i < nd.grad.size(); ++i)
        p.grad[i] += p.value[i] > T(0) ? nd.grad[i] : slope * nd.grad[i];
  });
}

// backward passes gradient on the closed interval [lo, hi]
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  std::size_t n = x.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().clamp(x.data().data(), lo, hi, out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i) {
      T v = x.data()[i] < lo ? lo : x.data()[i];
      out[i] = v > hi ? hi : v;
    }
  return make_op(x.shape(), std::move(out), {x}, [lo, hi](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    if constexpr (std::is_same_v<T, float>)
      kern::table().clamp_bwd(nd.grad.data(), p.value.data(), lo, hi,
                              p.grad.data(), nd.grad.size());
    else
      for (std::size_t i = 0; i < nd.grad.size(); ++i)
        if (p.value[i] >= lo && p.value[i] <= hi) p.grad[i] += nd.grad[i];
  });
}

// straight-through: forward rounds, backward is the identity
template <typename T>
Tensor<T> floor_ste(const Tensor<T>& x) {
  std::size_t n = x.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().floor(x.data().data(), out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = std::floor(x.data()[i]);
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    detail::add_into(p.grad, nd.grad.data(), nd.grad.size());
  });
}

// rounds half away from zero, matching std::round
template <typename T>
Tensor<T> round_ste(const Tensor<T>& x) {
  std::size_t n = x.size();
  std::vector<T> out(n);
  if constexpr (std::is_same_v<T, float>)
    kern::table().round_away(x.data().data(), out.data(), n);
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = std::round(x.data()[i]);
  return make_op(x.shape(), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    detail::add_into(p.grad, nd.grad.data(), nd.grad.size());
  });
}

// ---------------------------------------------------------------------------
// reductions

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
  T total;
  if constexpr (std::is_same_v<T, float>) {
    total = kern::table().sum(x.data().data(), x.size());
  } else {
    double acc = 0.0;
    for (T v : x.data()) acc += v;
    total = static_cast<T>(acc);
  }
  return make_op(Shape{1}, std::vector<T>{total}, {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    T g = nd.grad[0];
    for (auto& d : p.grad) d += g;
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
  return mul_s(sum_all(x), T(1) / static_cast<T>(x.size()));
}

// mean over every axis except `axis`; output has shape (C)
template <typename T>
Tensor<T> channel_mean(const Tensor<T>& x, int axis) {
  auto ax = detail::split_axis<T>(x.shape(), axis);
  std::size_t count = ax.outer * ax.inner;
  GENIE_CHECK(count > 0, ShapeError, "channel_mean: empty reduction");
  std::vector<T> out(ax.ch);
  const T* xd = x.data().data();
  for (std::size_t c = 0; c < ax.ch; ++c) {
    double acc = 0.0;
    for (std::size_t o = 0; o < ax.outer; ++o) {
      const T* blk = xd + (o * ax.ch + c) * ax.inner;
      for (std::size_t i = 0; i < ax.inner; ++i) acc += blk[i];
    }
    out[c] = static_cast<T>(acc / static_cast<double>(count));
  }
  return make_op(
      Shape{static_cast<int>(ax.ch)}, std::move(out), {x},
      [ax, count](Node<T>& nd) {
        auto& p = *nd.parents[0];
        p.ensure_grad();
        T inv = T(1) / static_cast<T>(count);
        for (std::size_t c = 0; c < ax.ch; ++c) {
          T g = nd.grad[c] * inv;
          for (std::size_t o = 0; o < ax.outer; ++o) {
            T* blk = p.grad.data() + (o * ax.ch + c) * ax.inner;
            for (std::size_t i = 0; i < ax.inner; ++i) blk[i] += g;
          }
        }
      });
}

// ---------------------------------------------------------------------------
// shape ops

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  GENIE_CHECK(numel(shape) == x.size(), ShapeError,
              "reshape: cannot view " + shape_str(x.shape()) + " as " +
                  shape_str(shape));
  std::vector<T> out = x.data();
  return make_op(std::move(shape), std::move(out), {x}, [](Node<T>& nd) {
    auto& p = *nd.parents[0];
    p.ensure_grad();
    detail::add_into(p.grad, nd.grad.data(), nd.grad.size());
  });
}

// ---------------------------------------------------------------------------
// leaf constructors

template <typename T>
Tensor<T> randn(Shape shape, Rng& rng, T mean = T(0), T stddev = T(1),
                bool requires_grad = false) {
  std::vector<T> data(numel(shape));
  for (auto& v : data)
    v = static_cast<T>(rng.normal(static_cast<double>(mean),
                                  static_cast<double>(stddev)));
  return Tensor<T>::from(std::move(shape), std::move(data), requires_grad);
}

}  // namespace genie::tns

#endif  // GENIE_TENSOR_OPS_HPP_

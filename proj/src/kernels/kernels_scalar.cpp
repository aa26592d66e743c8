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

// Reference kernels. Plain loops, fixed evaluation order; the SIMD variants
// are validated against these.

#include <cmath>

#include "genie/kernels/kernels.hpp"

namespace genie::kern {
namespace {

void s_add(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_sub(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_mul(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_div(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] / b[i];
}

void s_fma_acc(const float* a, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * b[i];
}

void s_scale(const float* a, float s, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * s;
}

void s_axpy(float a, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void s_relu(const float* x, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void s_relu_bwd(const float* g, const float* x, float* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0.0f) dx[i] += g[i];
}

void s_leaky_relu(const float* x, float slope, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void s_leaky_relu_bwd(const float* g, const float* x, float slope, float* dx,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    dx[i] += x[i] > 0.0f ? g[i] : slope * g[i];
}

void s_clamp(const float* x, float lo, float hi, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    float v = x[i] < lo ? lo : x[i];
    out[i] = v > hi ? hi : v;
  }
}

void s_clamp_bwd(const float* g, const float* x, float lo, float hi, float* dx,
                 std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] >= lo && x[i] <= hi) dx[i] += g[i];
}

void s_floor(const float* x, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::floor(x[i]);
}

void s_round_away(const float* x, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::round(x[i]);
}

float s_sum(const float* x, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

float s_dot(const float* a, const float* b, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float s_sumsq(const float* x, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

void s_minmax(const float* x, std::size_t n, float* mn, float* mx) {
  float lo = x[0], hi = x[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] < lo) lo = x[i];
    if (x[i] > hi) hi = x[i];
  }
  *mn = lo;
  *mx = hi;
}

void s_adam_step(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps, float bc1,
                 float bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * (g[i] * g[i]);
    float mhat = m[i] * bc1;
    float vhat = v[i] * bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void s_sgemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
             const float* a, int lda, const float* b, int ldb, float beta,
             float* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<std::size_t>(i) * ldc;
    if (beta == 0.0f) {
      for (int j = 0; j < n; ++j) crow[j] = 0.0f;
    } else if (beta != 1.0f) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
    for (int p = 0; p < k; ++p) {
      float av = trans_a ? a[static_cast<std::size_t>(p) * lda + i]
                         : a[static_cast<std::size_t>(i) * lda + p];
      av *= alpha;
      if (!trans_b) {
        const float* brow = b + static_cast<std::size_t>(p) * ldb;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (int j = 0; j < n; ++j)
          crow[j] += av * b[static_cast<std::size_t>(j) * ldb + p];
      }
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = {
      .name = "scalar",
      .add = s_add,
      .sub = s_sub,
      .mul = s_mul,
      .div = s_div,
      .fma_acc = s_fma_acc,
      .scale = s_scale,
      .axpy = s_axpy,
      .relu = s_relu,
      .relu_bwd = s_relu_bwd,
      .leaky_relu = s_leaky_relu,
      .leaky_relu_bwd = s_leaky_relu_bwd,
      .clamp = s_clamp,
      .clamp_bwd = s_clamp_bwd,
      .floor = s_floor,
      .round_away = s_round_away,
      .sum = s_sum,
      .dot = s_dot,
      .sumsq = s_sumsq,
      .minmax = s_minmax,
      .adam_step = s_adam_step,
      .sgemm = s_sgemm,
  };
  return t;
}

}  // namespace genie::kern

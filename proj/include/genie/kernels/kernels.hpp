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
#pragma once

// Single-precision arithmetic kernels behind a runtime-dispatched table.
// kernels_scalar.cpp holds the reference implementations; kernels_avx2.cpp
// holds the AVX2/FMA variants and is the only TU compiled with -mavx2.
//
// Contract between variants, checked by tests/unit/test_kernels.cpp:
//   - pointwise kernels (add..adam_step) are bit-identical to scalar;
//   - reduction kernels (sum, dot, sumsq) and sgemm reassociate and are
//     held to a relative tolerance against an f64 reference.
// round_away rounds halves away from zero, matching std::round, so integer
// outputs do not depend on the selected variant.

#include <cstddef>

namespace genie::kern {

struct KernelTable {
  const char* name;

  void (*add)(const float* a, const float* b, float* out, std::size_t n);
  void (*sub)(const float* a, const float* b, float* out, std::size_t n);
  void (*mul)(const float* a, const float* b, float* out, std::size_t n);
  void (*div)(const float* a, const float* b, float* out, std::size_t n);
  // out += a * b
  void (*fma_acc)(const float* a, const float* b, float* out, std::size_t n);
  // out = a * s
  void (*scale)(const float* a, float s, float* out, std::size_t n);
  // y += a * x
  void (*axpy)(float a, const float* x, float* y, std::size_t n);

  void (*relu)(const float* x, float* out, std::size_t n);
  // dx += g where x > 0
  void (*relu_bwd)(const float* g, const float* x, float* dx, std::size_t n);
  void (*leaky_relu)(const float* x, float slope, float* out, std::size_t n);
  void (*leaky_relu_bwd)(const float* g, const float* x, float slope,
                         float* dx, std::size_t n);
  void (*clamp)(const float* x, float lo, float hi, float* out, std::size_t n);
  // dx += g where lo <= x <= hi
  void (*clamp_bwd)(const float* g, const float* x, float lo, float hi,
                    float* dx, std::size_t n);
  void (*floor)(const float* x, float* out, std::size_t n);
  // round half away from zero (std::round semantics)
  void (*round_away)(const float* x, float* out, std::size_t n);

  float (*sum)(const float* x, std::size_t n);
  float (*dot)(const float* a, const float* b, std::size_t n);
  float (*sumsq)(const float* x, std::size_t n);
  void (*minmax)(const float* x, std::size_t n, float* mn, float* mx);

  // One fused Adam update; bc1/bc2 are the precomputed bias corrections
  // 1/(1-beta1^t) and 1/(1-beta2^t).
  void (*adam_step)(float* p, const float* g, float* m, float* v,
                    std::size_t n, float lr, float beta1, float beta2,
                    float eps, float bc1, float bc2);

  // C = alpha * op(A) * op(B) + beta * C, row-major, ld* are row strides.
  void (*sgemm)(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
                const float* a, int lda, const float* b, int ldb, float beta,
                float* c, int ldc);
};

const KernelTable& scalar_table();
// Null when the CPU (or build target) lacks AVX2+FMA.
const KernelTable* avx2_table();

// Active table: AVX2 when available, else scalar. GENIE_KERNELS=scalar|avx2
// overrides detection; tests also swap tables explicitly.
const KernelTable& table();
void set_table(const KernelTable* t);  // nullptr restores detection

}  // namespace genie::kern

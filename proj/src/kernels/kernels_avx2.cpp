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

// AVX2/FMA kernel variants. This is the only TU built with -mavx2 -mfma, so
// the dispatcher may only hand out this table after a cpuid check.
//
// Pointwise kernels use mul+add (no FMA contraction) so they stay
// bit-identical to the scalar reference for finite inputs. FMA is confined
// to sgemm and the reductions, which are tolerance-tested.

#include "genie/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cmath>
#include <cstring>
#include <vector>

namespace genie::kern {
namespace {

void v_add(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i),
                                            _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void v_sub(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i),
                                            _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void v_mul(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i),
                                            _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void v_div(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_div_ps(_mm256_loadu_ps(a + i),
                                            _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] / b[i];
}

void v_fma_acc(const float* a, const float* b, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 prod = _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(out + i), prod));
  }
  for (; i < n; ++i) out[i] += a[i] * b[i];
}

void v_scale(const float* a, float s, float* out, std::size_t n) {
  __m256 vs = _mm256_set1_ps(s);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), vs));
  for (; i < n; ++i) out[i] = a[i] * s;
}

void v_axpy(float a, const float* x, float* y, std::size_t n) {
  __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void v_relu(const float* x, float* out, std::size_t n) {
  __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vx = _mm256_loadu_ps(x + i);
    __m256 mask = _mm256_cmp_ps(vx, zero, _CMP_GT_OQ);
    _mm256_storeu_ps(out + i, _mm256_and_ps(vx, mask));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void v_relu_bwd(const float* g, const float* x, float* dx, std::size_t n) {
  __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    __m256 inc = _mm256_and_ps(_mm256_loadu_ps(g + i), mask);
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), inc));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0f) dx[i] += g[i];
}

void v_leaky_relu(const float* x, float slope, float* out, std::size_t n) {
  __m256 zero = _mm256_setzero_ps();
  __m256 vs = _mm256_set1_ps(slope);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vx = _mm256_loadu_ps(x + i);
    __m256 mask = _mm256_cmp_ps(vx, zero, _CMP_GT_OQ);
    _mm256_storeu_ps(out + i,
                     _mm256_blendv_ps(_mm256_mul_ps(vs, vx), vx, mask));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void v_leaky_relu_bwd(const float* g, const float* x, float slope, float* dx,
                      std::size_t n) {
  __m256 zero = _mm256_setzero_ps();
  __m256 vs = _mm256_set1_ps(slope);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vg = _mm256_loadu_ps(g + i);
    __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    __m256 inc = _mm256_blendv_ps(_mm256_mul_ps(vs, vg), vg, mask);
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), inc));
  }
  for (; i < n; ++i) dx[i] += x[i] > 0.0f ? g[i] : slope * g[i];
}

void v_clamp(const float* x, float lo, float hi, float* out, std::size_t n) {
  __m256 vlo = _mm256_set1_ps(lo), vhi = _mm256_set1_ps(hi);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_max_ps(_mm256_loadu_ps(x + i), vlo);
    _mm256_storeu_ps(out + i, _mm256_min_ps(v, vhi));
  }
  for (; i < n; ++i) {
    float v = x[i] < lo ? lo : x[i];
    out[i] = v > hi ? hi : v;
  }
}

void v_clamp_bwd(const float* g, const float* x, float lo, float hi, float* dx,
                 std::size_t n) {
  __m256 vlo = _mm256_set1_ps(lo), vhi = _mm256_set1_ps(hi);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vx = _mm256_loadu_ps(x + i);
    __m256 mask = _mm256_and_ps(_mm256_cmp_ps(vx, vlo, _CMP_GE_OQ),
                                _mm256_cmp_ps(vx, vhi, _CMP_LE_OQ));
    __m256 inc = _mm256_and_ps(_mm256_loadu_ps(g + i), mask);
    _mm256_storeu_ps(dx + i, _mm256_add_ps(_mm256_loadu_ps(dx + i), inc));
  }
  for (; i < n; ++i)
    if (x[i] >= lo && x[i] <= hi) dx[i] += g[i];
}

void v_floor(const float* x, float* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_floor_ps(_mm256_loadu_ps(x + i)));
  for (; i < n; ++i) out[i] = std::floor(x[i]);
}

// _mm256_round_ps rounds halves to even; exact ties are then nudged away
// from zero so the result matches std::round lane for lane.
void v_round_away(const float* x, float* out, std::size_t n) {
  const __m256 signbit = _mm256_set1_ps(-0.0f);
  const __m256 half = _mm256_set1_ps(0.5f);
  const __m256 one = _mm256_set1_ps(1.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vx = _mm256_loadu_ps(x + i);
    __m256 rhe =
        _mm256_round_ps(vx, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256 absd = _mm256_andnot_ps(signbit, _mm256_sub_ps(vx, rhe));
    __m256 tie = _mm256_cmp_ps(absd, half, _CMP_EQ_OQ);
    __m256 toward = _mm256_cmp_ps(_mm256_andnot_ps(signbit, rhe),
                                  _mm256_andnot_ps(signbit, vx), _CMP_LT_OQ);
    __m256 fix = _mm256_and_ps(tie, toward);
    __m256 step = _mm256_or_ps(_mm256_and_ps(vx, signbit), one);
    _mm256_storeu_ps(out + i,
                     _mm256_blendv_ps(rhe, _mm256_add_ps(rhe, step), fix));
  }
  for (; i < n; ++i) out[i] = std::round(x[i]);
}

float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

float v_sum(const float* x, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_add_ps(acc0, _mm256_loadu_ps(x + i));
    acc1 = _mm256_add_ps(acc1, _mm256_loadu_ps(x + i + 8));
  }
  for (; i + 8 <= n; i += 8) acc0 = _mm256_add_ps(acc0, _mm256_loadu_ps(x + i));
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

float v_dot(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i),
                           acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8),
                           _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8)
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i),
                           acc0);
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float v_sumsq(const float* x, std::size_t n) { return v_dot(x, x, n); }

void v_minmax(const float* x, std::size_t n, float* mn, float* mx) {
  std::size_t i = 0;
  float lo, hi;
  if (n >= 8) {
    __m256 vlo = _mm256_loadu_ps(x);
    __m256 vhi = vlo;
    for (i = 8; i + 8 <= n; i += 8) {
      __m256 v = _mm256_loadu_ps(x + i);
      vlo = _mm256_min_ps(vlo, v);
      vhi = _mm256_max_ps(vhi, v);
    }
    alignas(32) float tmp[8];
    _mm256_store_ps(tmp, vlo);
    lo = tmp[0];
    for (int j = 1; j < 8; ++j) lo = tmp[j] < lo ? tmp[j] : lo;
    _mm256_store_ps(tmp, vhi);
    hi = tmp[0];
    for (int j = 1; j < 8; ++j) hi = tmp[j] > hi ? tmp[j] : hi;
  } else {
    lo = hi = x[0];
    i = 1;
  }
  for (; i < n; ++i) {
    if (x[i] < lo) lo = x[i];
    if (x[i] > hi) hi = x[i];
  }
  *mn = lo;
  *mx = hi;
}

void v_adam_step(float* p, const float* g, float* m, float* v, std::size_t n,
                 float lr, float beta1, float beta2, float eps, float bc1,
                 float bc2) {
  __m256 vb1 = _mm256_set1_ps(beta1), vcb1 = _mm256_set1_ps(1.0f - beta1);
  __m256 vb2 = _mm256_set1_ps(beta2), vcb2 = _mm256_set1_ps(1.0f - beta2);
  __m256 vbc1 = _mm256_set1_ps(bc1), vbc2 = _mm256_set1_ps(bc2);
  __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 vg = _mm256_loadu_ps(g + i);
    __m256 vm = _mm256_add_ps(_mm256_mul_ps(vb1, _mm256_loadu_ps(m + i)),
                              _mm256_mul_ps(vcb1, vg));
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(vb2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(vcb2, _mm256_mul_ps(vg, vg)));
    _mm256_storeu_ps(m + i, vm);
    _mm256_storeu_ps(v + i, vv);
    __m256 denom =
        _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vv, vbc2)), veps);
    __m256 upd =
        _mm256_div_ps(_mm256_mul_ps(vlr, _mm256_mul_ps(vm, vbc1)), denom);
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * (g[i] * g[i]);
    float mhat = m[i] * bc1;
    float vhat = v[i] * bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

// ---------------------------------------------------------------------------
// sgemm: packed panels with a 6x16 FMA microkernel. A is packed into 6-row
// panels (k-major), B into 16-column panels. Both packs are padded with
// zeros to full tiles; partial C tiles go through a spill buffer.

constexpr int kMr = 6;
constexpr int kNr = 16;

thread_local std::vector<float> tl_apack;
thread_local std::vector<float> tl_bpack;

void pack_a(bool trans_a, int m, int k, const float* a, int lda, float* ap) {
  for (int ib = 0; ib < m; ib += kMr) {
    float* panel = ap + static_cast<std::size_t>(ib) * k;
    for (int p = 0; p < k; ++p) {
      for (int r = 0; r < kMr; ++r) {
        int row = ib + r;
        panel[static_cast<std::size_t>(p) * kMr + r] =
            row < m ? (trans_a ? a[static_cast<std::size_t>(p) * lda + row]
                               : a[static_cast<std::size_t>(row) * lda + p])
                    : 0.0f;
      }
    }
  }
}

void pack_b(bool trans_b, int k, int n, const float* b, int ldb, float* bp) {
  for (int jb = 0; jb < n; jb += kNr) {
    float* panel = bp + static_cast<std::size_t>(jb) * k;
    int jn = n - jb < kNr ? n - jb : kNr;
    if (!trans_b && jn == kNr) {
      for (int p = 0; p < k; ++p) {
        const float* src = b + static_cast<std::size_t>(p) * ldb + jb;
        float* dst = panel + static_cast<std::size_t>(p) * kNr;
        _mm256_storeu_ps(dst, _mm256_loadu_ps(src));
        _mm256_storeu_ps(dst + 8, _mm256_loadu_ps(src + 8));
      }
    } else {
      for (int p = 0; p < k; ++p) {
        float* dst = panel + static_cast<std::size_t>(p) * kNr;
        for (int c = 0; c < kNr; ++c) {
          int col = jb + c;
          dst[c] = col < n
                       ? (trans_b ? b[static_cast<std::size_t>(col) * ldb + p]
                                  : b[static_cast<std::size_t>(p) * ldb + col])
                       : 0.0f;
        }
      }
    }
  }
}

// acc[r*2], acc[r*2+1] accumulate row r of the 6x16 tile.
inline void micro_6x16(int k, const float* ap, const float* bp, float* tile) {
  __m256 acc[12];
  for (int r = 0; r < 12; ++r) acc[r] = _mm256_setzero_ps();
  for (int p = 0; p < k; ++p) {
    __m256 b0 = _mm256_loadu_ps(bp + static_cast<std::size_t>(p) * kNr);
    __m256 b1 = _mm256_loadu_ps(bp + static_cast<std::size_t>(p) * kNr + 8);
    const float* arow = ap + static_cast<std::size_t>(p) * kMr;
    for (int r = 0; r < kMr; ++r) {
      __m256 av = _mm256_broadcast_ss(arow + r);
      acc[r * 2] = _mm256_fmadd_ps(av, b0, acc[r * 2]);
      acc[r * 2 + 1] = _mm256_fmadd_ps(av, b1, acc[r * 2 + 1]);
    }
  }
  for (int r = 0; r < kMr; ++r) {
    _mm256_storeu_ps(tile + r * kNr, acc[r * 2]);
    _mm256_storeu_ps(tile + r * kNr + 8, acc[r * 2 + 1]);
  }
}

void v_sgemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
             const float* a, int lda, const float* b, int ldb, float beta,
             float* c, int ldc) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    for (int i = 0; i < m; ++i) {
      float* crow = c + static_cast<std::size_t>(i) * ldc;
      if (beta == 0.0f)
        for (int j = 0; j < n; ++j) crow[j] = 0.0f;
      else if (beta != 1.0f)
        for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
    return;
  }

  int mt = (m + kMr - 1) / kMr * kMr;
  int nt = (n + kNr - 1) / kNr * kNr;
  tl_apack.resize(static_cast<std::size_t>(mt) * k);
  tl_bpack.resize(static_cast<std::size_t>(nt) * k);
  pack_a(trans_a, m, k, a, lda, tl_apack.data());
  pack_b(trans_b, k, n, b, ldb, tl_bpack.data());

  alignas(32) float tile[kMr * kNr];
  for (int jb = 0; jb < n; jb += kNr) {
    const float* bp = tl_bpack.data() + static_cast<std::size_t>(jb) * k;
    int jn = n - jb < kNr ? n - jb : kNr;
    for (int ib = 0; ib < m; ib += kMr) {
      const float* ap = tl_apack.data() + static_cast<std::size_t>(ib) * k;
      int im = m - ib < kMr ? m - ib : kMr;
      micro_6x16(k, ap, bp, tile);
      for (int r = 0; r < im; ++r) {
        float* crow = c + static_cast<std::size_t>(ib + r) * ldc + jb;
        const float* trow = tile + r * kNr;
        if (beta == 0.0f) {
          for (int j = 0; j < jn; ++j) crow[j] = alpha * trow[j];
        } else if (beta == 1.0f) {
          for (int j = 0; j < jn; ++j) crow[j] += alpha * trow[j];
        } else {
          for (int j = 0; j < jn; ++j)
            crow[j] = alpha * trow[j] + beta * crow[j];
        }
      }
    }
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable t = {
      .name = "avx2",
      .add = v_add,
      .sub = v_sub,
      .mul = v_mul,
      .div = v_div,
      .fma_acc = v_fma_acc,
      .scale = v_scale,
      .axpy = v_axpy,
      .relu = v_relu,
      .relu_bwd = v_relu_bwd,
      .leaky_relu = v_leaky_relu,
      .leaky_relu_bwd = v_leaky_relu_bwd,
      .clamp = v_clamp,
      .clamp_bwd = v_clamp_bwd,
      .floor = v_floor,
      .round_away = v_round_away,
      .sum = v_sum,
      .dot = v_dot,
      .sumsq = v_sumsq,
      .minmax = v_minmax,
      .adam_step = v_adam_step,
      .sgemm = v_sgemm,
  };
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &t;
  return nullptr;
}

}  // namespace genie::kern

#else  // non-x86 builds: no AVX2 variant

namespace genie::kern {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace genie::kern

#endif

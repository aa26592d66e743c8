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

// Uniform quantization primitives.
//
// Weights are quantized per output channel with asymmetric ranges
// [0, 2^b - 1] and an integer zero point; activations per tensor with
// symmetric ranges [-2^(b-1), 2^(b-1) - 1]. Nearest rounding in the weight
// path is half-up (floor(x) + [frac >= 0.5]) so that hardening the soft
// rounding bits reproduces it exactly.

#ifndef GENIE_QUANT_QUANT_HPP_
#define GENIE_QUANT_QUANT_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

#include "genie/nn/model.hpp"
#include "genie/tensor/ops.hpp"

namespace genie::quant {

inline int weight_qmax(int bits) { return (1 << bits) - 1; }
inline int act_qmin(int bits) { return -(1 << (bits - 1)); }
inline int act_qmax(int bits) { return (1 << (bits - 1)) - 1; }

inline double round_half_up(double x) { return std::floor(x + 0.5); }

// step size and zero point for one flat weight slice; `fallback` marks the
// degenerate constant-slice path where the min-max formula would give s = 0
struct StepResult {
  float s = 0.0f;
  int z = 0;
  bool fallback = false;
};

StepResult minmax_step(const float* w, std::size_t n, int bits);

// w_int = clip(round_half_up(w/s) + z, qn, qp); w_q = s * (w_int - z).
// Either output may be null.
void quantize_uniform(const float* w, std::size_t n, float s, int z, int qn,
                      int qp, int* w_int, float* w_q);

// per-output-channel (axis 0) step sizes for a weight tensor
struct ChannelSteps {
  std::vector<float> s;
  std::vector<int> z;
  bool fallback = false;  // any channel hit a degenerate path
};

ChannelSteps minmax_channels(const nn::FTensor& w, int bits);

// grid search argmin_s of the p_ord-norm reconstruction error over the 100
// candidates s_max * k/100 (s_max from min-max), re-deriving the zero point
// per candidate; ties resolve toward the smaller step
ChannelSteps init_step_pnorm(const nn::FTensor& w, int bits, double p_ord);

// h(v) = clamp(sigmoid(v) * 1.2 - 0.1, 0, 1) and its inverse on (0, 1)
double rectified_sigmoid_value(double v);
double inverse_rectified_sigmoid(double h);

template <typename T>
tns::Tensor<T> rectified_sigmoid(const tns::Tensor<T>& v) {
  return tns::clamp(
      tns::add_s(tns::mul_s(tns::sigmoid(v), T(1.2)), T(-0.1)), T(0), T(1));
}

// soft-quantized weights: s * (clip(floor(w/s) + h(V) + z, qn, qp) - z).
// The floor is straight-through, so gradients reach both s and V.
template <typename T>
tns::Tensor<T> soft_quant_weights(const tns::Tensor<T>& w,
                                  const tns::Tensor<T>& s,
                                  const tns::Tensor<T>& zf,
                                  const tns::Tensor<T>& v, int qn, int qp) {
  GENIE_CHECK(v.shape() == w.shape(), ShapeError,
              "soft_quant_weights: V shape must match W");
  auto u = tns::div_ch(w, s, 0);
  auto q = tns::add_ch(tns::add(tns::floor_ste(u), rectified_sigmoid(v)), zf, 0);
  auto c = tns::clamp(q, T(qn), T(qp));
  return tns::mul_ch(tns::sub_ch(c, zf, 0), s, 0);
}

// sum over elements of 1 - |2 h(V) - 1|^beta: zero when every h is hard,
// numel(V) when every h is 0.5
template <typename T>
tns::Tensor<T> rounding_reg(const tns::Tensor<T>& v, T beta) {
  GENIE_CHECK(beta > T(0), ConfigError, "rounding_reg: beta must be positive");
  auto h = rectified_sigmoid(v);
  auto t = tns::pow_s(tns::abs_t(tns::add_s(tns::mul_s(h, T(2)), T(-1))), beta);
  return tns::sum_all(tns::rsub_s(T(1), t));
}

// V leaf initialized so h(V) equals the rounding residual frac(w/s), clamped
// into (0, 1); the soft model starts at the (clip-range limited) fp weights
nn::FTensor init_soft_bits(const nn::FTensor& w, const ChannelSteps& st);

struct BetaSchedule {
  float beta_start = 20.0f;
  float beta_end = 2.0f;
  float warmup_frac = 0.2f;
};

// regularizer is off during the warmup fraction; beta then follows a cosine
// decay from beta_start to beta_end at the final step
struct BetaAt {
  float beta;
  bool lambda_active;
};

BetaAt beta_at(int step, int total, const BetaSchedule& bs);

// symmetric activation step minimizing the quantization MSE over a 100
// candidate grid below the min-max cover step
struct ActStep {
  float s = 0.0f;
  bool fallback = false;
};

ActStep init_act_step(const float* x, std::size_t n, int bits);

}  // namespace genie::quant

#endif  // GENIE_QUANT_QUANT_HPP_

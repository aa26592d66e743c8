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

#include "genie/quant/quant.hpp"

#include <algorithm>
#include <limits>

namespace genie::quant {

namespace {

constexpr double kTinyStep = 1e-8;
constexpr int kGridSize = 100;

int clamp_int(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

// zero point z = -round(min/s), clamped into the integer range; with the
// min-max step this sends the slice extremes to exactly qn and qp
int zero_point_for(double mn, double s, int qn, int qp) {
  return clamp_int(-static_cast<int>(round_half_up(mn / s)), qn, qp);
}

}  // namespace

StepResult minmax_step(const float* w, std::size_t n, int bits) {
  GENIE_CHECK(bits >= 2, ConfigError, "minmax_step: bits must be >= 2");
  GENIE_CHECK(n > 0, ShapeError, "minmax_step: empty slice");
  double mn = w[0], mx = w[0];
  for (std::size_t i = 1; i < n; ++i) {
    GENIE_CHECK(std::isfinite(w[i]), NumericError, "minmax_step: non-finite");
    mn = std::min(mn, double(w[i]));
    mx = std::max(mx, double(w[i]));
  }
  GENIE_CHECK(std::isfinite(mn) && std::isfinite(mx), NumericError,
              "minmax_step: non-finite");
  const int qp = weight_qmax(bits);
  StepResult r;
  if (mx > mn) {
    r.s = static_cast<float>((mx - mn) / qp);
    r.z = zero_point_for(mn, r.s, 0, qp);
    return r;
  }
  // constant slice: nothing to spread, pick a magnitude-scaled step and park
  // the zero point midrange
  r.fallback = true;
  const double a = std::fabs(mn);
  r.s = static_cast<float>(a > 0.0 ? a * std::ldexp(1.0, 1 - bits) : kTinyStep);
  r.z = (qp + 1) / 2;
  return r;
}

void quantize_uniform(const float* w, std::size_t n, float s, int z, int qn,
                      int qp, int* w_int, float* w_q) {
  GENIE_CHECK(s > 0.0f, NumericError, "quantize_uniform: step must be positive");
  GENIE_CHECK(qn < qp, ConfigError, "quantize_uniform: empty range");
  const double sd = s;
  for (std::size_t i = 0; i < n; ++i) {
    GENIE_CHECK(std::isfinite(w[i]), NumericError,
                "quantize_uniform: non-finite input");
    const int q = clamp_int(
        static_cast<int>(round_half_up(double(w[i]) / sd)) + z, qn, qp);
    if (w_int) w_int[i] = q;
    if (w_q) w_q[i] = static_cast<float>(sd * (q - z));
  }
}

namespace {

// per-channel view: channel c spans [c*step, (c+1)*step)
struct ChannelView {
  const float* base;
  std::size_t channels, step;
};

ChannelView channel_view(const nn::FTensor& w) {
  GENIE_CHECK(!w.shape().empty() && w.shape()[0] > 0, ShapeError,
              "quant: weight tensor has no output channel axis");
  const std::size_t ch = w.shape()[0];
  return {w.data().data(), ch, w.size() / ch};
}

}  // namespace

ChannelSteps minmax_channels(const nn::FTensor& w, int bits) {
  auto view = channel_view(w);
  ChannelSteps out;
  out.s.resize(view.channels);
  out.z.resize(view.channels);
  for (std::size_t c = 0; c < view.channels; ++c) {
    auto r = minmax_step(view.base + c * view.step, view.step, bits);
    out.s[c] = r.s;
    out.z[c] = r.z;
    out.fallback |= r.fallback;
  }
  return out;
}

ChannelSteps init_step_pnorm(const nn::FTensor& w, int bits, double p_ord) {
  GENIE_CHECK(bits >= 2, ConfigError, "init_step_pnorm: bits must be >= 2");
  GENIE_CHECK(p_ord > 0.0, ConfigError, "init_step_pnorm: norm must be > 0");
  auto view = channel_view(w);
  const int qp = weight_qmax(bits);
  ChannelSteps out;
  out.s.resize(view.channels);
  out.z.resize(view.channels);
  for (std::size_t c = 0; c < view.channels; ++c) {
    const float* wc = view.base + c * view.step;
    auto mm = minmax_step(wc, view.step, bits);
    if (mm.fallback) {
      out.s[c] = mm.s;
      out.z[c] = mm.z;
      out.fallback = true;
      continue;
    }
    double mn = wc[0];
    for (std::size_t i = 1; i < view.step; ++i) mn = std::min(mn, double(wc[i]));
    double best_err = std::numeric_limits<double>::infinity();
    float best_s = mm.s;
    int best_z = mm.z;
    for (int k = 1; k <= kGridSize; ++k) {
      const double s = double(mm.s) * k / kGridSize;
      const int z = zero_point_for(mn, s, 0, qp);
      double err = 0.0;
      for (std::size_t i = 0; i < view.step; ++i) {
        const int q =
            clamp_int(static_cast<int>(round_half_up(wc[i] / s)) + z, 0, qp);
        err += std::pow(std::fabs(wc[i] - s * (q - z)), p_ord);
      }
      if (err < best_err) {
        best_err = err;
        best_s = static_cast<float>(s);
        best_z = z;
      }
    }
    out.s[c] = best_s;
    out.z[c] = best_z;
  }
  return out;
}

double rectified_sigmoid_value(double v) {
  const double sig = 1.0 / (1.0 + std::exp(-v));
  return std::clamp(sig * 1.2 - 0.1, 0.0, 1.0);
}

double inverse_rectified_sigmoid(double h) {
  GENIE_CHECK(h > 0.0 && h < 1.0, NumericError,
              "inverse_rectified_sigmoid: argument outside (0, 1)");
  const double u = (h + 0.1) / 1.2;
  return std::log(u / (1.0 - u));
}

nn::FTensor init_soft_bits(const nn::FTensor& w, const ChannelSteps& st) {
  auto view = channel_view(w);
  GENIE_CHECK(st.s.size() == view.channels, ShapeError,
              "init_soft_bits: channel count mismatch");
  std::vector<float> v(w.size());
  for (std::size_t c = 0; c < view.channels; ++c) {
    const double s = st.s[c];
    for (std::size_t i = 0; i < view.step; ++i) {
      const double u = double(view.base[c * view.step + i]) / s;
      const double frac = std::clamp(u - std::floor(u), 1e-4, 1.0 - 1e-4);
      v[c * view.step + i] =
          static_cast<float>(inverse_rectified_sigmoid(frac));
    }
  }
  return nn::FTensor::from(w.shape(), std::move(v), /*requires_grad=*/true);
}

BetaAt beta_at(int step, int total, const BetaSchedule& bs) {
  GENIE_CHECK(step >= 0 && step < total, ConfigError,
              "beta_at: step outside [0, total)");
  GENIE_CHECK(bs.beta_start > bs.beta_end && bs.beta_end > 0.0f, ConfigError,
              "beta_at: schedule must decay toward a positive end");
  GENIE_CHECK(bs.warmup_frac >= 0.0f && bs.warmup_frac < 1.0f, ConfigError,
              "beta_at: warmup fraction outside [0, 1)");
  const int warmup = static_cast<int>(bs.warmup_frac * total);
  if (step < warmup) return {bs.beta_start, false};
  const int span = std::max(1, total - 1 - warmup);
  const float f = static_cast<float>(step - warmup) / span;
  // cosine decay spends a large tail of the schedule near beta_end, where
  // the regularizer can push interior soft bits all the way to {0,1}
  const float c = 0.5f * (1.0f + std::cos(3.14159265f * f));
  return {bs.beta_end + (bs.beta_start - bs.beta_end) * c, true};
}

ActStep init_act_step(const float* x, std::size_t n, int bits) {
  GENIE_CHECK(bits >= 2, ConfigError, "init_act_step: bits must be >= 2");
  GENIE_CHECK(n > 0, ShapeError, "init_act_step: empty batch");
  const int qn = act_qmin(bits), qp = act_qmax(bits);
  double amax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    GENIE_CHECK(std::isfinite(x[i]), NumericError, "init_act_step: non-finite");
    amax = std::max(amax, std::fabs(double(x[i])));
  }
  if (amax == 0.0) return {static_cast<float>(kTinyStep), true};
  const double s_max = amax / qp;
  double best_err = std::numeric_limits<double>::infinity();
  double best_s = s_max;
  for (int k = 1; k <= kGridSize; ++k) {
    const double s = s_max * k / kGridSize;
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      // same rounding as the activation quantizer op
      double r = std::round(x[i] / s);
      r = std::clamp(r, double(qn), double(qp));
      const double d = x[i] - s * r;
      err += d * d;
    }
    if (err < best_err) {
      best_err = err;
      best_s = s;
    }
  }
  return {static_cast<float>(best_s), false};
}

}  // namespace genie::quant

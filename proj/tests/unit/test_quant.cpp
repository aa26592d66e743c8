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

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"
#include "genie/quant/quant.hpp"
#include "genie/rng.hpp"
#include "gradcheck.hpp"

using namespace genie;
using nn::FTensor;
using testing::DTensor;

namespace {

// reconstruction error of one flat slice at (s, z) under the p-norm, in f64
double slice_error(const float* w, std::size_t n, double s, int z, int qp,
                   double p_ord) {
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    int q = static_cast<int>(quant::round_half_up(w[i] / s)) + z;
    q = std::min(std::max(q, 0), qp);
    err += std::pow(std::fabs(double(w[i]) - s * (q - z)), p_ord);
  }
  return err;
}

FTensor random_weights(tns::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(tns::numel(shape));
  for (auto& x : v) x = static_cast<float>(rng.normal() * 0.1);
  return FTensor::from(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("minmax step matches the closed forms") {
  // spread 2 over 2^2-1 levels
  std::vector<float> a = {-1.0f, -0.25f, 0.5f, 1.0f};
  auto ra = quant::minmax_step(a.data(), a.size(), 2);
  CHECK(ra.s == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(ra.z == 1);
  CHECK(!ra.fallback);
  // both extremes stay representable within half a step
  std::vector<int> wi(a.size());
  std::vector<float> wq(a.size());
  quant::quantize_uniform(a.data(), a.size(), ra.s, ra.z, 0, 3, wi.data(),
                          wq.data());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(wi[i] >= 0);
    CHECK(wi[i] <= 3);
    CHECK(std::fabs(a[i] - wq[i]) <= 0.5 * ra.s + 1e-6);
  }

  std::vector<float> b = {0.0f, 3.0f, 7.0f, 15.0f};
  auto rb = quant::minmax_step(b.data(), b.size(), 4);
  CHECK(rb.s == 1.0f);
  CHECK(rb.z == 0);
  quant::quantize_uniform(b.data(), b.size(), rb.s, rb.z, 0, 15, wi.data(),
                          wq.data());
  CHECK(wi[0] == 0);
  CHECK(wi[3] == 15);
  CHECK(wq[3] == 15.0f);
}

TEST_CASE("minmax step flags degenerate slices") {
  std::vector<float> c = {0.5f, 0.5f, 0.5f};
  auto r = quant::minmax_step(c.data(), c.size(), 4);
  CHECK(r.fallback);
  CHECK(r.s == doctest::Approx(0.5 * std::ldexp(1.0, -3)));
  CHECK(r.z == 8);

  std::vector<float> zero = {0.0f, 0.0f};
  auto rz = quant::minmax_step(zero.data(), zero.size(), 4);
  CHECK(rz.fallback);
  CHECK(rz.s > 0.0f);

  CHECK_THROWS_AS(quant::minmax_step(c.data(), c.size(), 1), ConfigError);
  CHECK_THROWS_AS(quant::minmax_step(c.data(), 0, 4), ShapeError);
  std::vector<float> bad = {0.0f, std::numeric_limits<float>::quiet_NaN()};
  CHECK_THROWS_AS(quant::minmax_step(bad.data(), bad.size(), 4), NumericError);
}

TEST_CASE("uniform quantization pinned cases") {
  float w = 0.49f, wq = -1.0f;
  int wi = -1;
  quant::quantize_uniform(&w, 1, 1.0f, 0, 0, 3, &wi, &wq);
  CHECK(wi == 0);
  CHECK(wq == 0.0f);

  // exact lattice points round-trip bitwise with z = 0
  for (float s : {0.3f, 1.0f, 0.0625f, 2.0f / 3.0f}) {
    for (int k = 0; k <= 15; ++k) {
      const float x = s * static_cast<float>(k);
      quant::quantize_uniform(&x, 1, s, 0, 0, 15, &wi, &wq);
      CHECK(wi == k);
      CHECK(wq == x);
    }
  }
}

TEST_CASE("uniform quantization idempotence and half-step bound") {
  Rng rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    const int bits = 2 + static_cast<int>(rng.next_below(7));
    const int qp = quant::weight_qmax(bits);
    const float s = 0.01f + 1.99f * static_cast<float>(rng.uniform());
    const int z = static_cast<int>(rng.next_below(std::uint32_t(qp + 1)));
    const float w = static_cast<float>((rng.uniform() * 2.0 - 1.0) * 4.0);

    int wi = -1;
    float wq = 0.0f;
    quant::quantize_uniform(&w, 1, s, z, 0, qp, &wi, &wq);
    CHECK(wi >= 0);
    CHECK(wi <= qp);

    int wi2 = -1;
    quant::quantize_uniform(&wq, 1, s, z, 0, qp, &wi2, nullptr);
    CHECK(wi2 == wi);

    // in-range values land within half a step
    const double lo = double(s) * (0 - z), hi = double(s) * (qp - z);
    if (w >= lo && w <= hi)
      CHECK(std::fabs(double(w) - double(wq)) <= 0.5 * double(s) + 1e-6);
  }
}

TEST_CASE("uniform quantization rejects bad inputs") {
  float w = 1.0f;
  CHECK_THROWS_AS(quant::quantize_uniform(&w, 1, 0.0f, 0, 0, 3, nullptr, nullptr),
                  NumericError);
  CHECK_THROWS_AS(quant::quantize_uniform(&w, 1, -1.0f, 0, 0, 3, nullptr, nullptr),
                  NumericError);
  CHECK_THROWS_AS(quant::quantize_uniform(&w, 1, 1.0f, 0, 3, 3, nullptr, nullptr),
                  ConfigError);
  const float inf = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(quant::quantize_uniform(&inf, 1, 1.0f, 0, 0, 3, nullptr, nullptr),
                  NumericError);
}

TEST_CASE("p-norm step init recovers an exact lattice") {
  // dyadic step keeps every product exact in f32, so the full-range
  // candidate k=100 reconstructs with literally zero error while any
  // smaller step clips the extremes
  const float step = 0.0625f;
  const int z = 5, qp = 15;
  std::vector<float> vals;
  for (int q = 0; q <= qp; ++q)
    vals.push_back(step * static_cast<float>(q - z));
  std::vector<float> two_channels = vals;
  two_channels.insert(two_channels.end(), vals.rbegin(), vals.rend());
  auto w = FTensor::from({2, 16}, std::move(two_channels));

  for (double p_ord : {1.0, 2.0, 3.0}) {
    auto st = quant::init_step_pnorm(w, 4, p_ord);
    REQUIRE(st.s.size() == 2);
    for (int c = 0; c < 2; ++c) {
      CHECK(st.s[c] == step);
      CHECK(st.z[c] == z);
      CHECK(slice_error(w.data().data() + 16 * c, 16, st.s[c], st.z[c], qp,
                        p_ord) == 0.0);
    }
    CHECK(!st.fallback);
  }
}

TEST_CASE("p-norm step init dominates the min-max candidate") {
  auto w = random_weights({4, 3, 3, 3}, 91);
  for (double p_ord : {1.0, 2.0, 2.4, 3.0}) {
    auto st = quant::init_step_pnorm(w, 4, p_ord);
    auto mm = quant::minmax_channels(w, 4);
    for (int c = 0; c < 4; ++c) {
      const float* wc = w.data().data() + 27 * c;
      const double got = slice_error(wc, 27, st.s[c], st.z[c], 15, p_ord);
      const double base = slice_error(wc, 27, mm.s[c], mm.z[c], 15, p_ord);
      CHECK(got <= base + 1e-12);
    }
  }
}

TEST_CASE("p-norm step init matches a brute-force grid scan") {
  Rng rng(37);
  std::vector<float> vals(64);
  for (auto& v : vals) v = static_cast<float>(rng.uniform() * 2.0 - 1.0);
  auto w = FTensor::from({1, 64}, std::vector<float>(vals));

  for (double p_ord : {1.0, 2.0, 2.4}) {
    auto mm = quant::minmax_step(vals.data(), vals.size(), 4);
    double mn = vals[0];
    for (float v : vals) mn = std::min(mn, double(v));

    double best_err = std::numeric_limits<double>::infinity();
    double best_s = mm.s;
    int best_z = mm.z;
    for (int k = 1; k <= 100; ++k) {
      const double s = double(mm.s) * k / 100.0;
      const int z = std::min(
          std::max(-static_cast<int>(quant::round_half_up(mn / s)), 0), 15);
      const double err = slice_error(vals.data(), vals.size(), s, z, 15, p_ord);
      if (err < best_err) {
        best_err = err;
        best_s = s;
        best_z = z;
      }
    }
    auto st = quant::init_step_pnorm(w, 4, p_ord);
    CHECK(st.s[0] == static_cast<float>(best_s));
    CHECK(st.z[0] == best_z);
  }
}

TEST_CASE("p-norm step init flags degenerate channels") {
  auto w = FTensor::from({2, 4}, {0.0f, 0.0f, 0.0f, 0.0f,  //
                                  -0.3f, 0.1f, 0.2f, 0.4f});
  auto st = quant::init_step_pnorm(w, 4, 2.0);
  CHECK(st.fallback);
  CHECK(st.s[0] > 0.0f);
  CHECK(st.s[1] > 0.0f);

  CHECK_THROWS_AS(quant::init_step_pnorm(w, 1, 2.0), ConfigError);
  CHECK_THROWS_AS(quant::init_step_pnorm(w, 4, 0.0), ConfigError);
  CHECK_THROWS_AS(quant::init_step_pnorm(w, 4, -1.0), ConfigError);
}

TEST_CASE("rectified sigmoid midpoint, saturation and inverse") {
  CHECK(quant::rectified_sigmoid_value(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(quant::rectified_sigmoid_value(50.0) == 1.0);
  CHECK(quant::rectified_sigmoid_value(-50.0) == 0.0);

  for (double h : {0.5, 0.1, 0.9, 0.999, 0.001}) {
    const double v = quant::inverse_rectified_sigmoid(h);
    CHECK(quant::rectified_sigmoid_value(v) == doctest::Approx(h).epsilon(1e-6));
  }
  CHECK_THROWS_AS(quant::inverse_rectified_sigmoid(0.0), NumericError);
  CHECK_THROWS_AS(quant::inverse_rectified_sigmoid(1.0), NumericError);

  // tensor op agrees with the scalar form
  Rng rng(5);
  std::vector<float> vv(32);
  for (auto& x : vv) x = static_cast<float>(rng.normal() * 3.0);
  auto t = quant::rectified_sigmoid(FTensor::from({32}, std::vector<float>(vv)));
  for (int i = 0; i < 32; ++i)
    CHECK(t.data()[i] ==
          doctest::Approx(quant::rectified_sigmoid_value(vv[i])).epsilon(1e-6));
}

TEST_CASE("soft quantization with saturated bits equals hard rounding") {
  // dyadic lattice keeps w/s exact in both f32 and f64, so the rounding
  // indicator is unambiguous between the soft forward and the scalar path
  const float step = 0.0625f;
  const int z = 5, qp = 15;
  std::vector<float> vals;
  for (int m = -4; m < 10; ++m) {
    vals.push_back(step * (static_cast<float>(m) + 0.25f));
    vals.push_back(step * (static_cast<float>(m) + 0.75f));
  }
  const int n = static_cast<int>(vals.size());
  auto w = FTensor::from({1, n}, std::vector<float>(vals));
  auto s = FTensor::from({1}, {step});
  auto zf = FTensor::from({1}, {static_cast<float>(z)});

  std::vector<float> v(n);
  for (int i = 0; i < n; ++i) {
    const double u = double(vals[i]) / double(step);
    v[i] = (u - std::floor(u)) >= 0.5 ? 20.0f : -20.0f;
  }
  auto soft = quant::soft_quant_weights(
      w, s, zf, FTensor::from({1, n}, std::move(v)), 0, qp);
  std::vector<float> wq(n);
  quant::quantize_uniform(vals.data(), vals.size(), step, z, 0, qp, nullptr,
                          wq.data());
  for (int i = 0; i < n; ++i) CHECK(soft.data()[i] == wq[i]);
}

TEST_CASE("soft quantization matches hard rounding on generic weights") {
  auto w = random_weights({3, 2, 3, 3}, 11);
  auto st = quant::init_step_pnorm(w, 4, 2.0);
  const std::size_t per = w.size() / 3;
  std::vector<float> v(w.size());
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < per; ++i) {
      const double u = double(w.data()[c * per + i]) / double(st.s[c]);
      v[c * per + i] = (u - std::floor(u)) >= 0.5 ? 20.0f : -20.0f;
    }
  std::vector<float> zf = {float(st.z[0]), float(st.z[1]), float(st.z[2])};
  auto soft = quant::soft_quant_weights(
      w, FTensor::from({3}, std::vector<float>(st.s)),
      FTensor::from({3}, std::move(zf)), FTensor::from(w.shape(), std::move(v)),
      0, 15);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<float> wq(per);
    quant::quantize_uniform(w.data().data() + c * per, per, st.s[c], st.z[c],
                            0, 15, nullptr, wq.data());
    for (std::size_t i = 0; i < per; ++i)
      CHECK(soft.data()[c * per + i] == wq[i]);
  }
}

TEST_CASE("soft quantization trains step and bits jointly") {
  auto w = random_weights({2, 2, 3, 3}, 23);
  auto st = quant::init_step_pnorm(w, 4, 2.0);
  std::vector<float> zf = {float(st.z[0]), float(st.z[1])};
  auto s = FTensor::from({2}, std::vector<float>(st.s), true);
  auto v = quant::init_soft_bits(w, st);
  CHECK(v.requires_grad());

  auto y = tns::sum_all(quant::soft_quant_weights(
      w, s, FTensor::from({2}, std::move(zf)), v, 0, 15));
  tns::backward(y);
  double snorm = 0.0, vnorm = 0.0;
  for (float g : s.grad()) snorm += std::fabs(g);
  for (float g : v.grad()) vnorm += std::fabs(g);
  CHECK(snorm > 0.0);
  CHECK(vnorm > 0.0);

  auto bad = FTensor::from({3}, {0.0f, 0.0f, 0.0f});
  CHECK_THROWS_AS(quant::soft_quant_weights(w, s, s, bad, 0, 15), ShapeError);
}

TEST_CASE("soft bit init starts at the clamped rounding residual") {
  auto w = random_weights({2, 8}, 77);
  auto st = quant::init_step_pnorm(w, 4, 2.0);
  auto v = quant::init_soft_bits(w, st);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 8; ++i) {
      const double u = double(w.data()[c * 8 + i]) / double(st.s[c]);
      const double frac =
          std::min(std::max(u - std::floor(u), 1e-4), 1.0 - 1e-4);
      CHECK(quant::rectified_sigmoid_value(v.data()[c * 8 + i]) ==
            doctest::Approx(frac).epsilon(2e-5));
    }
}

TEST_CASE("soft quantization gradients match the STE surrogate") {
  // interior points: fractional parts away from 0/1 and clip range not hit
  const std::vector<double> u0 = {-2.7, 3.3, 5.7, 8.25};
  const std::vector<double> vv = {-1.2, 0.7, 0.3, -0.4};
  const std::vector<double> ss = {0.5, 0.25};
  const int z = 3, qp = 15;

  std::vector<double> wvals(8);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 4; ++i) wvals[c * 4 + i] = ss[c] * u0[i];
  auto w = DTensor::from({2, 4}, std::vector<double>(wvals));
  auto s = DTensor::from({2}, std::vector<double>(ss), true);
  auto zf = DTensor::from({2}, {double(z), double(z)});
  std::vector<double> vrep = {vv[0], vv[1], vv[2], vv[3],
                              vv[0], vv[1], vv[2], vv[3]};
  auto v = DTensor::from({2, 4}, std::vector<double>(vrep), true);

  auto y = tns::sum_all(quant::soft_quant_weights(w, s, zf, v, 0, qp));
  tns::backward(y);

  // surrogate freezes the rounding residual of the starting point, which is
  // exactly what the straight-through floor differentiates
  auto surrogate = [&](int c, double sc) {
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double kappa = u0[i] - std::floor(u0[i]);
      const double h = quant::rectified_sigmoid_value(vrep[c * 4 + i]);
      double q = wvals[c * 4 + i] / sc - kappa + h + z;
      q = std::min(std::max(q, 0.0), double(qp));
      total += sc * (q - z);
    }
    return total;
  };
  for (int c = 0; c < 2; ++c) {
    const double h = 1e-6 * ss[c];
    const double fd = (surrogate(c, ss[c] + h) - surrogate(c, ss[c] - h)) /
                      (2.0 * h);
    CHECK(testing::rel_err(s.grad()[c], fd) <= 1e-5);
  }

  // V enters smoothly, so plain finite differences apply
  testing::gradcheck(
      {v},
      [&](const std::vector<DTensor>& leaves) {
        return tns::sum_all(
            quant::soft_quant_weights(w, s, zf, leaves[0], 0, qp));
      },
      1e-6, 1e-6);
}

TEST_CASE("rounding regularizer values and bounds") {
  auto half = FTensor::zeros({2, 3});
  CHECK(quant::rounding_reg(half, 2.0f).item() ==
        doctest::Approx(6.0).epsilon(1e-6));

  auto hard = FTensor::from({4}, {20.0f, -20.0f, 20.0f, -20.0f});
  CHECK(quant::rounding_reg(hard, 2.0f).item() == 0.0f);
  CHECK(quant::rounding_reg(hard, 7.0f).item() == 0.0f);

  const float v75 = static_cast<float>(quant::inverse_rectified_sigmoid(0.75));
  auto mid = FTensor::from({4}, {v75, v75, v75, v75});
  CHECK(quant::rounding_reg(mid, 2.0f).item() ==
        doctest::Approx(3.0).epsilon(1e-5));

  Rng rng(3);
  std::vector<float> vv(64);
  for (auto& x : vv) x = static_cast<float>(rng.normal() * 2.0);
  const float reg =
      quant::rounding_reg(FTensor::from({64}, std::move(vv)), 3.0f).item();
  CHECK(reg >= 0.0f);
  CHECK(reg <= 64.0f);

  CHECK_THROWS_AS(quant::rounding_reg(half, 0.0f), ConfigError);
  CHECK_THROWS_AS(quant::rounding_reg(half, -2.0f), ConfigError);

  // smooth in V away from the rectifier clamps
  testing::gradcheck(
      {DTensor::from({3}, {-0.8, 0.2, 1.1}, true)},
      [](const std::vector<DTensor>& leaves) {
        return quant::rounding_reg(leaves[0], 4.0);
      },
      1e-6, 1e-6);
}

TEST_CASE("beta schedule warmup and endpoints") {
  quant::BetaSchedule bs;
  const int total = 100;
  auto a = quant::beta_at(0, total, bs);
  CHECK(!a.lambda_active);
  CHECK(a.beta == 20.0f);
  CHECK(!quant::beta_at(19, total, bs).lambda_active);

  auto b = quant::beta_at(20, total, bs);
  CHECK(b.lambda_active);
  CHECK(b.beta == 20.0f);

  auto c = quant::beta_at(total - 1, total, bs);
  CHECK(c.lambda_active);
  CHECK(c.beta == doctest::Approx(2.0f).epsilon(1e-6));

  float prev = 21.0f;
  for (int t = 0; t < total; ++t) {
    const float beta = quant::beta_at(t, total, bs).beta;
    CHECK(beta <= prev + 1e-6f);
    prev = beta;
  }

  quant::BetaSchedule nowarm{20.0f, 2.0f, 0.0f};
  CHECK(quant::beta_at(0, 10, nowarm).lambda_active);
  CHECK(quant::beta_at(0, 10, nowarm).beta == 20.0f);

  CHECK_THROWS_AS(quant::beta_at(-1, 10, bs), ConfigError);
  CHECK_THROWS_AS(quant::beta_at(10, 10, bs), ConfigError);
  CHECK_THROWS_AS(quant::beta_at(0, 10, quant::BetaSchedule{2.0f, 20.0f, 0.2f}),
                  ConfigError);
}

TEST_CASE("activation step init recovers an exact lattice") {
  const float step = 0.0625f;
  std::vector<float> x;
  for (int k = -7; k <= 7; ++k) x.push_back(step * static_cast<float>(k));
  auto st = quant::init_act_step(x.data(), x.size(), 4);
  CHECK(!st.fallback);
  CHECK(st.s == step);
  double mse = 0.0;
  for (float v : x) {
    double r = std::round(double(v) / st.s);
    r = std::min(std::max(r, -8.0), 7.0);
    const double d = double(v) - double(st.s) * r;
    mse += d * d;
  }
  CHECK(mse == 0.0);
}

TEST_CASE("activation step init dominates min-max and is deterministic") {
  Rng rng(64);
  std::vector<float> x(1024);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  auto st = quant::init_act_step(x.data(), x.size(), 4);
  CHECK(st.s > 0.0f);

  auto mse_at = [&](double s) {
    double total = 0.0;
    for (float v : x) {
      double r = std::round(double(v) / s);
      r = std::min(std::max(r, -8.0), 7.0);
      const double d = double(v) - s * r;
      total += d * d;
    }
    return total;
  };
  double amax = 0.0;
  for (float v : x) amax = std::max(amax, std::fabs(double(v)));
  CHECK(mse_at(st.s) <= mse_at(amax / 7.0) + 1e-12);

  auto again = quant::init_act_step(x.data(), x.size(), 4);
  CHECK(again.s == st.s);
}

TEST_CASE("activation step init flags degenerate input") {
  std::vector<float> zero(16, 0.0f);
  auto st = quant::init_act_step(zero.data(), zero.size(), 4);
  CHECK(st.fallback);
  CHECK(st.s > 0.0f);

  CHECK_THROWS_AS(quant::init_act_step(zero.data(), 0, 4), ShapeError);
  CHECK_THROWS_AS(quant::init_act_step(zero.data(), 16, 1), ConfigError);
  std::vector<float> bad = {1.0f, std::numeric_limits<float>::infinity()};
  CHECK_THROWS_AS(quant::init_act_step(bad.data(), bad.size(), 4),
                  NumericError);
}

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

#include "doctest.h"
#include "genie/distill/distill.hpp"
#include "genie/distill/generator.hpp"
#include "genie/distill/swing.hpp"
#include "genie/nn/pretrain.hpp"
#include "genie/tensor/ops.hpp"

using namespace genie;
using nn::FTensor;

namespace {

bool same_bytes(const FTensor& a, const FTensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(),
                     a.size() * sizeof(float)) == 0;
}

FTensor random_f32(tns::Shape shape, std::uint64_t seed, bool rg = false) {
  Rng rng(seed);
  std::vector<float> v(tns::numel(shape));
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return FTensor::from(std::move(shape), std::move(v), rg);
}

}  // namespace

TEST_CASE("swing at offset (0,0) equals the plain strided conv") {
  for (int stride : {2, 3}) {
    auto x = random_f32({2, 3, 13, 11}, 7 + stride);
    auto w = random_f32({4, 3, 3, 3}, 17 + stride);
    auto plain = tns::conv2d(x, w, stride, 1);
    auto swung = distill::swing_conv2d<float>(x, w, nullptr, stride, 1, {0, 0});
    CHECK(same_bytes(plain, swung));
  }
}

TEST_CASE("swing offset selects the shifted sampling lattice") {
  // 1x1x4x4 input with distinct entries, 1x1 identity kernel, stride 2,
  // offset (1,1): output rows/cols {1,3}
  std::vector<float> vals(16);
  for (int i = 0; i < 16; ++i) vals[i] = static_cast<float>(i);
  auto x = FTensor::from({1, 1, 4, 4}, vals);
  auto w = FTensor::from({1, 1, 1, 1}, {1.0f});
  auto y = distill::swing_conv2d<float>(x, w, nullptr, 2, 0, {1, 1});
  REQUIRE(y.shape() == tns::Shape{1, 1, 2, 2});
  CHECK(y.data() == std::vector<float>{5.0f, 7.0f, 13.0f, 15.0f});

  auto y10 = distill::swing_conv2d<float>(x, w, nullptr, 2, 0, {1, 0});
  CHECK(y10.data() == std::vector<float>{4.0f, 6.0f, 12.0f, 14.0f});
}

TEST_CASE("swing output shape matches the plain conv for every offset") {
  Rng rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    const int stride = 2 + static_cast<int>(rng.next_below(2));
    const int h = stride + 2 + static_cast<int>(rng.next_below(12));
    const int w = stride + 2 + static_cast<int>(rng.next_below(12));
    const int ci = 1 + static_cast<int>(rng.next_below(3));
    const int co = 1 + static_cast<int>(rng.next_below(4));
    const int k = 1 + 2 * static_cast<int>(rng.next_below(2));
    const int pad = k / 2;
    if (h + 2 * pad < k || w + 2 * pad < k) continue;
    auto x = random_f32({2, ci, h, w}, 100 + trial);
    auto wt = random_f32({co, ci, k, k}, 200 + trial);
    auto want = tns::conv2d(x, wt, stride, pad).shape();
    for (int dy = 0; dy < stride; ++dy)
      for (int dx = 0; dx < stride; ++dx)
        CHECK(distill::swing_conv2d<float>(x, wt, nullptr, stride, pad,
                                           {dy, dx})
                  .shape() == want);
  }
}

TEST_CASE("swing rejects stride 1 and out-of-range offsets") {
  auto x = random_f32({1, 1, 8, 8}, 3);
  auto w = random_f32({1, 1, 3, 3}, 4);
  CHECK_THROWS_AS(distill::swing_conv2d<float>(x, w, nullptr, 1, 1, {0, 0}),
                  ConfigError);
  CHECK_THROWS_AS(distill::swing_conv2d<float>(x, w, nullptr, 2, 1, {2, 0}),
                  ConfigError);
}

TEST_CASE("swing offsets are uniform over the stride lattice") {
  Rng rng(12345);
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < 1000; ++i) {
    auto off = distill::sample_swing_offset(rng, 2);
    ++counts[off.dy * 2 + off.dx];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - 250.0) * (c - 250.0) / 250.0;
  CHECK(chi2 < 11.345);  // chi-square 3 dof at p = 0.01

  int counts3[9] = {0};
  for (int i = 0; i < 1000; ++i) {
    auto off = distill::sample_swing_offset(rng, 3);
    ++counts3[off.dy * 3 + off.dx];
  }
  double chi2b = 0.0;
  const double e = 1000.0 / 9.0;
  for (int c : counts3) chi2b += (c - e) * (c - e) / e;
  CHECK(chi2b < 20.09);  // 8 dof at p = 0.01
}

TEST_CASE("generator maps latents to 3x32x32 images") {
  Rng rng(5);
  auto gen = distill::Generator::init(rng);
  auto z = random_f32({4, 256}, 9);
  auto img = distill::generate(gen, z);
  REQUIRE(img.shape() == tns::Shape{4, 3, 32, 32});
  for (float v : img.data()) CHECK(std::isfinite(v));

  // different latent rows produce different images
  const std::size_t n = std::size_t(3) * 32 * 32;
  float mad = 0.0f;
  for (std::size_t i = 0; i < n; ++i)
    mad = std::max(mad, std::fabs(img.data()[i] - img.data()[n + i]));
  CHECK(mad > 0.0f);

  CHECK_THROWS_AS(distill::generate(gen, random_f32({4, 255}, 1)), ShapeError);
}

TEST_CASE("generator gradients w.r.t. latents match finite differences") {
  Rng rng(6);
  auto gen = distill::Generator::init(rng);
  auto z = random_f32({3, 256}, 10, true);
  auto mask = random_f32({3, 3, 32, 32}, 11);
  const float inv = 1.0f / static_cast<float>(mask.size());

  auto project = [&](const FTensor& zt) {
    return tns::mul_s(tns::sum_all(tns::mul(distill::generate(gen, zt), mask)),
                      inv);
  };
  auto loss = project(z);
  tns::backward(loss);
  REQUIRE(z.has_grad());

  // directional derivatives along unit directions; per-coordinate FD drowns
  // in f32 forward noise, and the tolerance sits above the ~5e-3 floor that
  // two convs plus batch-stat BNs leave at this precision
  for (int trial = 0; trial < 4; ++trial) {
    auto dir = random_f32({3, 256}, 300 + trial);
    double nrm = 0.0;
    for (float v : dir.data()) nrm += double(v) * v;
    nrm = std::sqrt(nrm);
    for (auto& v : dir.data()) v = static_cast<float>(v / nrm);

    const float h = 0.02f;
    auto zp = z.detach(), zm = z.detach();
    double ana = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      zp.data()[i] += h * dir.data()[i];
      zm.data()[i] -= h * dir.data()[i];
      ana += double(z.grad()[i]) * double(dir.data()[i]);
    }
    const double num =
        (double(project(zp).item()) - double(project(zm).item())) / (2.0 * h);
    const double rel =
        std::fabs(num - ana) / std::max({std::fabs(num), std::fabs(ana), 1e-6});
    CHECK(rel <= 2e-2);
  }
}

TEST_CASE("bns distance follows the per-layer sum of squared gaps") {
  using DT = tns::Tensor<double>;
  // single layer: mu gap [1,0], sigma gap [0,2] -> 1 + 4
  {
    std::vector<DT> mu{DT::from({2}, {1.0, 0.0})};
    std::vector<DT> sg{DT::from({2}, {1.0, 3.0})};
    std::vector<std::pair<DT, DT>> run{{DT::from({2}, {0.0, 0.0}),
                                        DT::from({2}, {1.0, 1.0})}};
    CHECK(distill::bns_distance(mu, sg, run).item() == doctest::Approx(5.0));
  }
  // exact stat match -> 0
  {
    std::vector<DT> mu{DT::from({3}, {0.5, -0.25, 4.0})};
    std::vector<DT> sg{DT::from({3}, {1.5, 2.0, 0.125})};
    std::vector<std::pair<DT, DT>> run{{mu[0].detach(), sg[0].detach()}};
    CHECK(distill::bns_distance(mu, sg, run).item() == 0.0);
  }
  // random taps vs independent f64 summation oracle
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<DT> mu, sg;
    std::vector<std::pair<DT, DT>> run;
    double want = 0.0;
    const int layers = 1 + static_cast<int>(rng.next_below(5));
    for (int l = 0; l < layers; ++l) {
      const int c = 1 + static_cast<int>(rng.next_below(16));
      std::vector<double> a(c), b(c), ra(c), rb(c);
      for (int i = 0; i < c; ++i) {
        a[i] = rng.normal();
        b[i] = std::fabs(rng.normal()) + 0.1;
        ra[i] = rng.normal();
        rb[i] = std::fabs(rng.normal()) + 0.1;
        want += (a[i] - ra[i]) * (a[i] - ra[i]) + (b[i] - rb[i]) * (b[i] - rb[i]);
      }
      mu.push_back(DT::from({c}, a));
      sg.push_back(DT::from({c}, b));
      run.emplace_back(DT::from({c}, ra), DT::from({c}, rb));
    }
    CHECK(std::fabs(distill::bns_distance(mu, sg, run).item() - want) <=
          1e-9 * std::max(1.0, want));
  }
  // count mismatch rejected
  {
    std::vector<DT> mu{DT::from({1}, {0.0}), DT::from({1}, {0.0})};
    std::vector<DT> sg = mu;
    std::vector<std::pair<DT, DT>> run{{DT::from({1}, {0.0}),
                                        DT::from({1}, {1.0})}};
    CHECK_THROWS_AS(distill::bns_distance(mu, sg, run), ShapeError);
  }
}

TEST_CASE("bns loss is invariant to batch permutation") {
  auto m = nn::build_model(nn::arch_preset("plain-cnn-6"), 3);
  auto x = random_f32({6, 3, 32, 32}, 21);
  // reversed batch order
  const std::size_t img = std::size_t(3) * 32 * 32;
  std::vector<float> rev(x.size());
  for (int i = 0; i < 6; ++i)
    std::memcpy(rev.data() + std::size_t(5 - i) * img,
                x.data().data() + std::size_t(i) * img, img * sizeof(float));
  auto xr = FTensor::from({6, 3, 32, 32}, std::move(rev));

  nn::ForwardOpts opts;
  opts.bn_mode = nn::BnMode::kBatchStats;
  opts.tap_bn = true;
  nn::TapRecord ta, tb;
  m.forward(x, opts, &ta);
  m.forward(xr, opts, &tb);
  const float la = distill::bns_loss(ta, m).item();
  const float lb = distill::bns_loss(tb, m).item();
  CHECK(la == doctest::Approx(lb).epsilon(1e-6));
}

TEST_CASE("distill_batch at T=0 returns the fresh generator's images") {
  auto m = nn::build_model(nn::arch_preset("plain-cnn-6"), 8);
  distill::DistillConfig cfg;
  cfg.batch = 4;
  cfg.iters = 0;
  auto res = distill::distill_batch(m, cfg, 42);
  CHECK(res.loss_trace.empty());
  CHECK(!res.images.requires_grad());

  Rng root(42);
  Rng zr = root.fork(1), gr = root.fork(2);
  auto z = tns::randn<float>({4, 256}, zr);
  auto gen = distill::Generator::init(gr);
  CHECK(same_bytes(res.images, distill::generate(gen, z)));
}

TEST_CASE("distill_batch is reproducible and trains both z and generator") {
  auto m = nn::build_model(nn::arch_preset("plain-cnn-6"), 8);
  distill::DistillConfig cfg;
  cfg.batch = 4;
  cfg.iters = 6;
  auto a = distill::distill_batch(m, cfg, 5);
  auto b = distill::distill_batch(m, cfg, 5);
  CHECK(same_bytes(a.images, b.images));
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.final_loss() < a.initial_loss());

  auto c = distill::distill_batch(m, cfg, 6);
  CHECK(!same_bytes(a.images, c.images));

  // against the frozen T=0 reference both optimized leaves moved the output
  cfg.iters = 0;
  auto base = distill::distill_batch(m, cfg, 5);
  CHECK(!same_bytes(a.images, base.images));
}

TEST_CASE("direct pixel distillation descends from gaussian noise") {
  auto m = nn::build_model(nn::arch_preset("plain-cnn-6"), 8);
  distill::DistillConfig cfg;
  cfg.batch = 4;
  cfg.iters = 0;
  auto base = distill::distill_direct(m, cfg, 9);
  Rng root(9);
  Rng pr = root.fork(1);
  auto noise = tns::randn<float>({4, 3, 32, 32}, pr);
  CHECK(same_bytes(base.images, noise));

  cfg.iters = 10;
  auto res = distill::distill_direct(m, cfg, 9);
  REQUIRE(res.loss_trace.size() == 10);
  int drops = 0;
  for (int t = 1; t < 10; ++t)
    if (res.loss_trace[t] < res.loss_trace[t - 1]) ++drops;
  CHECK(drops >= 8);
  CHECK(res.final_loss() < res.initial_loss());
  auto res2 = distill::distill_direct(m, cfg, 9);
  CHECK(same_bytes(res.images, res2.images));
}

TEST_CASE("generator-only baseline trains without latent state") {
  auto m = nn::build_model(nn::arch_preset("plain-cnn-6"), 8);
  distill::DistillConfig cfg;
  cfg.batch = 4;
  cfg.iters = 5;
  auto a = distill::distill_generator_only(m, cfg, 3);
  auto b = distill::distill_generator_only(m, cfg, 3);
  CHECK(same_bytes(a.images, b.images));
  REQUIRE(a.loss_trace.size() == 5);
  CHECK(a.images.shape() == tns::Shape{4, 3, 32, 32});
}

TEST_CASE("distill_dataset stacks independent batches") {
  auto m = nn::build_model(nn::arch_preset("plain-cnn-6"), 8);
  distill::DistillConfig cfg;
  cfg.batch = 4;
  cfg.iters = 2;
  auto full = distill::distill_dataset(m, 12, cfg, 1000);
  REQUIRE(full.images.shape() == tns::Shape{12, 3, 32, 32});
  REQUIRE(full.traces.size() == 3);

  // batch 0 alone reproduces the first slice bit-exactly
  auto solo = distill::distill_dataset(m, 4, cfg, 1000);
  CHECK(std::memcmp(solo.images.data().data(), full.images.data().data(),
                    solo.images.size() * sizeof(float)) == 0);

  // worker count cannot change bytes
  auto threaded = distill::distill_dataset(m, 12, cfg, 1000, 3);
  CHECK(same_bytes(threaded.images, full.images));
  CHECK(threaded.traces == full.traces);

  CHECK_THROWS_AS(distill::distill_dataset(m, 10, cfg, 1), ConfigError);
}

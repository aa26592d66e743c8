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
#include <cstdio>
#include <cstring>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "genie/io/checkpoint.hpp"
#include "genie/nn/data.hpp"
#include "genie/nn/pretrain.hpp"
#include "genie/quant/qmodel.hpp"
#include "genie/rng.hpp"

using namespace genie;
using nn::FTensor;

namespace {

// three blocks (stem conv, residual, pool+classifier), five quant layers
constexpr const char* kMicroArch = R"JSON({
  "name": "micro",
  "input": [3, 16, 16],
  "num_classes": 4,
  "layers": [
    {"kind": "conv", "out": 8, "k": 3, "stride": 1, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "residual", "out": 16, "stride": 2},
    {"kind": "gap"},
    {"kind": "linear"}
  ]
})JSON";

// same shape at the synthetic dataset's resolution, for pretrained tests
constexpr const char* kMicro32Arch = R"JSON({
  "name": "micro32",
  "input": [3, 32, 32],
  "num_classes": 10,
  "layers": [
    {"kind": "conv", "out": 8, "k": 3, "stride": 1, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "residual", "out": 16, "stride": 2},
    {"kind": "gap"},
    {"kind": "linear"}
  ]
})JSON";

struct TmpFile {
  std::string path;
  explicit TmpFile(std::string p) : path(std::move(p)) {}
  ~TmpFile() { std::remove(path.c_str()); }
};

bool same_bytes(const FTensor& a, const FTensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(),
                     a.size() * sizeof(float)) == 0;
}

FTensor random_images(int n, int ch, int hw, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(std::size_t(n) * ch * hw * hw);
  for (auto& x : v) x = static_cast<float>(rng.normal() * 0.5);
  return FTensor::from({n, ch, hw, hw}, std::move(v));
}

nn::ModelGraph micro_model(std::uint64_t seed) {
  return nn::build_model(nn::parse_arch(kMicroArch), seed);
}

quant::ReconConfig quick_cfg(int steps) {
  quant::ReconConfig cfg;
  cfg.steps = steps;
  cfg.batch = 8;
  cfg.seed = 9;
  return cfg;
}

std::vector<float> copy_data(const FTensor& t) { return t.data(); }

}  // namespace

TEST_CASE("quantized table mirrors the model structure") {
  auto teacher = nn::build_model(nn::arch_preset("resnet-tiny"), 4);
  auto qm = quant::make_quantized(teacher, quick_cfg(0));

  REQUIRE(qm.layers.size() == 12);  // stem + 4 residuals (3+2+3+2) + linear
  CHECK(qm.num_blocks() == 6);
  CHECK(qm.block_first_layer ==
        std::vector<int>{0, 1, 4, 6, 9, 11, 12});

  CHECK(qm.layers.front().bits_w == 8);
  CHECK(!qm.layers.front().act_enabled);
  CHECK(qm.layers.back().bits_w == 8);
  CHECK(qm.layers.back().bits_a == 8);
  CHECK(qm.layers.back().is_linear);
  for (std::size_t i = 1; i + 1 < qm.layers.size(); ++i) {
    CHECK(qm.layers[i].bits_w == 4);
    CHECK(qm.layers[i].bits_a == 4);
    CHECK(qm.layers[i].act_enabled);
  }
  for (const auto& l : qm.layers) {
    CHECK(l.s_w.size() == std::size_t(l.w.dim(0)));
    CHECK(l.v.shape() == l.w.shape());
    CHECK(l.s_w.requires_grad());
    CHECK(l.v.requires_grad());
    const int qp = quant::weight_qmax(l.bits_w);
    for (int z : l.z) {
      CHECK(z >= 0);
      CHECK(z <= qp);
    }
    CHECK(!l.s_a.defined());  // waits for its block's first batch
  }

  auto cfg = quick_cfg(0);
  cfg.first_last_8bit = false;
  auto flat = quant::make_quantized(teacher, cfg);
  for (const auto& l : flat.layers) {
    CHECK(l.bits_w == 4);
    CHECK(l.bits_a == 4);
  }

  cfg.bits_w = 1;
  CHECK_THROWS_AS(quant::make_quantized(teacher, cfg), ConfigError);
}

TEST_CASE("zero reconstruction steps leave parameters untouched") {
  auto teacher = micro_model(3);
  auto cfg = quick_cfg(0);
  cfg.lambda = 0.0f;
  auto qm = quant::make_quantized(teacher, cfg);
  auto calib = random_images(16, 3, 16, 3001);

  auto s_before = copy_data(qm.layers[0].s_w);
  auto v_before = copy_data(qm.layers[0].v);
  auto rep = quant::reconstruct_block(teacher, qm, 0, calib);
  CHECK(rep.block == 0);
  CHECK(rep.trace.empty());
  CHECK(rep.initial_mse == rep.final_mse);
  CHECK(rep.initial_mse > 0.0);
  CHECK(copy_data(qm.layers[0].s_w) == s_before);
  CHECK(copy_data(qm.layers[0].v) == v_before);
  CHECK(qm.next_block == 1);
}

TEST_CASE("blocks must be reconstructed in order") {
  auto teacher = micro_model(3);
  auto qm = quant::make_quantized(teacher, quick_cfg(0));
  auto calib = random_images(16, 3, 16, 3001);
  CHECK_THROWS_AS(quant::reconstruct_block(teacher, qm, 1, calib),
                  ConfigError);
  CHECK_THROWS_AS(quant::reconstruct_block(teacher, qm, 7, calib),
                  ConfigError);
  CHECK_THROWS_AS(quant::reconstruct_block(teacher, qm, 0,
                                           random_images(4, 3, 16, 1)),
                  ConfigError);  // smaller than a batch
}

TEST_CASE("activation steps cannot be used before their block runs") {
  auto teacher = micro_model(3);
  auto qm = quant::make_quantized(teacher, quick_cfg(0));
  auto probe = random_images(2, 3, 16, 77);

  // stem block has no input quantizer, so the prefix of one block works
  CHECK(quant::qforward_prefix(qm, probe, 1).defined());
  CHECK_THROWS_WITH_AS(quant::qforward(qm, probe),
                       doctest::Contains("before its block"), ConfigError);
  CHECK_THROWS_AS(quant::qforward_prefix(qm, probe, 4), ConfigError);
}

TEST_CASE("one reconstruction step moves step sizes and bits jointly") {
  auto teacher = micro_model(5);
  auto calib = random_images(16, 3, 16, 501);

  auto cfg = quick_cfg(1);
  auto qm = quant::make_quantized(teacher, cfg);
  auto s0 = copy_data(qm.layers[0].s_w);
  auto v0 = copy_data(qm.layers[0].v);
  quant::reconstruct_block(teacher, qm, 0, calib);
  CHECK(copy_data(qm.layers[0].s_w) != s0);
  CHECK(copy_data(qm.layers[0].v) != v0);

  // frozen-step ablation trains the bits but pins the weight steps
  cfg.learn_step = false;
  auto frozen = quant::make_quantized(teacher, cfg);
  quant::reconstruct_block(teacher, frozen, 0, calib);
  CHECK(copy_data(frozen.layers[0].s_w) == s0);
  CHECK(copy_data(frozen.layers[0].v) != v0);
}

TEST_CASE("block reports replay externally with saturated bits") {
  auto teacher = micro_model(8);
  const std::uint64_t teacher_hash = nn::model_hash(teacher);
  auto calib = random_images(24, 3, 16, 801);

  auto cfg = quick_cfg(60);
  auto qm = quant::make_quantized(teacher, cfg);
  auto rep0 = quant::reconstruct_block(teacher, qm, 0, calib);
  CHECK(rep0.trace.size() == 60);

  // the student input of block 1 is the quantized prefix, not the teacher
  nn::ForwardOpts ev;
  auto tap = quant::qforward_prefix(qm, calib, 1);
  auto fp_tap =
      teacher.forward_units(0, teacher.blocks[0].second, calib, ev, nullptr);
  CHECK(!same_bytes(tap, fp_tap));

  // the report measures block 1 at its lattice snapshot; saturating the
  // soft bits afterwards makes the soft forward take the same values, so
  // an external replay must reproduce the number exactly
  qm.cfg.steps = 0;
  auto rep1 = quant::reconstruct_block(teacher, qm, 1, calib);
  CHECK(rep1.initial_mse == rep1.final_mse);
  for (int l = qm.block_first_layer[1]; l < qm.block_first_layer[2]; ++l)
    for (auto& x : qm.layers[l].v.data()) x = x >= 0.0f ? 20.0f : -20.0f;
  auto student2 = quant::qforward_prefix(qm, calib, 2);
  auto target =
      teacher.forward_units(0, qm.model.blocks[1].second, calib, ev, nullptr);
  REQUIRE(student2.shape() == target.shape());
  double manual = 0.0;
  for (std::size_t i = 0; i < student2.size(); ++i) {
    const double d =
        double(student2.data()[i]) - double(target.data()[i]);
    manual += d * d;
  }
  manual /= double(target.size());
  CHECK(rep1.initial_mse == doctest::Approx(manual).epsilon(1e-12));

  CHECK(nn::model_hash(teacher) == teacher_hash);  // teacher never moves
}

TEST_CASE("a finished anneal lowers every block's error on a trained model") {
  // improvement over nearest rounding needs the bit anneal to complete:
  // each soft bit travels a fixed distance at roughly lr_v per step, so
  // short schedules leave bits mid-flight and the snapshot catches garbage
  auto data = nn::make_desk_dataset(256, 7);
  auto teacher = nn::build_model(nn::parse_arch(kMicro32Arch), 9);
  nn::TrainConfig tc;
  tc.epochs = 4;
  tc.seed = 9;
  nn::pretrain(teacher, data, tc);

  std::vector<int> idx(24);
  std::iota(idx.begin(), idx.end(), 0);
  auto calib = nn::gather_images(data, idx.data(), 24);

  auto cfg = quick_cfg(3000);
  cfg.first_last_8bit = false;
  auto qm = quant::make_quantized(teacher, cfg);
  for (int b = 0; b < qm.num_blocks(); ++b) {
    auto rep = quant::reconstruct_block(teacher, qm, b, calib);
    CHECK(rep.final_mse < rep.initial_mse);
    CHECK(rep.initial_mse > 0.0);
  }
  CHECK(quant::binarization_fraction(qm) > 0.9);
}

TEST_CASE("full quantization is deterministic in the seed") {
  auto calib = random_images(16, 3, 16, 901);
  auto probe = random_images(4, 3, 16, 902);

  auto t1 = micro_model(6);
  auto t2 = micro_model(6);
  auto cfg = quick_cfg(8);
  auto a = quant::quantize_model(t1, calib, cfg);
  auto b = quant::quantize_model(t2, calib, cfg);
  REQUIRE(a.blocks.size() == 3);
  CHECK(same_bytes(quant::qforward(a.qm, probe), quant::qforward(b.qm, probe)));
  for (std::size_t i = 0; i < a.qm.layers.size(); ++i) {
    CHECK(copy_data(a.qm.layers[i].s_w) == copy_data(b.qm.layers[i].s_w));
    CHECK(copy_data(a.qm.layers[i].v) == copy_data(b.qm.layers[i].v));
    if (a.qm.layers[i].s_a.defined())
      CHECK(copy_data(a.qm.layers[i].s_a) == copy_data(b.qm.layers[i].s_a));
  }

  cfg.seed = 10;
  auto c = quant::quantize_model(micro_model(6), calib, cfg);
  CHECK(!same_bytes(quant::qforward(a.qm, probe), quant::qforward(c.qm, probe)));
}

TEST_CASE("non-finite reconstruction loss aborts with the step index") {
  auto teacher = micro_model(3);
  auto calib = random_images(16, 3, 16, 3001);

  auto cfg = quick_cfg(64);
  auto qm = quant::make_quantized(teacher, cfg);
  // a blown-up step size overflows the squared error to inf in one batch
  qm.layers[0].s_w.data()[0] = 1e19f;
  try {
    quant::reconstruct_block(teacher, qm, 0, calib);
    FAIL("poisoned step size should surface as NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("diverged at step") != std::string::npos);
  }
}

TEST_CASE("hardening freezes saturated bits without changing the forward") {
  auto teacher = micro_model(12);
  auto calib = random_images(16, 3, 16, 1201);
  auto probe = random_images(4, 3, 16, 1202);

  auto res = quant::quantize_model(teacher, calib, quick_cfg(0));
  auto& qm = res.qm;
  for (auto& l : qm.layers)
    for (auto& x : l.v.data()) x = x >= 0.0f ? 20.0f : -20.0f;
  CHECK(quant::binarization_fraction(qm) == 1.0);

  auto soft = quant::qforward(qm, probe);
  quant::harden(qm);
  CHECK(qm.hardened);
  auto hard = quant::qforward(qm, probe);
  CHECK(same_bytes(soft, hard));

  for (const auto& l : qm.layers) {
    REQUIRE(l.w_int.size() == l.w.size());
    const int qp = quant::weight_qmax(l.bits_w);
    const std::size_t per = l.w.size() / l.w.dim(0);
    for (std::size_t i = 0; i < l.w_int.size(); ++i) {
      CHECK(l.w_int[i] >= 0);
      CHECK(l.w_int[i] <= qp);
      const std::size_t c = i / per;
      CHECK(l.w_hard.data()[i] ==
            l.s_w.data()[c] * static_cast<float>(l.w_int[i] - l.z[c]));
    }
  }

  // repeat is a no-op; further reconstruction is refused
  auto w_hard0 = copy_data(qm.layers[1].w_hard);
  quant::harden(qm);
  CHECK(copy_data(qm.layers[1].w_hard) == w_hard0);
  qm.next_block = 0;
  CHECK_THROWS_AS(quant::reconstruct_block(teacher, qm, 0, calib),
                  ConfigError);
}

TEST_CASE("binarization fraction pins the extreme cases") {
  auto teacher = micro_model(2);
  auto qm = quant::make_quantized(teacher, quick_cfg(0));
  for (auto& l : qm.layers)
    for (auto& x : l.v.data()) x = 0.0f;  // h = 0.5 everywhere
  CHECK(quant::binarization_fraction(qm) == 0.0);
  for (auto& l : qm.layers)
    for (auto& x : l.v.data()) x = 20.0f;
  CHECK(quant::binarization_fraction(qm) == 1.0);
}

TEST_CASE("quantized checkpoints round-trip bit-exactly") {
  TmpFile tmp("tmp_qmodel_roundtrip.genz");
  auto teacher = micro_model(21);
  auto calib = random_images(16, 3, 16, 2101);
  auto probe = random_images(4, 3, 16, 2102);

  auto cfg = quick_cfg(6);
  auto res = quant::quantize_model(teacher, calib, cfg);
  CHECK_THROWS_AS(quant::save_quantized(res.qm, tmp.path), ConfigError);

  quant::harden(res.qm);
  quant::save_quantized(res.qm, tmp.path);
  auto back = quant::load_quantized(tmp.path);

  CHECK(back.hardened);
  CHECK(back.next_block == back.num_blocks());
  REQUIRE(back.layers.size() == res.qm.layers.size());
  for (std::size_t i = 0; i < back.layers.size(); ++i) {
    const auto& a = res.qm.layers[i];
    const auto& b = back.layers[i];
    CHECK(a.name == b.name);
    CHECK(a.bits_w == b.bits_w);
    CHECK(a.bits_a == b.bits_a);
    CHECK(a.act_enabled == b.act_enabled);
    CHECK(a.w_int == b.w_int);
    CHECK(a.z == b.z);
    CHECK(copy_data(a.s_w) == copy_data(b.s_w));
    CHECK(copy_data(a.v) == copy_data(b.v));
    CHECK(same_bytes(a.w_hard, b.w_hard));
    if (a.s_a.defined()) CHECK(copy_data(a.s_a) == copy_data(b.s_a));
  }
  CHECK(back.cfg.bits_w == cfg.bits_w);
  CHECK(back.cfg.steps == cfg.steps);
  CHECK(back.cfg.seed == cfg.seed);
  CHECK(same_bytes(quant::qforward(res.qm, probe),
                   quant::qforward(back, probe)));

  // evaluation is identical through the round trip
  nn::LabeledImages fake;
  fake.images = random_images(12, 3, 16, 2103);
  fake.num_classes = 4;
  for (int i = 0; i < 12; ++i) fake.labels.push_back(i % 4);
  CHECK(quant::evaluate_quantized(res.qm, fake) ==
        quant::evaluate_quantized(back, fake));
}

TEST_CASE("quantized checkpoints reject other container kinds") {
  TmpFile tmp("tmp_qmodel_notq.genz");
  auto teacher = micro_model(1);
  io::save_model(teacher, tmp.path);
  CHECK_THROWS_AS(quant::load_quantized(tmp.path), IoError);
}

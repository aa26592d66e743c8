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

#include "genie/distill/distill.hpp"

#include <cmath>
#include <cstring>
#include <thread>

#include "genie/tensor/optim.hpp"
#include "genie/tensor/ops.hpp"

namespace genie::distill {
namespace {

// rng fork purposes within one distillation batch
constexpr std::uint64_t kZInit = 1;
constexpr std::uint64_t kGenInit = 2;
constexpr std::uint64_t kSwing = 3;
constexpr std::uint64_t kZResample = 4;

void check_cfg(const nn::ModelGraph& m, const DistillConfig& cfg) {
  GENIE_CHECK(cfg.batch >= 2, ConfigError, "distill batch must be >= 2");
  GENIE_CHECK(cfg.iters >= 0, ConfigError, "distill iteration count < 0");
  GENIE_CHECK(m.bn_count > 0, ConfigError,
              "distillation needs a model with bn statistics");
  GENIE_CHECK(m.arch.in_h == 32 && m.arch.in_w == 32 && m.arch.in_ch == 3,
              ConfigError, "generator emits 3x32x32 images only");
}

// One optimization step's worth of loss: synthetic batch -> tapped forward
// -> BNS distance. `swing_rng` may be null (plain strided convs).
FTensor synthetic_loss(const nn::ModelGraph& m, const FTensor& images,
                       Rng* swing_rng) {
  nn::ForwardOpts opts;
  opts.bn_mode = nn::BnMode::kBatchStats;
  opts.tap_bn = true;
  opts.swing_rng = swing_rng;
  nn::TapRecord taps;
  m.forward(images, opts, &taps);
  return bns_loss(taps, m);
}

float checked_loss(const FTensor& loss, int iter) {
  const float v = loss.item();
  GENIE_CHECK(std::isfinite(v), NumericError,
              "distillation diverged at iteration " + std::to_string(iter));
  return v;
}

}  // namespace

FTensor bns_loss(const nn::TapRecord& taps,
                 const std::vector<std::pair<FTensor, FTensor>>& running) {
  return bns_distance(taps.bn_mu, taps.bn_sigma, running);
}

FTensor bns_loss(const nn::TapRecord& taps, const nn::ModelGraph& m) {
  return bns_loss(taps, m.bn_running());
}

DistillResult distill_batch(nn::ModelGraph& m, const DistillConfig& cfg,
                            std::uint64_t seed) {
  check_cfg(m, cfg);
  m.set_requires_grad(false);
  Rng root(seed);
  Rng z_rng = root.fork(kZInit);
  Rng gen_rng = root.fork(kGenInit);
  Rng swing_rng = root.fork(kSwing);

  auto z = tns::randn<float>({cfg.batch, Generator::kLatentDim}, z_rng, 0.0f,
                             1.0f, true);
  Generator gen = Generator::init(gen_rng);

  tns::Adam<float> opt({{gen.params(), cfg.lr_gen}, {{z}, cfg.lr_z}});
  tns::ExponentialSched<float> gen_sched{cfg.lr_gen, 0.95f, 100};
  tns::PlateauSched<float> z_sched(cfg.lr_z, 0.5f, 50, 1e-4f);

  DistillResult out;
  out.loss_trace.reserve(cfg.iters);
  for (int t = 0; t < cfg.iters; ++t) {
    auto loss = synthetic_loss(m, generate(gen, z),
                               cfg.swing ? &swing_rng : nullptr);
    const float lv = checked_loss(loss, t);
    opt.zero_grad();
    tns::backward(loss);
    opt.set_lr(0, gen_sched.at(t));
    opt.set_lr(1, z_sched.observe(lv));
    opt.step();
    out.loss_trace.push_back(lv);
  }
  out.images = generate(gen, z).detach();
  return out;
}

DistillResult distill_direct(nn::ModelGraph& m, const DistillConfig& cfg,
                             std::uint64_t seed) {
  check_cfg(m, cfg);
  m.set_requires_grad(false);
  Rng root(seed);
  Rng px_rng = root.fork(kZInit);
  auto pixels = tns::randn<float>({cfg.batch, 3, m.arch.in_h, m.arch.in_w},
                                  px_rng, 0.0f, 1.0f, true);
  tns::Adam<float> opt({{{pixels}, cfg.lr_z}});
  tns::PlateauSched<float> sched(cfg.lr_z, 0.5f, 50, 1e-4f);

  DistillResult out;
  out.loss_trace.reserve(cfg.iters);
  for (int t = 0; t < cfg.iters; ++t) {
    auto loss = synthetic_loss(m, pixels, nullptr);
    const float lv = checked_loss(loss, t);
    opt.zero_grad();
    tns::backward(loss);
    opt.set_lr(0, sched.observe(lv));
    opt.step();
    out.loss_trace.push_back(lv);
  }
  out.images = pixels.detach();
  return out;
}

DistillResult distill_generator_only(nn::ModelGraph& m,
                                     const DistillConfig& cfg,
                                     std::uint64_t seed) {
  check_cfg(m, cfg);
  m.set_requires_grad(false);
  Rng root(seed);
  Rng gen_rng = root.fork(kGenInit);
  Rng swing_rng = root.fork(kSwing);
  Rng resample_rng = root.fork(kZResample);
  Generator gen = Generator::init(gen_rng);

  tns::Adam<float> opt({{gen.params(), cfg.lr_gen}});
  tns::ExponentialSched<float> gen_sched{cfg.lr_gen, 0.95f, 100};

  DistillResult out;
  out.loss_trace.reserve(cfg.iters);
  FTensor z;
  for (int t = 0; t < cfg.iters; ++t) {
    z = tns::randn<float>({cfg.batch, Generator::kLatentDim}, resample_rng);
    auto loss = synthetic_loss(m, generate(gen, z),
                               cfg.swing ? &swing_rng : nullptr);
    const float lv = checked_loss(loss, t);
    opt.zero_grad();
    tns::backward(loss);
    opt.set_lr(0, gen_sched.at(t));
    opt.step();
    out.loss_trace.push_back(lv);
  }
  if (!z.defined())
    z = tns::randn<float>({cfg.batch, Generator::kLatentDim}, resample_rng);
  out.images = generate(gen, z).detach();
  return out;
}

DatasetResult distill_dataset(nn::ModelGraph& m, int num_images,
                              const DistillConfig& cfg,
                              std::uint64_t base_seed, int workers) {
  check_cfg(m, cfg);
  GENIE_CHECK(num_images >= cfg.batch && num_images % cfg.batch == 0,
              ConfigError, "image count must be a multiple of the batch size");
  m.set_requires_grad(false);
  const int nbatch = num_images / cfg.batch;

  std::vector<DistillResult> results(nbatch);
  std::vector<std::string> failures(nbatch);
  if (workers <= 0) workers = max_threads();
  workers = std::min(workers, nbatch);

  auto run_range = [&](int w) {
    for (int k = w; k < nbatch; k += workers) {
      try {
        results[k] = distill_batch(m, cfg, base_seed ^ std::uint64_t(k));
      } catch (const Error& e) {
        failures[k] = "batch " + std::to_string(k) + ": " + e.what();
      }
    }
  };
  if (workers <= 1) {
    run_range(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_range, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures)
    if (!f.empty()) throw NumericError("distill_dataset: " + f);

  const std::size_t img = std::size_t(3) * m.arch.in_h * m.arch.in_w;
  std::vector<float> all(std::size_t(num_images) * img);
  DatasetResult out;
  for (int k = 0; k < nbatch; ++k) {
    std::memcpy(all.data() + std::size_t(k) * cfg.batch * img,
                results[k].images.data().data(),
                std::size_t(cfg.batch) * img * sizeof(float));
    out.traces.push_back(std::move(results[k].loss_trace));
  }
  out.images = FTensor::from({num_images, 3, m.arch.in_h, m.arch.in_w},
                             std::move(all));
  return out;
}

}  // namespace genie::distill

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

#ifndef GENIE_DISTILL_DISTILL_HPP_
#define GENIE_DISTILL_DISTILL_HPP_

// Data distillation against the BN-statistics loss
//
//   L = sum_l ( ||mu_l^s - mu_l||^2 + ||sigma_l^s - sigma_l||^2 )
//
// where (mu_l^s, sigma_l^s) are batch statistics of the synthetic batch
// tapped at every BN layer and (mu_l, sigma_l) are the model's running
// stats. Three synthesis modes share the loss:
//
//   distill_batch           trainable latents through a trainable generator,
//                           swing convolution on (the shipped method)
//   distill_direct          pixels optimized directly, no generator, swing
//                           off (ZeroQ-style baseline)
//   distill_generator_only  generator trained on freshly resampled Gaussian
//                           inputs each step (GBA-style baseline)
//
// The teacher's parameters are frozen on entry and its BN layers normalize
// with batch statistics during distillation.

#include <cstdint>
#include <vector>

#include "genie/distill/generator.hpp"
#include "genie/nn/model.hpp"

namespace genie::distill {

struct DistillConfig {
  int batch = 128;
  int iters = 500;  // T
  float lr_gen = 0.01f;  // exponential decay 0.95 every 100 steps
  float lr_z = 0.1f;     // reduce-on-plateau 0.5 / patience 50 / floor 1e-4
  bool swing = true;
};

struct DistillResult {
  FTensor images;  // detached, batch x C x H x W
  std::vector<float> loss_trace;  // one entry per iteration

  float initial_loss() const { return loss_trace.empty() ? 0.0f : loss_trace.front(); }
  float final_loss() const { return loss_trace.empty() ? 0.0f : loss_trace.back(); }
};

// Scalar BNS distance between per-layer batch stats and reference stats.
template <typename T>
tns::Tensor<T> bns_distance(
    const std::vector<tns::Tensor<T>>& mu_s,
    const std::vector<tns::Tensor<T>>& sigma_s,
    const std::vector<std::pair<tns::Tensor<T>, tns::Tensor<T>>>& running) {
  GENIE_CHECK(!running.empty(), ShapeError, "bns: no bn layers");
  GENIE_CHECK(mu_s.size() == running.size() && sigma_s.size() == running.size(),
              ShapeError, "bns: tap/stat count mismatch");
  tns::Tensor<T> total;
  for (std::size_t l = 0; l < running.size(); ++l) {
    auto dm = tns::sub(mu_s[l], running[l].first);
    auto ds = tns::sub(sigma_s[l], running[l].second);
    auto term = tns::add(tns::sum_all(tns::mul(dm, dm)),
                         tns::sum_all(tns::mul(ds, ds)));
    total = l == 0 ? term : tns::add(total, term);
  }
  return total;
}

// BNS loss from a tap record against running stats (tap order).
FTensor bns_loss(const nn::TapRecord& taps,
                 const std::vector<std::pair<FTensor, FTensor>>& running);
FTensor bns_loss(const nn::TapRecord& taps, const nn::ModelGraph& m);

DistillResult distill_batch(nn::ModelGraph& m, const DistillConfig& cfg,
                            std::uint64_t seed);
DistillResult distill_direct(nn::ModelGraph& m, const DistillConfig& cfg,
                             std::uint64_t seed);
DistillResult distill_generator_only(nn::ModelGraph& m,
                                     const DistillConfig& cfg,
                                     std::uint64_t seed);

// num_images / cfg.batch independent batches; batch k runs on seed
// base_seed ^ k, so any subset of batches reproduces byte-identically.
// Batches run on up to GENIE_THREADS threads (or `workers` if nonzero);
// the result is byte-identical either way.
struct DatasetResult {
  FTensor images;  // num_images x C x H x W
  std::vector<std::vector<float>> traces;  // per batch
};
DatasetResult distill_dataset(nn::ModelGraph& m, int num_images,
                              const DistillConfig& cfg,
                              std::uint64_t base_seed, int workers = 0);

}  // namespace genie::distill

#endif  // GENIE_DISTILL_DISTILL_HPP_

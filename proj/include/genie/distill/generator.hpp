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

#ifndef GENIE_DISTILL_GENERATOR_HPP_
#define GENIE_DISTILL_GENERATOR_HPP_

// Latent-to-image generator: linear(256 -> 64*16*16), reshape, one
// upsampling block [nearest-2x -> conv3x3 -> bn -> leaky_relu(0.2)], then
// conv3x3 down to 3 channels, tanh, and a trailing affine bn. All bn layers
// run on batch statistics; the generator only ever sees training-style
// batches during distillation.

#include <cstdint>
#include <vector>

#include "genie/nn/model.hpp"

namespace genie::distill {

using nn::FTensor;

struct Generator {
  static constexpr int kLatentDim = 256;
  static constexpr int kBaseWidth = 64;
  static constexpr int kBaseSize = 16;

  FTensor fc_w, fc_b;
  FTensor conv1_w;  // bias-free, bn follows
  FTensor bn1_gamma, bn1_beta;
  FTensor conv2_w, conv2_b;
  FTensor bn2_gamma, bn2_beta;

  static Generator init(Rng& rng);

  std::vector<FTensor> params() const;
  void set_requires_grad(bool on);
};

// batch x 256 -> batch x 3 x 32 x 32, differentiable in z and all
// generator parameters.
FTensor generate(const Generator& gen, const FTensor& z);

}  // namespace genie::distill

#endif  // GENIE_DISTILL_GENERATOR_HPP_

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

#include "genie/distill/generator.hpp"

#include <cmath>

#include "genie/tensor/ops.hpp"

namespace genie::distill {
namespace {

FTensor kaiming_uniform(tns::Shape shape, int fan_in, Rng& rng) {
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::vector<float> v(tns::numel(shape));
  for (auto& x : v) x = static_cast<float>(rng.uniform(-bound, bound));
  return FTensor::from(std::move(shape), std::move(v), true);
}

FTensor uniform_init(tns::Shape shape, double bound, Rng& rng) {
  std::vector<float> v(tns::numel(shape));
  for (auto& x : v) x = static_cast<float>(rng.uniform(-bound, bound));
  return FTensor::from(std::move(shape), std::move(v), true);
}

}  // namespace

Generator Generator::init(Rng& rng) {
  Generator g;
  const int w = kBaseWidth, d = kBaseWidth * kBaseSize * kBaseSize;
  g.fc_w = kaiming_uniform({d, kLatentDim}, kLatentDim, rng);
  g.fc_b = uniform_init({d}, 1.0 / std::sqrt(double(kLatentDim)), rng);
  g.conv1_w = kaiming_uniform({w, w, 3, 3}, w * 9, rng);
  g.bn1_gamma = FTensor::full({w}, 1.0f, true);
  g.bn1_beta = FTensor::zeros({w}, true);
  g.conv2_w = kaiming_uniform({3, w, 3, 3}, w * 9, rng);
  g.conv2_b = uniform_init({3}, 1.0 / std::sqrt(double(w * 9)), rng);
  g.bn2_gamma = FTensor::full({3}, 1.0f, true);
  g.bn2_beta = FTensor::zeros({3}, true);
  return g;
}

std::vector<FTensor> Generator::params() const {
  return {fc_w,    fc_b,     conv1_w, bn1_gamma, bn1_beta,
          conv2_w, conv2_b,  bn2_gamma, bn2_beta};
}

void Generator::set_requires_grad(bool on) {
  for (auto& p : params()) p.node()->requires_grad = on;
}

FTensor generate(const Generator& gen, const FTensor& z) {
  GENIE_CHECK(z.defined() && z.shape().size() == 2 &&
                  z.dim(1) == Generator::kLatentDim,
              ShapeError, "generate: z must be batch x 256");
  auto x = tns::linear(z, gen.fc_w, gen.fc_b);
  x = tns::reshape(x, {z.dim(0), Generator::kBaseWidth, Generator::kBaseSize,
                       Generator::kBaseSize});
  x = tns::upsample_nearest2x(x);
  x = tns::conv2d(x, gen.conv1_w, 1, 1);
  auto b1 = tns::batchnorm_train(x, gen.bn1_gamma, gen.bn1_beta, nn::kBnEps);
  x = tns::leaky_relu(b1.y, 0.2f);
  x = tns::conv2d(x, gen.conv2_w, gen.conv2_b, 1, 1);
  x = tns::tanh_t(x);
  auto b2 = tns::batchnorm_train(x, gen.bn2_gamma, gen.bn2_beta, nn::kBnEps);
  return b2.y;
}

}  // namespace genie::distill

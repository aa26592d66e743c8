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

#ifndef GENIE_NN_PRETRAIN_HPP_
#define GENIE_NN_PRETRAIN_HPP_

#include <ostream>

#include "genie/nn/data.hpp"
#include "genie/nn/model.hpp"

namespace genie::nn {

struct TrainConfig {
  int epochs = 8;
  int batch = 64;
  float lr = 2e-3f;
  std::uint64_t seed = 1;
  float bn_momentum = 0.1f;
  std::ostream* log = nullptr;
};

struct TrainStats {
  std::vector<float> epoch_loss;  // mean cross-entropy per epoch
  int steps = 0;
};

// Adam + cross-entropy training with batch-stats BN and EMA running-stat
// updates. Trailing partial batches are dropped (BN needs real batches).
// A non-finite loss aborts with the offending step in the message. The
// model is left in eval form: stats frozen, subsequent forwards pure.
TrainStats pretrain(ModelGraph& m, const LabeledImages& data,
                    const TrainConfig& cfg);

float evaluate_accuracy(const ModelGraph& m, const LabeledImages& data,
                        int batch = 128);

}  // namespace genie::nn

#endif  // GENIE_NN_PRETRAIN_HPP_

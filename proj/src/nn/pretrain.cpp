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

#include "genie/nn/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genie/tensor/optim.hpp"

namespace genie::nn {
namespace {

// rng fork purposes; distinct so adding streams never shifts existing ones
constexpr std::uint64_t kShufflePurpose = 11;

}  // namespace

TrainStats pretrain(ModelGraph& m, const LabeledImages& data,
                    const TrainConfig& cfg) {
  GENIE_CHECK(cfg.epochs >= 1 && cfg.batch >= 2, ConfigError,
              "pretrain needs epochs >= 1 and batch >= 2");
  GENIE_CHECK(data.count() >= cfg.batch, ConfigError,
              "dataset smaller than one batch");
  for (int lbl : data.labels)
    GENIE_CHECK(lbl >= 0 && lbl < m.arch.num_classes, ConfigError,
                "label outside model class range");

  m.set_requires_grad(true);
  tns::Adam<float> opt({{m.params(), cfg.lr}});
  Rng shuffle_rng = Rng(cfg.seed).fork(kShufflePurpose);

  ForwardOpts fwd;
  fwd.bn_mode = BnMode::kBatchStats;
  fwd.update_running = true;
  fwd.bn_momentum = cfg.bn_momentum;

  TrainStats stats;
  std::vector<int> order(data.count());
  std::iota(order.begin(), order.end(), 0);
  const int nbatch = data.count() / cfg.batch;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = data.count() - 1; i > 0; --i) {
      int j = static_cast<int>(
          shuffle_rng.next_below(static_cast<std::uint32_t>(i + 1)));
      std::swap(order[i], order[j]);
    }
    double epoch_loss = 0.0;
    for (int b = 0; b < nbatch; ++b) {
      auto x = gather_images(data, order.data() + b * cfg.batch, cfg.batch);
      auto y = gather_labels(data, order.data() + b * cfg.batch, cfg.batch);
      // divergence inside the step (a NaN loss or an op guard tripping on a
      // non-finite intermediate) is reported with the step index
      try {
        auto logits = m.forward(x, fwd);
        auto loss = tns::cross_entropy(logits, y);
        GENIE_CHECK(std::isfinite(loss.item()), NumericError, "loss not finite");
        opt.zero_grad();
        tns::backward(loss);
        opt.step();
        epoch_loss += loss.item();
      } catch (const NumericError& e) {
        throw NumericError("pretrain diverged at step " +
                           std::to_string(stats.steps) + ": " + e.what());
      }
      ++stats.steps;
    }
    stats.epoch_loss.push_back(static_cast<float>(epoch_loss / nbatch));
    if (cfg.log)
      (*cfg.log) << "epoch " << epoch << " loss " << stats.epoch_loss.back()
                 << "\n";
  }
  return stats;
}

float evaluate_accuracy(const ModelGraph& m, const LabeledImages& data,
                        int batch) {
  GENIE_CHECK(data.count() >= 1, ConfigError, "evaluate on empty dataset");
  ForwardOpts fwd;  // eval mode
  int correct = 0;
  std::vector<int> idx(batch);
  for (int start = 0; start < data.count(); start += batch) {
    const int n = std::min(batch, data.count() - start);
    std::iota(idx.begin(), idx.begin() + n, start);
    auto x = gather_images(data, idx.data(), n);
    auto logits = m.forward(x, fwd);
    const auto& ld = logits.data();
    const int k = logits.dim(1);
    for (int i = 0; i < n; ++i) {
      const float* row = ld.data() + std::size_t(i) * k;
      int arg = 0;
      for (int j = 1; j < k; ++j)
        if (row[j] > row[arg]) arg = j;
      if (arg == data.labels[start + i]) ++correct;
    }
  }
  return static_cast<float>(correct) / static_cast<float>(data.count());
}

}  // namespace genie::nn

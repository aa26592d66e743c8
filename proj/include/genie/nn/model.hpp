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

#ifndef GENIE_NN_MODEL_HPP_
#define GENIE_NN_MODEL_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "genie/nn/arch.hpp"
#include "genie/rng.hpp"
#include "genie/tensor/nnops.hpp"

namespace genie::nn {

using FTensor = tns::Tensor<float>;

inline constexpr float kBnEps = 1e-5f;

enum class BnMode { kEval, kBatchStats };

// Per-forward capture. bn_mu/bn_sigma follow BN execution order (residual
// body first, then the projection shortcut); block_out holds the activation
// at each block boundary.
struct TapRecord {
  std::vector<FTensor> bn_mu, bn_sigma;
  std::vector<FTensor> block_out;
};

struct ForwardOpts {
  BnMode bn_mode = BnMode::kEval;
  bool update_running = false;  // EMA-update running stats (kBatchStats only)
  float bn_momentum = 0.1f;
  Rng* swing_rng = nullptr;  // stride>1 convs take random swing offsets
  bool tap_bn = false;
  bool tap_blocks = false;
};

// One executable layer. Residual units carry their branch and projection
// shortcut as nested unit lists and count as a single block.
struct Unit {
  LayerKind kind;
  std::string name;
  int pid = -1;  // conv/linear index in forward order, -1 otherwise
  FTensor w, b;
  int stride = 1, pad = 0;
  float slope = 0.0f;
  FTensor gamma, beta;
  FTensor run_mu, run_sigma;  // value-only buffers, never on the tape
  std::vector<Unit> body, shortcut;
};

struct ModelGraph {
  ArchConfig arch;
  std::uint64_t seed = 0;
  std::vector<Unit> units;
  std::vector<std::pair<int, int>> blocks;  // [begin, end) ranges over units
  int bn_count = 0;
  int pid_count = 0;  // convs + linears

  FTensor forward(const FTensor& x, const ForwardOpts& opts,
                  TapRecord* taps = nullptr) const;
  FTensor forward_units(int begin, int end, const FTensor& x,
                        const ForwardOpts& opts, TapRecord* taps) const;
  FTensor forward_block(int block, const FTensor& x, const ForwardOpts& opts,
                        TapRecord* taps = nullptr) const;

  // trainable parameters in deterministic graph order
  std::vector<std::pair<std::string, FTensor>> named_params() const;
  std::vector<FTensor> params() const;
  // parameters plus BN running stats; the checkpoint payload
  std::vector<std::pair<std::string, FTensor>> named_state() const;
  // (mu, sigma) running stats per BN layer, in tap order
  std::vector<std::pair<FTensor, FTensor>> bn_running() const;

  void set_requires_grad(bool on);
};

ModelGraph build_model(const ArchConfig& cfg, std::uint64_t seed);

// FNV-1a over every state tensor's bytes in named_state order.
std::uint64_t model_hash(const ModelGraph& m);

}  // namespace genie::nn

#endif  // GENIE_NN_MODEL_HPP_

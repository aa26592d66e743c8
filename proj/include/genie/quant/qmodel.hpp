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

// Block-wise post-training quantization.
//
// A QuantizedModel wraps a frozen full-precision model. Every conv and
// linear layer gets per-channel weight steps s_w, integer zero points, soft
// rounding logits V, and a per-tensor step s_a for its input activations.
// Blocks are reconstructed in execution order: the student block sees inputs
// from the already-quantized prefix, targets come from the full-precision
// teacher, and within the optimized block activation quantizers randomly
// bypass elements (QDrop). Weight steps and soft bits train jointly; the
// step-size learning rates decay on a cosine to zero.
//
// Policy: with first_last_8bit on, the first and last layer weights and the
// last layer's input activations stay at 8 bits; the first layer's input
// (the image) is never quantized.

#ifndef GENIE_QUANT_QMODEL_HPP_
#define GENIE_QUANT_QMODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "genie/nn/data.hpp"
#include "genie/nn/model.hpp"
#include "genie/quant/quant.hpp"

namespace genie::quant {

using nn::FTensor;

struct ReconConfig {
  int bits_w = 4;
  int bits_a = 4;
  int steps = 2000;  // Adam iterations per block
  int batch = 32;
  float lambda = 1.0f;  // rounding regularizer weight
  BetaSchedule beta;
  float lr_s = 1e-4f;  // weight steps, cosine to 0
  float lr_v = 1e-3f;  // soft bits, constant
  float lr_a = 4e-5f;  // activation steps, cosine to 0
  float qdrop_prob = 0.5f;
  bool first_last_8bit = true;
  bool learn_step = true;  // frozen-step ablation trains only V and s_a
  double p_ord = 2.0;      // norm for the step-size init grid search
  // also quantize residual block outputs (block ends without a following
  // conv input quantizer do not occur in the shipped archs; off by default)
  bool quantize_block_output = false;
  std::uint64_t seed = 1;
};

struct QLayer {
  std::string name;
  int bits_w = 4, bits_a = 4;
  bool act_enabled = true;  // quantize this layer's input
  bool is_linear = false;
  int stride = 1, pad = 0;
  FTensor w, bias;  // teacher parameter handles (frozen)
  FTensor s_w;      // per-channel step, trainable during its block
  FTensor zf;       // zero points, float copy for graph composition
  std::vector<int> z;
  FTensor v;    // soft rounding logits, shaped like w
  FTensor s_a;  // input activation step; undefined until its block runs
  bool w_fallback = false, a_fallback = false;
  // set by harden()
  std::vector<int> w_int;
  FTensor w_hard;
};

struct QuantizedModel {
  nn::ModelGraph model;  // shares tensor handles with the teacher
  ReconConfig cfg;
  std::vector<QLayer> layers;          // convs and linears, execution order
  std::vector<int> block_first_layer;  // layer cursor at each block begin
  std::vector<FTensor> block_out_step;
  int next_block = 0;  // reconstruction progress
  bool hardened = false;

  int num_blocks() const { return static_cast<int>(model.blocks.size()); }
};

// builds the layer table and initializes s_w (p-norm grid), zero points and
// V for every layer; activation steps wait for their block's first batch
QuantizedModel make_quantized(const nn::ModelGraph& teacher,
                              const ReconConfig& cfg);

// initial_mse and final_mse are per-element reconstruction errors measured
// with the block's weights at their integer lattice snapshot (the values
// harden() would produce at that moment), so initial is the nearest-rounding
// baseline and final is the learned rounding. The trace records the raw soft
// training loss per step.
struct BlockReport {
  int block = 0;
  double initial_mse = 0.0, final_mse = 0.0;
  std::vector<float> trace;  // per-step total loss
};

// reconstructs one block against teacher targets; preceding blocks must
// already be reconstructed (their parameters are frozen afterwards)
BlockReport reconstruct_block(const nn::ModelGraph& teacher, QuantizedModel& qm,
                              int block, const FTensor& calib);

struct QuantResult {
  QuantizedModel qm;
  std::vector<BlockReport> blocks;
};

QuantResult quantize_model(const nn::ModelGraph& teacher, const FTensor& calib,
                           const ReconConfig& cfg);

// quantized forward, deterministic (no drop); soft weights before harden(),
// integer-backed weights after
FTensor qforward(const QuantizedModel& qm, const FTensor& x);

// forward through the first `blocks` blocks only; they must already be
// reconstructed. This is the tap a later block sees as its student input.
FTensor qforward_prefix(const QuantizedModel& qm, const FTensor& x,
                        int blocks);

float evaluate_quantized(const QuantizedModel& qm, const nn::LabeledImages& d,
                         int batch = 128);

// fraction of h(V) entries within tol of 0 or 1, over all layers
double binarization_fraction(const QuantizedModel& qm, double tol = 0.01);

// swaps soft rounding for hard bits h(V) >= 0.5 and stores integer weights;
// dequantized weights are exactly s_w * (w_int - z)
void harden(QuantizedModel& qm);

// Persistence for hardened models: one container holding the teacher state,
// per-layer integer weights, steps, zero points, rounding logits and
// activation steps, plus the policy metadata. load_quantized rebuilds the
// graph and dequantizes bit-exactly; loaded models are evaluation artifacts
// (no further reconstruction).
void save_quantized(const QuantizedModel& qm, const std::string& path);
QuantizedModel load_quantized(const std::string& path);

}  // namespace genie::quant

#endif  // GENIE_QUANT_QMODEL_HPP_

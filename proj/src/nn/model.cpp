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

#include "genie/nn/model.hpp"

#include <cmath>

#include "genie/distill/swing.hpp"
#include "genie/tensor/ops.hpp"

namespace genie::nn {
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

// Convs are bias-free: each one is followed by bn, whose beta absorbs any
// offset.
Unit make_conv(std::string name, int in_ch, int out_ch, int k, int stride,
               int pad, int pid, Rng& rng) {
  Unit u;
  u.kind = LayerKind::kConv;
  u.name = std::move(name);
  u.pid = pid;
  u.w = kaiming_uniform({out_ch, in_ch, k, k}, in_ch * k * k, rng);
  u.stride = stride;
  u.pad = pad;
  return u;
}

Unit make_bn(std::string name, int ch) {
  Unit u;
  u.kind = LayerKind::kBn;
  u.name = std::move(name);
  u.gamma = FTensor::full({ch}, 1.0f, true);
  u.beta = FTensor::zeros({ch}, true);
  u.run_mu = FTensor::zeros({ch});
  u.run_sigma = FTensor::full({ch}, 1.0f);
  return u;
}

int conv_out(int in, int k, int stride, int pad) {
  int out = (in + 2 * pad - k) / stride + 1;
  GENIE_CHECK(out >= 1, ConfigError, "conv collapses spatial size to zero");
  return out;
}

void collect_params(const Unit& u,
                    std::vector<std::pair<std::string, FTensor>>& out,
                    bool with_stats) {
  switch (u.kind) {
    case LayerKind::kConv:
      out.emplace_back(u.name + ".w", u.w);
      break;
    case LayerKind::kLinear:
      out.emplace_back(u.name + ".w", u.w);
      out.emplace_back(u.name + ".b", u.b);
      break;
    case LayerKind::kBn:
      out.emplace_back(u.name + ".gamma", u.gamma);
      out.emplace_back(u.name + ".beta", u.beta);
      if (with_stats) {
        out.emplace_back(u.name + ".mu", u.run_mu);
        out.emplace_back(u.name + ".sigma", u.run_sigma);
      }
      break;
    case LayerKind::kResidual:
      for (const auto& b : u.body) collect_params(b, out, with_stats);
      for (const auto& s : u.shortcut) collect_params(s, out, with_stats);
      break;
    default:
      break;
  }
}

}  // namespace

ModelGraph build_model(const ArchConfig& cfg, std::uint64_t seed) {
  ModelGraph m;
  m.arch = cfg;
  m.seed = seed;
  Rng rng(seed);

  int ch = cfg.in_ch, h = cfg.in_h, w = cfg.in_w;
  bool flat = false;
  int pid = 0;

  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const ArchLayer& al = cfg.layers[i];
    const std::string name = "l" + std::to_string(i);
    switch (al.kind) {
      case LayerKind::kConv: {
        GENIE_CHECK(!flat, ConfigError, "conv after flatten");
        m.units.push_back(
            make_conv(name + ".conv", ch, al.out, al.k, al.stride, al.pad,
                      pid++, rng));
        h = conv_out(h, al.k, al.stride, al.pad);
        w = conv_out(w, al.k, al.stride, al.pad);
        ch = al.out;
        break;
      }
      case LayerKind::kBn: {
        GENIE_CHECK(!flat, ConfigError, "bn after flatten");
        m.units.push_back(make_bn(name + ".bn", ch));
        ++m.bn_count;
        break;
      }
      case LayerKind::kRelu:
      case LayerKind::kLeakyRelu: {
        Unit u;
        u.kind = al.kind;
        u.name = name;
        u.slope = al.slope;
        m.units.push_back(std::move(u));
        break;
      }
      case LayerKind::kResidual: {
        GENIE_CHECK(!flat, ConfigError, "residual after flatten");
        Unit u;
        u.kind = LayerKind::kResidual;
        u.name = name;
        u.stride = al.stride;
        u.body.push_back(make_conv(name + ".conv1", ch, al.out, 3, al.stride,
                                   1, pid++, rng));
        u.body.push_back(make_bn(name + ".bn1", al.out));
        Unit act;
        act.kind = LayerKind::kRelu;
        act.name = name + ".relu1";
        u.body.push_back(std::move(act));
        u.body.push_back(make_conv(name + ".conv2", al.out, al.out, 3, 1, 1,
                                   pid++, rng));
        u.body.push_back(make_bn(name + ".bn2", al.out));
        if (al.stride != 1 || ch != al.out) {
          u.shortcut.push_back(make_conv(name + ".sc_conv", ch, al.out, 1,
                                         al.stride, 0, pid++, rng));
          u.shortcut.push_back(make_bn(name + ".sc_bn", al.out));
          ++m.bn_count;
        }
        m.bn_count += 2;
        m.units.push_back(std::move(u));
        h = conv_out(h, 3, al.stride, 1);
        w = conv_out(w, 3, al.stride, 1);
        ch = al.out;
        break;
      }
      case LayerKind::kGap: {
        GENIE_CHECK(!flat, ConfigError, "gap after flatten");
        Unit u;
        u.kind = LayerKind::kGap;
        u.name = name;
        m.units.push_back(std::move(u));
        flat = true;
        h = w = 1;
        break;
      }
      case LayerKind::kLinear: {
        int in_dim = flat ? ch : ch * h * w;
        Unit u;
        u.kind = LayerKind::kLinear;
        u.name = name + ".fc";
        u.pid = pid++;
        u.w = kaiming_uniform({al.out, in_dim}, in_dim, rng);
        u.b = uniform_init({al.out}, 1.0 / std::sqrt(double(in_dim)), rng);
        m.units.push_back(std::move(u));
        flat = true;
        ch = al.out;
        break;
      }
    }
  }
  m.pid_count = pid;

  // Block partition: each conv, residual or gap opens a block; bn and
  // activations join the open block; a linear joins a gap-led block (the
  // pool+classifier tail) and opens one otherwise.
  int begin = -1;
  LayerKind begin_kind = LayerKind::kRelu;
  for (int i = 0; i < static_cast<int>(m.units.size()); ++i) {
    LayerKind k = m.units[i].kind;
    bool opens = k == LayerKind::kConv || k == LayerKind::kResidual ||
                 k == LayerKind::kGap || begin < 0;
    if (k == LayerKind::kLinear)
      opens = begin < 0 || begin_kind != LayerKind::kGap;
    if (opens) {
      if (begin >= 0) m.blocks.emplace_back(begin, i);
      begin = i;
      begin_kind = k;
    }
  }
  if (begin >= 0) m.blocks.emplace_back(begin, static_cast<int>(m.units.size()));
  return m;
}

namespace {

FTensor apply_unit(const Unit& u, const FTensor& x, const ForwardOpts& o,
                   TapRecord* taps) {
  switch (u.kind) {
    case LayerKind::kConv: {
      if (o.swing_rng && u.stride > 1) {
        auto off = distill::sample_swing_offset(*o.swing_rng, u.stride);
        return distill::swing_conv2d<float>(x, u.w, nullptr, u.stride, u.pad,
                                            off);
      }
      return tns::conv2d(x, u.w, u.stride, u.pad);
    }
    case LayerKind::kBn: {
      if (o.bn_mode == BnMode::kBatchStats) {
        auto bo = tns::batchnorm_train(x, u.gamma, u.beta, kBnEps);
        if (o.update_running) {
          FTensor rm = u.run_mu, rs = u.run_sigma;
          const float m = o.bn_momentum;
          const auto& bm = bo.mu.data();
          const auto& bs = bo.sigma.data();
          for (std::size_t c = 0; c < rm.size(); ++c) {
            rm.data()[c] = (1.0f - m) * rm.data()[c] + m * bm[c];
            rs.data()[c] = (1.0f - m) * rs.data()[c] + m * bs[c];
          }
        }
        if (taps && o.tap_bn) {
          taps->bn_mu.push_back(bo.mu);
          taps->bn_sigma.push_back(bo.sigma);
        }
        return bo.y;
      }
      if (taps && o.tap_bn) {
        taps->bn_mu.push_back(u.run_mu);
        taps->bn_sigma.push_back(u.run_sigma);
      }
      return tns::batchnorm_eval(x, u.gamma, u.beta, u.run_mu, u.run_sigma);
    }
    case LayerKind::kRelu:
      return tns::relu(x);
    case LayerKind::kLeakyRelu:
      return tns::leaky_relu(x, u.slope);
    case LayerKind::kResidual: {
      FTensor branch = x;
      for (const auto& b : u.body) branch = apply_unit(b, branch, o, taps);
      FTensor sc = x;
      for (const auto& s : u.shortcut) sc = apply_unit(s, sc, o, taps);
      return tns::relu(tns::add(branch, sc));
    }
    case LayerKind::kGap:
      return tns::global_avg_pool(x);
    case LayerKind::kLinear: {
      FTensor in = x;
      if (x.shape().size() == 4)
        in = tns::reshape(x, {x.dim(0), static_cast<int>(x.size()) / x.dim(0)});
      return tns::linear(in, u.w, u.b);
    }
  }
  throw Error("unreachable layer kind");
}

}  // namespace

FTensor ModelGraph::forward_units(int begin, int end, const FTensor& x,
                                  const ForwardOpts& opts,
                                  TapRecord* taps) const {
  FTensor cur = x;
  for (int i = begin; i < end; ++i) cur = apply_unit(units[i], cur, opts, taps);
  return cur;
}

FTensor ModelGraph::forward_block(int block, const FTensor& x,
                                  const ForwardOpts& opts,
                                  TapRecord* taps) const {
  GENIE_CHECK(block >= 0 && block < static_cast<int>(blocks.size()),
              ConfigError, "block index out of range");
  FTensor out =
      forward_units(blocks[block].first, blocks[block].second, x, opts, taps);
  if (taps && opts.tap_blocks) taps->block_out.push_back(out);
  return out;
}

FTensor ModelGraph::forward(const FTensor& x, const ForwardOpts& opts,
                            TapRecord* taps) const {
  GENIE_CHECK(x.defined() && x.shape().size() == 4, ShapeError,
              "model forward expects NCHW input");
  GENIE_CHECK(x.dim(1) == arch.in_ch && x.dim(2) == arch.in_h &&
                  x.dim(3) == arch.in_w,
              ShapeError, "input does not match arch input size");
  GENIE_CHECK(!opts.tap_bn || bn_count > 0, ConfigError,
              "bn stat taps requested on a model without bn");
  FTensor cur = x;
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
    cur = forward_block(b, cur, opts, taps);
  return cur;
}

std::vector<std::pair<std::string, FTensor>> ModelGraph::named_params() const {
  std::vector<std::pair<std::string, FTensor>> out;
  for (const auto& u : units) collect_params(u, out, false);
  return out;
}

std::vector<FTensor> ModelGraph::params() const {
  std::vector<FTensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, FTensor>> ModelGraph::named_state() const {
  std::vector<std::pair<std::string, FTensor>> out;
  for (const auto& u : units) collect_params(u, out, true);
  return out;
}

namespace {

void collect_bn_running(const Unit& u,
                        std::vector<std::pair<FTensor, FTensor>>& out) {
  if (u.kind == LayerKind::kBn) out.emplace_back(u.run_mu, u.run_sigma);
  for (const auto& b : u.body) collect_bn_running(b, out);
  for (const auto& s : u.shortcut) collect_bn_running(s, out);
}

}  // namespace

std::vector<std::pair<FTensor, FTensor>> ModelGraph::bn_running() const {
  std::vector<std::pair<FTensor, FTensor>> out;
  for (const auto& u : units) collect_bn_running(u, out);
  return out;
}

void ModelGraph::set_requires_grad(bool on) {
  // skip redundant writes: concurrent forwards over an already-frozen model
  // may call this again, and reads must stay race-free
  for (auto& p : params())
    if (p.node()->requires_grad != on) p.node()->requires_grad = on;
}

std::uint64_t model_hash(const ModelGraph& m) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, t] : m.named_state()) {
    h = fnv1a(name.data(), name.size(), h);
    h = fnv1a(t.data().data(), t.size() * sizeof(float), h);
  }
  return h;
}

}  // namespace genie::nn

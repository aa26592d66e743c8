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

#include "genie/quant/qmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "genie/io/checkpoint.hpp"
#include "genie/tensor/nnops.hpp"
#include "genie/tensor/optim.hpp"
#include "json.hpp"

namespace genie::quant {

namespace {

constexpr std::uint64_t kReconForkBase = 64;  // per-block rng purpose
constexpr int kEvalChunk = 128;

using nn::LayerKind;
using nn::Unit;

int count_quant_layers(const Unit& u) {
  switch (u.kind) {
    case LayerKind::kConv:
    case LayerKind::kLinear:
      return 1;
    case LayerKind::kResidual: {
      int n = 0;
      for (const auto& b : u.body) n += count_quant_layers(b);
      for (const auto& s : u.shortcut) n += count_quant_layers(s);
      return n;
    }
    default:
      return 0;
  }
}

void append_layers(const Unit& u, std::vector<QLayer>& out) {
  switch (u.kind) {
    case LayerKind::kConv: {
      QLayer l;
      l.name = u.name;
      l.w = u.w;
      l.stride = u.stride;
      l.pad = u.pad;
      out.push_back(std::move(l));
      break;
    }
    case LayerKind::kLinear: {
      QLayer l;
      l.name = u.name;
      l.is_linear = true;
      l.w = u.w;
      l.bias = u.b;
      out.push_back(std::move(l));
      break;
    }
    case LayerKind::kResidual:
      for (const auto& b : u.body) append_layers(b, out);
      for (const auto& s : u.shortcut) append_layers(s, out);
      break;
    default:
      break;
  }
}

// forward context; cursor tracks the next quantizable layer in execution
// order, drop applies only inside the block being reconstructed
struct Ctx {
  int cursor = 0;
  int cur_block = -1;
  int drop_block = -1;
  float drop_prob = 0.0f;
  Rng* rng = nullptr;
  bool init_act = false;  // create missing activation steps from inputs
  bool hard = false;      // measure with lattice-snapshot weights
};

// integer lattice snapshot of a soft quantizer, replicating the forward's
// f32 arithmetic so a saturated soft forward lands on the same values;
// shared by harden() and the hard measurement path
std::vector<float> hard_round_values(const QLayer& l, std::vector<int>* q_out) {
  auto u = tns::div_ch(l.w.detach(), l.s_w.detach(), 0);
  auto h = rectified_sigmoid(l.v.detach());
  const int qp = weight_qmax(l.bits_w);
  const std::size_t step = l.w.size() / l.w.dim(0);
  std::vector<float> hard(l.w.size());
  if (q_out) q_out->resize(l.w.size());
  for (std::size_t i = 0; i < l.w.size(); ++i) {
    const std::size_t c = i / step;
    const int bit = h.data()[i] >= 0.5f ? 1 : 0;
    int q = static_cast<int>(std::floor(u.data()[i])) + bit + l.z[c];
    q = std::min(std::max(q, 0), qp);
    if (q_out) (*q_out)[i] = q;
    hard[i] = l.s_w.data()[c] * static_cast<float>(q - l.z[c]);
  }
  return hard;
}

FTensor weight_expr(const QuantizedModel& qm, const QLayer& l, const Ctx& c) {
  if (qm.hardened) return l.w_hard;
  if (c.hard) return FTensor::from(l.w.shape(), hard_round_values(l, nullptr));
  return soft_quant_weights(l.w, l.s_w, l.zf, l.v, 0, weight_qmax(l.bits_w));
}

FTensor quant_input(QLayer& l, const FTensor& x, Ctx& c) {
  if (!l.act_enabled) return x;
  if (!l.s_a.defined()) {
    GENIE_CHECK(c.init_act, ConfigError,
                "activation step for " + l.name +
                    " used before its block was reconstructed");
    auto st = init_act_step(x.data().data(), x.size(), l.bits_a);
    l.s_a = FTensor::from({1}, {st.s}, true);
    l.a_fallback = st.fallback;
  }
  const float prob = c.cur_block == c.drop_block ? c.drop_prob : 0.0f;
  return tns::lsq_act_quant(x, l.s_a, act_qmin(l.bits_a), act_qmax(l.bits_a),
                            prob, prob > 0.0f ? c.rng : nullptr);
}

FTensor apply_unit_q(QuantizedModel& qm, const Unit& u, const FTensor& x,
                     Ctx& c) {
  switch (u.kind) {
    case LayerKind::kConv: {
      QLayer& l = qm.layers[c.cursor++];
      auto in = quant_input(l, x, c);
      return tns::conv2d(in, weight_expr(qm, l, c), u.stride, u.pad);
    }
    case LayerKind::kBn:
      return tns::batchnorm_eval(x, u.gamma, u.beta, u.run_mu, u.run_sigma);
    case LayerKind::kRelu:
      return tns::relu(x);
    case LayerKind::kLeakyRelu:
      return tns::leaky_relu(x, u.slope);
    case LayerKind::kResidual: {
      FTensor branch = x;
      for (const auto& b : u.body) branch = apply_unit_q(qm, b, branch, c);
      FTensor sc = x;
      for (const auto& s : u.shortcut) sc = apply_unit_q(qm, s, sc, c);
      return tns::relu(tns::add(branch, sc));
    }
    case LayerKind::kGap:
      return tns::global_avg_pool(x);
    case LayerKind::kLinear: {
      QLayer& l = qm.layers[c.cursor++];
      FTensor in = quant_input(l, x, c);
      if (in.shape().size() == 4)
        in = tns::reshape(
            in, {in.dim(0), static_cast<int>(in.size()) / in.dim(0)});
      return tns::linear(in, weight_expr(qm, l, c), l.bias);
    }
  }
  throw Error("unreachable layer kind");
}

FTensor run_block(QuantizedModel& qm, int block, const FTensor& x, Ctx& c) {
  c.cur_block = block;
  c.cursor = qm.block_first_layer[block];
  const auto [begin, end] = qm.model.blocks[block];
  FTensor cur = x;
  for (int i = begin; i < end; ++i)
    cur = apply_unit_q(qm, qm.model.units[i], cur, c);
  if (qm.cfg.quantize_block_output && block + 1 < qm.num_blocks()) {
    FTensor& step = qm.block_out_step[block];
    if (!step.defined()) {
      GENIE_CHECK(c.init_act, ConfigError,
                  "block output step used before reconstruction");
      auto st = init_act_step(cur.data().data(), cur.size(), qm.cfg.bits_a);
      step = FTensor::from({1}, {st.s}, true);
    }
    const float prob = c.cur_block == c.drop_block ? c.drop_prob : 0.0f;
    cur = tns::lsq_act_quant(cur, step, act_qmin(qm.cfg.bits_a),
                             act_qmax(qm.cfg.bits_a), prob,
                             prob > 0.0f ? c.rng : nullptr);
  }
  return cur;
}

// rows of t are independent samples; gathers a batch by row index
FTensor gather_rows(const FTensor& t, const int* idx, int n) {
  const int rows = t.dim(0);
  const std::size_t stride = t.size() / rows;
  tns::Shape shape = t.shape();
  shape[0] = n;
  std::vector<float> out(stride * n);
  for (int i = 0; i < n; ++i) {
    GENIE_CHECK(idx[i] >= 0 && idx[i] < rows, ShapeError,
                "gather_rows: index out of range");
    std::memcpy(out.data() + std::size_t(i) * stride,
                t.data().data() + std::size_t(idx[i]) * stride,
                stride * sizeof(float));
  }
  return FTensor::from(std::move(shape), std::move(out));
}

// applies fn to row chunks and stacks the detached outputs
template <typename Fn>
FTensor map_rows(const FTensor& src, Fn&& fn) {
  const int n = src.dim(0);
  FTensor out;
  std::size_t stride = 0;
  std::vector<int> idx(kEvalChunk);
  for (int at = 0; at < n; at += kEvalChunk) {
    const int take = std::min(kEvalChunk, n - at);
    std::iota(idx.begin(), idx.begin() + take, at);
    FTensor part = fn(gather_rows(src, idx.data(), take)).detach();
    if (!out.defined()) {
      tns::Shape shape = part.shape();
      shape[0] = n;
      stride = part.size() / take;
      out = FTensor::zeros(std::move(shape));
    }
    std::memcpy(out.data().data() + std::size_t(at) * stride,
                part.data().data(), part.size() * sizeof(float));
  }
  return out;
}

// mean squared error per output element, in double; weights sit at their
// lattice snapshot, so this scores the quantizer that would ship if the
// model were hardened right now, not the soft relaxation
double recon_mse(QuantizedModel& qm, int block, const FTensor& in,
                 const FTensor& target) {
  double total = 0.0;
  std::vector<int> idx(kEvalChunk);
  const std::size_t stride = target.size() / target.dim(0);
  for (int at = 0; at < in.dim(0); at += kEvalChunk) {
    const int take = std::min(kEvalChunk, in.dim(0) - at);
    std::iota(idx.begin(), idx.begin() + take, at);
    Ctx c;
    c.hard = true;
    auto got = run_block(qm, block, gather_rows(in, idx.data(), take), c);
    const float* g = got.data().data();
    const float* t = target.data().data() + std::size_t(at) * stride;
    for (std::size_t i = 0; i < got.size(); ++i) {
      const double d = double(g[i]) - double(t[i]);
      total += d * d;
    }
  }
  return total / target.size();
}

// layer table, block mapping and bit policy; no quantizer parameters yet
QuantizedModel build_table(const nn::ModelGraph& teacher,
                           const ReconConfig& cfg) {
  GENIE_CHECK(cfg.bits_w >= 2 && cfg.bits_a >= 2, ConfigError,
              "make_quantized: bit widths must be >= 2");
  GENIE_CHECK(cfg.batch >= 1 && cfg.steps >= 0, ConfigError,
              "make_quantized: bad step or batch count");
  GENIE_CHECK(cfg.lambda >= 0.0f, ConfigError,
              "make_quantized: negative regularizer weight");
  GENIE_CHECK(cfg.qdrop_prob >= 0.0f && cfg.qdrop_prob <= 1.0f, ConfigError,
              "make_quantized: drop probability outside [0,1]");

  QuantizedModel qm;
  qm.model = teacher;
  qm.cfg = cfg;
  qm.model.set_requires_grad(false);

  qm.block_first_layer.reserve(qm.model.blocks.size() + 1);
  int cursor = 0;
  for (const auto& [begin, end] : qm.model.blocks) {
    qm.block_first_layer.push_back(cursor);
    for (int i = begin; i < end; ++i)
      cursor += count_quant_layers(qm.model.units[i]);
  }
  qm.block_first_layer.push_back(cursor);
  for (const auto& u : qm.model.units) append_layers(u, qm.layers);
  GENIE_CHECK(static_cast<int>(qm.layers.size()) == cursor, ConfigError,
              "make_quantized: block partition does not cover all layers");
  GENIE_CHECK(!qm.layers.empty(), ConfigError,
              "make_quantized: model has no quantizable layers");
  qm.block_out_step.resize(qm.model.blocks.size());

  for (std::size_t i = 0; i < qm.layers.size(); ++i) {
    QLayer& l = qm.layers[i];
    const bool edge = i == 0 || i + 1 == qm.layers.size();
    l.bits_w = edge && cfg.first_last_8bit ? 8 : cfg.bits_w;
    l.bits_a =
        i + 1 == qm.layers.size() && cfg.first_last_8bit ? 8 : cfg.bits_a;
    l.act_enabled = i > 0;  // raw model input stays full precision
  }
  return qm;
}

}  // namespace

QuantizedModel make_quantized(const nn::ModelGraph& teacher,
                              const ReconConfig& cfg) {
  QuantizedModel qm = build_table(teacher, cfg);
  for (std::size_t i = 0; i < qm.layers.size(); ++i) {
    QLayer& l = qm.layers[i];
    auto st = init_step_pnorm(l.w, l.bits_w, cfg.p_ord);
    l.z = st.z;
    l.w_fallback = st.fallback;
    std::vector<float> zf(st.z.size());
    for (std::size_t c = 0; c < zf.size(); ++c)
      zf[c] = static_cast<float>(st.z[c]);
    const int ch = static_cast<int>(st.s.size());
    l.s_w = FTensor::from({ch}, std::move(st.s), /*requires_grad=*/true);
    l.zf = FTensor::from({ch}, std::move(zf));
    l.v = init_soft_bits(l.w, {std::vector<float>(l.s_w.data()), l.z, false});
  }
  return qm;
}

BlockReport reconstruct_block(const nn::ModelGraph& teacher, QuantizedModel& qm,
                              int block, const FTensor& calib) {
  GENIE_CHECK(block >= 0 && block < qm.num_blocks(), ConfigError,
              "reconstruct_block: block index out of range");
  GENIE_CHECK(block == qm.next_block, ConfigError,
              "reconstruct_block: blocks must run in order");
  GENIE_CHECK(!qm.hardened, ConfigError,
              "reconstruct_block: model already hardened");
  GENIE_CHECK(calib.defined() && calib.shape().size() == 4, ShapeError,
              "reconstruct_block: calibration set must be NCHW");
  const ReconConfig& cfg = qm.cfg;
  const int n = calib.dim(0);
  GENIE_CHECK(n >= cfg.batch, ConfigError,
              "reconstruct_block: calibration set smaller than a batch");

  // student sees the quantized prefix, targets come from the fp teacher
  nn::ForwardOpts ev;
  FTensor student_in =
      block == 0 ? calib : map_rows(calib, [&](const FTensor& x) {
        Ctx c;
        FTensor cur = x;
        for (int b = 0; b < block; ++b) cur = run_block(qm, b, cur, c);
        return cur;
      });
  FTensor target = map_rows(calib, [&](const FTensor& x) {
    return teacher.forward_units(0, qm.model.blocks[block].second, x, ev,
                                 nullptr);
  });

  // activation steps initialize from the literal first batch of block inputs
  {
    std::vector<int> head(cfg.batch);
    std::iota(head.begin(), head.end(), 0);
    Ctx c;
    c.init_act = true;
    run_block(qm, block, gather_rows(student_in, head.data(), cfg.batch), c);
  }

  std::vector<FTensor> vs, ss, as;
  for (int i = qm.block_first_layer[block]; i < qm.block_first_layer[block + 1];
       ++i) {
    vs.push_back(qm.layers[i].v);
    ss.push_back(qm.layers[i].s_w);
    if (qm.layers[i].s_a.defined()) as.push_back(qm.layers[i].s_a);
  }
  if (qm.block_out_step[block].defined())
    as.push_back(qm.block_out_step[block]);

  BlockReport rep;
  rep.block = block;
  rep.initial_mse = recon_mse(qm, block, student_in, target);

  // Blocks that already round near-exactly produce gradients at the noise
  // floor; a raised Adam epsilon keeps those from being normalized into
  // full-size steps that flip boundary bits during warmup.
  tns::Adam<float> opt({{ss, cfg.lr_s}, {vs, cfg.lr_v}, {as, cfg.lr_a}},
                       0.9f, 0.999f, 1e-6f);
  tns::CosineSched<float> cos_s{cfg.lr_s, std::max(1, cfg.steps)};
  tns::CosineSched<float> cos_a{cfg.lr_a, std::max(1, cfg.steps)};
  Rng rng = Rng(cfg.seed).fork(kReconForkBase + std::uint64_t(block));

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rep.trace.reserve(cfg.steps);
  for (int t = 0; t < cfg.steps; ++t) {
    for (int i = 0; i < cfg.batch; ++i) {
      const int j = i + static_cast<int>(rng.next_below(std::uint32_t(n - i)));
      std::swap(perm[i], perm[j]);
    }
    auto xs = gather_rows(student_in, perm.data(), cfg.batch);
    auto ys = gather_rows(target, perm.data(), cfg.batch);

    Ctx c;
    c.drop_block = block;
    c.drop_prob = cfg.qdrop_prob;
    c.rng = &rng;
    auto out = run_block(qm, block, xs, c);
    auto diff = tns::sub(out, ys);
    // per-element mean keeps the regularizer dominant late in the schedule
    // regardless of block output size, so every soft bit saturates
    auto loss = tns::mul_s(tns::sum_all(tns::mul(diff, diff)),
                           1.0f / static_cast<float>(ys.size()));
    const auto sched = beta_at(t, cfg.steps, cfg.beta);
    if (sched.lambda_active && cfg.lambda > 0.0f) {
      FTensor reg;
      for (const auto& v : vs) {
        auto r = rounding_reg(v, sched.beta);
        reg = reg.defined() ? tns::add(reg, r) : r;
      }
      loss = tns::add(loss, tns::mul_s(reg, cfg.lambda));
    }
    const float lv = loss.item();
    GENIE_CHECK(std::isfinite(lv), NumericError,
                "block " + std::to_string(block) +
                    " reconstruction diverged at step " + std::to_string(t));
    opt.zero_grad();
    tns::backward(loss);
    opt.set_lr(0, cfg.learn_step ? cos_s.at(t) : 0.0f);
    opt.set_lr(2, cos_a.at(t));
    opt.step();
    rep.trace.push_back(lv);
  }

  rep.final_mse = recon_mse(qm, block, student_in, target);

  // later blocks read this one as a fixed prefix
  for (auto& p : ss) p.node()->requires_grad = false;
  for (auto& p : vs) p.node()->requires_grad = false;
  for (auto& p : as) p.node()->requires_grad = false;
  ++qm.next_block;
  return rep;
}

QuantResult quantize_model(const nn::ModelGraph& teacher, const FTensor& calib,
                           const ReconConfig& cfg) {
  QuantResult res{make_quantized(teacher, cfg), {}};
  res.blocks.reserve(res.qm.num_blocks());
  for (int b = 0; b < res.qm.num_blocks(); ++b)
    res.blocks.push_back(reconstruct_block(teacher, res.qm, b, calib));
  return res;
}

FTensor qforward(const QuantizedModel& qm, const FTensor& x) {
  return qforward_prefix(qm, x, qm.num_blocks());
}

FTensor qforward_prefix(const QuantizedModel& qm, const FTensor& x,
                        int blocks) {
  GENIE_CHECK(x.defined() && x.shape().size() == 4, ShapeError,
              "qforward expects NCHW input");
  GENIE_CHECK(blocks >= 0 && blocks <= qm.num_blocks(), ConfigError,
              "qforward_prefix: block count out of range");
  auto& m = const_cast<QuantizedModel&>(qm);  // ctx never mutates here
  Ctx c;
  FTensor cur = x;
  for (int b = 0; b < blocks; ++b) cur = run_block(m, b, cur, c);
  return cur;
}

float evaluate_quantized(const QuantizedModel& qm, const nn::LabeledImages& d,
                         int batch) {
  GENIE_CHECK(batch >= 1, ConfigError, "evaluate_quantized: bad batch size");
  const int n = d.count();
  int hits = 0;
  std::vector<int> idx(batch);
  for (int at = 0; at < n; at += batch) {
    const int take = std::min(batch, n - at);
    std::iota(idx.begin(), idx.begin() + take, at);
    auto logits =
        qforward(qm, nn::gather_images(d, idx.data(), take)).detach();
    const int classes = logits.dim(1);
    for (int i = 0; i < take; ++i) {
      const float* row = logits.data().data() + std::size_t(i) * classes;
      const int pred =
          static_cast<int>(std::max_element(row, row + classes) - row);
      hits += pred == d.labels[at + i] ? 1 : 0;
    }
  }
  return static_cast<float>(hits) / static_cast<float>(n);
}

double binarization_fraction(const QuantizedModel& qm, double tol) {
  std::size_t total = 0, hard = 0;
  for (const auto& l : qm.layers) {
    auto h = rectified_sigmoid(l.v.detach());
    for (float v : h.data())
      hard += (v <= tol || v >= 1.0 - tol) ? 1 : 0;
    total += h.size();
  }
  return total == 0 ? 1.0 : static_cast<double>(hard) / total;
}

void harden(QuantizedModel& qm) {
  if (qm.hardened) return;
  for (auto& l : qm.layers) {
    l.w_hard = FTensor::from(l.w.shape(), hard_round_values(l, &l.w_int));
  }
  qm.hardened = true;
}

void save_quantized(const QuantizedModel& qm, const std::string& path) {
  GENIE_CHECK(qm.hardened, ConfigError,
              "save_quantized: harden the model first");
  using nlohmann::json;
  std::vector<io::TensorEntry> entries;
  for (const auto& [name, t] : qm.model.named_state())
    entries.push_back({"m/" + name, t});

  json layers = json::array();
  for (std::size_t i = 0; i < qm.layers.size(); ++i) {
    const QLayer& l = qm.layers[i];
    const std::string prefix = "q" + std::to_string(i);
    std::vector<float> wint(l.w_int.begin(), l.w_int.end());
    entries.push_back(
        {prefix + "/wint", FTensor::from(l.w.shape(), std::move(wint))});
    entries.push_back({prefix + "/sw", l.s_w.detach()});
    entries.push_back({prefix + "/zf", l.zf});
    entries.push_back({prefix + "/v", l.v.detach()});
    if (l.s_a.defined()) entries.push_back({prefix + "/sa", l.s_a.detach()});
    layers.push_back({{"name", l.name},
                      {"bits_w", l.bits_w},
                      {"bits_a", l.bits_a},
                      {"act_enabled", l.act_enabled},
                      {"w_fallback", l.w_fallback},
                      {"a_fallback", l.a_fallback}});
  }
  for (std::size_t j = 0; j < qm.block_out_step.size(); ++j)
    if (qm.block_out_step[j].defined())
      entries.push_back(
          {"bo/" + std::to_string(j), qm.block_out_step[j].detach()});

  const ReconConfig& c = qm.cfg;
  json meta;
  meta["kind"] = "quantized_model";
  meta["arch_json"] = qm.model.arch.source_json;
  meta["seed"] = qm.model.seed;
  meta["cfg"] = {{"bits_w", c.bits_w},
                 {"bits_a", c.bits_a},
                 {"steps", c.steps},
                 {"batch", c.batch},
                 {"lambda", c.lambda},
                 {"beta_start", c.beta.beta_start},
                 {"beta_end", c.beta.beta_end},
                 {"warmup_frac", c.beta.warmup_frac},
                 {"lr_s", c.lr_s},
                 {"lr_v", c.lr_v},
                 {"lr_a", c.lr_a},
                 {"qdrop_prob", c.qdrop_prob},
                 {"first_last_8bit", c.first_last_8bit},
                 {"learn_step", c.learn_step},
                 {"p_ord", c.p_ord},
                 {"quantize_block_output", c.quantize_block_output},
                 {"seed", c.seed}};
  meta["layers"] = std::move(layers);
  io::save_tensors(path, entries, meta.dump());
}

QuantizedModel load_quantized(const std::string& path) {
  using nlohmann::json;
  io::CheckpointData data = io::load_tensors(path);
  json meta;
  try {
    meta = json::parse(data.meta_json);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint metadata: ") + e.what());
  }
  GENIE_CHECK(meta.value("kind", "") == "quantized_model", IoError,
              "checkpoint does not hold a quantized model");

  auto req = [&](const std::string& name) -> const FTensor& {
    const FTensor* t = data.find(name);
    GENIE_CHECK(t != nullptr, IoError, "checkpoint missing \"" + name + "\"");
    return *t;
  };

  auto arch = nn::parse_arch(meta.at("arch_json").get<std::string>());
  auto model = nn::build_model(arch, meta.value("seed", 0ull));
  for (auto& [name, t] : model.named_state()) {
    const FTensor& src = req("m/" + name);
    GENIE_CHECK(src.shape() == t.shape(), IoError,
                "checkpoint shape mismatch for \"" + name + "\"");
    t.data() = src.data();
  }

  ReconConfig cfg;
  const json& jc = meta.at("cfg");
  cfg.bits_w = jc.at("bits_w").get<int>();
  cfg.bits_a = jc.at("bits_a").get<int>();
  cfg.steps = jc.at("steps").get<int>();
  cfg.batch = jc.at("batch").get<int>();
  cfg.lambda = jc.at("lambda").get<float>();
  cfg.beta.beta_start = jc.at("beta_start").get<float>();
  cfg.beta.beta_end = jc.at("beta_end").get<float>();
  cfg.beta.warmup_frac = jc.at("warmup_frac").get<float>();
  cfg.lr_s = jc.at("lr_s").get<float>();
  cfg.lr_v = jc.at("lr_v").get<float>();
  cfg.lr_a = jc.at("lr_a").get<float>();
  cfg.qdrop_prob = jc.at("qdrop_prob").get<float>();
  cfg.first_last_8bit = jc.at("first_last_8bit").get<bool>();
  cfg.learn_step = jc.at("learn_step").get<bool>();
  cfg.p_ord = jc.at("p_ord").get<double>();
  cfg.quantize_block_output = jc.at("quantize_block_output").get<bool>();
  cfg.seed = jc.at("seed").get<std::uint64_t>();

  QuantizedModel qm = build_table(model, cfg);
  const json& jl = meta.at("layers");
  GENIE_CHECK(jl.size() == qm.layers.size(), IoError,
              "checkpoint layer count does not match arch");
  for (std::size_t i = 0; i < qm.layers.size(); ++i) {
    QLayer& l = qm.layers[i];
    const json& e = jl[i];
    GENIE_CHECK(e.at("name").get<std::string>() == l.name, IoError,
                "checkpoint layer order does not match arch");
    l.bits_w = e.at("bits_w").get<int>();
    l.bits_a = e.at("bits_a").get<int>();
    l.act_enabled = e.at("act_enabled").get<bool>();
    l.w_fallback = e.at("w_fallback").get<bool>();
    l.a_fallback = e.at("a_fallback").get<bool>();

    const std::string prefix = "q" + std::to_string(i);
    const FTensor& sw = req(prefix + "/sw");
    const FTensor& zf = req(prefix + "/zf");
    const FTensor& v = req(prefix + "/v");
    const FTensor& wint = req(prefix + "/wint");
    const int ch = l.w.dim(0);
    GENIE_CHECK(sw.size() == std::size_t(ch) && zf.size() == std::size_t(ch),
                IoError, "checkpoint step shape mismatch for " + l.name);
    GENIE_CHECK(v.shape() == l.w.shape() && wint.shape() == l.w.shape(),
                IoError, "checkpoint weight shape mismatch for " + l.name);
    l.s_w = sw;
    l.zf = zf;
    l.v = v;
    l.z.resize(zf.size());
    for (std::size_t c = 0; c < zf.size(); ++c)
      l.z[c] = static_cast<int>(std::lround(zf.data()[c]));

    const int qp = weight_qmax(l.bits_w);
    const std::size_t step = l.w.size() / l.w.dim(0);
    l.w_int.resize(wint.size());
    std::vector<float> hard(wint.size());
    for (std::size_t k = 0; k < wint.size(); ++k) {
      const float f = wint.data()[k];
      const int q = static_cast<int>(std::lround(f));
      GENIE_CHECK(f == static_cast<float>(q) && q >= 0 && q <= qp, IoError,
                  "checkpoint holds non-integral or out-of-range weights for " +
                      l.name);
      l.w_int[k] = q;
      const std::size_t c = k / step;
      hard[k] = l.s_w.data()[c] * static_cast<float>(q - l.z[c]);
    }
    l.w_hard = FTensor::from(l.w.shape(), std::move(hard));
    if (l.act_enabled) {
      const FTensor& sa = req(prefix + "/sa");
      GENIE_CHECK(sa.size() == 1, IoError,
                  "checkpoint activation step shape mismatch for " + l.name);
      l.s_a = sa;
    }
  }
  for (std::size_t j = 0; j < qm.block_out_step.size(); ++j)
    if (const FTensor* t = data.find("bo/" + std::to_string(j)))
      qm.block_out_step[j] = *t;

  qm.next_block = qm.num_blocks();
  qm.hardened = true;
  return qm;
}

}  // namespace genie::quant

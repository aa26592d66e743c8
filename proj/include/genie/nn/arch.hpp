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

#ifndef GENIE_NN_ARCH_HPP_
#define GENIE_NN_ARCH_HPP_

// Declarative model descriptions. An architecture is a JSON document; two
// presets ship embedded (plain-cnn-6 and resnet-tiny) and arbitrary configs
// can be loaded from files with the same schema:
//
//   {"name": "...", "input": [C,H,W], "num_classes": K,
//    "layers": [
//      {"kind":"conv","out":16,"k":3,"stride":1,"pad":1},
//      {"kind":"bn"}, {"kind":"relu"},
//      {"kind":"residual","out":32,"stride":2},
//      {"kind":"gap"},
//      {"kind":"linear"}]}
//
// A "residual" entry expands to conv-bn-relu-conv-bn plus an identity or
// 1x1 stride-s projection shortcut and a trailing relu. Every explicit conv
// in a classifier must be followed by bn so batch statistics exist at each
// conv site.

#include <string>
#include <vector>

#include "genie/common.hpp"

namespace genie::nn {

enum class LayerKind {
  kConv,
  kBn,
  kRelu,
  kLeakyRelu,
  kResidual,
  kGap,
  kLinear,
};

struct ArchLayer {
  LayerKind kind;
  int out = 0;
  int k = 0;
  int stride = 1;
  int pad = 0;
  float slope = 0.0f;
};

struct ArchConfig {
  std::string name;
  int in_ch = 3, in_h = 32, in_w = 32;
  int num_classes = 10;
  std::vector<ArchLayer> layers;

  // raw JSON text the config was parsed from, kept for checkpoint metadata
  std::string source_json;
};

ArchConfig parse_arch(const std::string& json_text);
ArchConfig load_arch_file(const std::string& path);

// embedded presets: "plain-cnn-6", "resnet-tiny"
const std::vector<std::string>& arch_preset_names();
ArchConfig arch_preset(const std::string& name);

}  // namespace genie::nn

#endif  // GENIE_NN_ARCH_HPP_

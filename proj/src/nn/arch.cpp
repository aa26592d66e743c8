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

#include "genie/nn/arch.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace genie::nn {
namespace {

using json = nlohmann::json;

const std::map<std::string, LayerKind>& kind_names() {
  static const std::map<std::string, LayerKind> m = {
      {"conv", LayerKind::kConv},       {"bn", LayerKind::kBn},
      {"relu", LayerKind::kRelu},       {"leaky_relu", LayerKind::kLeakyRelu},
      {"residual", LayerKind::kResidual}, {"gap", LayerKind::kGap},
      {"linear", LayerKind::kLinear},
  };
  return m;
}

constexpr const char* kPlainCnn6 = R"JSON({
  "name": "plain-cnn-6",
  "input": [3, 32, 32],
  "num_classes": 10,
  "layers": [
    {"kind": "conv", "out": 4, "k": 3, "stride": 1, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "conv", "out": 4, "k": 3, "stride": 2, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "conv", "out": 8, "k": 3, "stride": 1, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "conv", "out": 8, "k": 3, "stride": 2, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "conv", "out": 16, "k": 3, "stride": 1, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "conv", "out": 16, "k": 3, "stride": 2, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "gap"},
    {"kind": "linear"}
  ]
})JSON";

constexpr const char* kResnetTiny = R"JSON({
  "name": "resnet-tiny",
  "input": [3, 32, 32],
  "num_classes": 10,
  "layers": [
    {"kind": "conv", "out": 16, "k": 3, "stride": 1, "pad": 1},
    {"kind": "bn"}, {"kind": "relu"},
    {"kind": "residual", "out": 32, "stride": 2},
    {"kind": "residual", "out": 32, "stride": 1},
    {"kind": "residual", "out": 64, "stride": 2},
    {"kind": "residual", "out": 64, "stride": 1},
    {"kind": "gap"},
    {"kind": "linear"}
  ]
})JSON";

int get_int(const json& j, const char* key, int fallback, bool required) {
  if (!j.contains(key)) {
    GENIE_CHECK(!required, ConfigError,
                std::string("arch layer missing \"") + key + "\"");
    return fallback;
  }
  GENIE_CHECK(j[key].is_number_integer(), ConfigError,
              std::string("arch field \"") + key + "\" must be an integer");
  return j[key].get<int>();
}

}  // namespace

ArchConfig parse_arch(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("arch json: ") + e.what());
  }
  GENIE_CHECK(j.is_object(), ConfigError, "arch json: expected an object");

  ArchConfig cfg;
  cfg.source_json = json_text;
  cfg.name = j.value("name", std::string("unnamed"));
  if (j.contains("input")) {
    GENIE_CHECK(j["input"].is_array() && j["input"].size() == 3, ConfigError,
                "arch \"input\" must be [C,H,W]");
    cfg.in_ch = j["input"][0].get<int>();
    cfg.in_h = j["input"][1].get<int>();
    cfg.in_w = j["input"][2].get<int>();
  }
  cfg.num_classes = j.value("num_classes", 10);
  GENIE_CHECK(cfg.in_ch >= 1 && cfg.in_h >= 1 && cfg.in_w >= 1, ConfigError,
              "arch input dims must be positive");
  GENIE_CHECK(cfg.num_classes >= 2, ConfigError,
              "arch needs at least two classes");
  GENIE_CHECK(j.contains("layers") && j["layers"].is_array() &&
                  !j["layers"].empty(),
              ConfigError, "arch needs a non-empty \"layers\" array");

  for (const auto& lj : j["layers"]) {
    GENIE_CHECK(lj.is_object() && lj.contains("kind"), ConfigError,
                "each arch layer needs a \"kind\"");
    const std::string kind = lj["kind"].get<std::string>();
    auto it = kind_names().find(kind);
    GENIE_CHECK(it != kind_names().end(), ConfigError,
                "unknown layer kind \"" + kind + "\"");
    ArchLayer l;
    l.kind = it->second;
    switch (l.kind) {
      case LayerKind::kConv:
        l.out = get_int(lj, "out", 0, true);
        l.k = get_int(lj, "k", 3, false);
        l.stride = get_int(lj, "stride", 1, false);
        l.pad = get_int(lj, "pad", (l.k - 1) / 2, false);
        break;
      case LayerKind::kResidual:
        l.out = get_int(lj, "out", 0, true);
        l.stride = get_int(lj, "stride", 1, false);
        break;
      case LayerKind::kLinear:
        l.out = get_int(lj, "out", cfg.num_classes, false);
        break;
      case LayerKind::kLeakyRelu:
        l.slope = lj.value("slope", 0.2f);
        break;
      default:
        break;
    }
    if (l.kind == LayerKind::kConv || l.kind == LayerKind::kResidual ||
        l.kind == LayerKind::kLinear)
      GENIE_CHECK(l.out >= 1, ConfigError, "layer \"out\" must be >= 1");
    if (l.kind == LayerKind::kConv)
      GENIE_CHECK(l.k >= 1 && l.stride >= 1 && l.pad >= 0, ConfigError,
                  "conv hyperparameters out of range");
    if (l.kind == LayerKind::kResidual)
      GENIE_CHECK(l.stride >= 1, ConfigError, "residual stride must be >= 1");
    cfg.layers.push_back(l);
  }

  // Classifier contract: every explicit conv is immediately followed by bn so
  // batch statistics exist at each conv site.
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    if (cfg.layers[i].kind != LayerKind::kConv) continue;
    GENIE_CHECK(i + 1 < cfg.layers.size() &&
                    cfg.layers[i + 1].kind == LayerKind::kBn,
                ConfigError, "every conv must be followed by bn");
  }
  return cfg;
}

ArchConfig load_arch_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  GENIE_CHECK(f.good(), IoError, "cannot open arch config " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_arch(ss.str());
}

const std::vector<std::string>& arch_preset_names() {
  static const std::vector<std::string> names = {"plain-cnn-6", "resnet-tiny"};
  return names;
}

ArchConfig arch_preset(const std::string& name) {
  if (name == "plain-cnn-6") return parse_arch(kPlainCnn6);
  if (name == "resnet-tiny") return parse_arch(kResnetTiny);
  throw ConfigError("unknown arch preset \"" + name + "\"");
}

}  // namespace genie::nn

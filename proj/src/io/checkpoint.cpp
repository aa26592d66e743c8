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

#include "genie/io/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "GENZ writes raw little-endian payloads");

namespace genie::io {
namespace {

using json = nlohmann::json;
using Kind = CheckpointError::Kind;

constexpr char kMagic[4] = {'G', 'E', 'N', 'Z'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(const char* p, std::size_t n) : p_(p), n_(n) {}

  template <typename T>
  T get() {
    T v;
    need(sizeof(T));
    std::memcpy(&v, p_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string str(std::size_t len) {
    need(len);
    std::string s(p_ + pos_, len);
    pos_ += len;
    return s;
  }

  const char* raw(std::size_t len) {
    need(len);
    const char* r = p_ + pos_;
    pos_ += len;
    return r;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t k) {
    if (pos_ + k > n_)
      throw CheckpointError(Kind::kTruncated, "truncated file");
  }
  const char* p_;
  std::size_t n_, pos_ = 0;
};

}  // namespace

const nn::FTensor* CheckpointData::find(const std::string& name) const {
  for (const auto& e : tensors)
    if (e.name == name) return &e.t;
  return nullptr;
}

void save_tensors(const std::string& path,
                  const std::vector<TensorEntry>& tensors,
                  const std::string& meta_json) {
  std::string out;
  out.append(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));

  std::uint64_t offset = 0;
  for (const auto& e : tensors) {
    GENIE_CHECK(e.t.defined(), ConfigError,
                "cannot save undefined tensor \"" + e.name + "\"");
    GENIE_CHECK(e.name.size() <= 0xffff, ConfigError, "tensor name too long");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out.append(e.name);
    put<std::uint8_t>(out, 0);  // f32
    const auto& shape = e.t.shape();
    put<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
    for (int d : shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    const std::uint64_t nbytes = e.t.size() * sizeof(float);
    put<std::uint64_t>(out, offset);
    put<std::uint64_t>(out, nbytes);
    offset += nbytes;
  }

  put<std::uint64_t>(out, offset);
  for (const auto& e : tensors)
    out.append(reinterpret_cast<const char*>(e.t.data().data()),
               e.t.size() * sizeof(float));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(meta_json.size()));
  out.append(meta_json);

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    GENIE_CHECK(f.good(), IoError, "cannot open " + tmp + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    GENIE_CHECK(f.good(), IoError, "short write to " + tmp);
  }
  GENIE_CHECK(std::rename(tmp.c_str(), path.c_str()) == 0, IoError,
              "cannot rename " + tmp + " to " + path);
}

CheckpointData load_tensors(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  GENIE_CHECK(f.good(), IoError, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());

  Reader r(bytes.data(), bytes.size());
  const std::string magic = r.str(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw CheckpointError(Kind::kBadMagic, "bad magic in " + path);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw CheckpointError(Kind::kUnknownVersion,
                          "unknown version " + std::to_string(version));

  struct Row {
    std::string name;
    tns::Shape shape;
    std::uint64_t offset, nbytes;
  };
  const auto count = r.get<std::uint32_t>();
  std::vector<Row> rows(count);
  for (auto& row : rows) {
    row.name = r.str(r.get<std::uint16_t>());
    const auto dtype = r.get<std::uint8_t>();
    if (dtype != 0)
      throw CheckpointError(Kind::kBadTable,
                            "unsupported dtype in \"" + row.name + "\"");
    const int ndim = r.get<std::uint8_t>();
    std::uint64_t n = 1;
    for (int i = 0; i < ndim; ++i) {
      row.shape.push_back(static_cast<int>(r.get<std::uint32_t>()));
      n *= static_cast<std::uint64_t>(row.shape.back());
    }
    row.offset = r.get<std::uint64_t>();
    row.nbytes = r.get<std::uint64_t>();
    if (row.nbytes != n * sizeof(float))
      throw CheckpointError(Kind::kBadTable,
                            "byte length does not match shape of \"" +
                                row.name + "\"");
  }

  const auto payload_len = r.get<std::uint64_t>();
  std::vector<const Row*> by_offset;
  for (const auto& row : rows) by_offset.push_back(&row);
  std::sort(by_offset.begin(), by_offset.end(),
            [](const Row* a, const Row* b) { return a->offset < b->offset; });
  std::uint64_t cursor = 0;
  for (const Row* row : by_offset) {
    if (row->offset < cursor || row->offset + row->nbytes > payload_len)
      throw CheckpointError(Kind::kOverlap,
                            "overlapping or out-of-range offsets");
    cursor = row->offset + row->nbytes;
  }

  const char* payload = r.raw(payload_len);
  const auto meta_len = r.get<std::uint32_t>();
  CheckpointData out;
  out.meta_json = r.str(meta_len);
  for (const auto& row : rows) {
    std::vector<float> v(row.nbytes / sizeof(float));
    std::memcpy(v.data(), payload + row.offset, row.nbytes);
    out.tensors.push_back({row.name, nn::FTensor::from(row.shape, std::move(v))});
  }
  return out;
}

void save_model(const nn::ModelGraph& m, const std::string& path) {
  std::vector<TensorEntry> entries;
  for (const auto& [name, t] : m.named_state()) entries.push_back({name, t});
  json meta;
  meta["kind"] = "model";
  meta["arch_json"] = m.arch.source_json;
  meta["seed"] = m.seed;
  save_tensors(path, entries, meta.dump());
}

nn::ModelGraph load_model(const std::string& path) {
  CheckpointData data = load_tensors(path);
  json meta;
  try {
    meta = json::parse(data.meta_json);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint metadata: ") + e.what());
  }
  GENIE_CHECK(meta.value("kind", "") == "model", IoError,
              "checkpoint does not hold a model");
  auto cfg = nn::parse_arch(meta.at("arch_json").get<std::string>());
  auto m = nn::build_model(cfg, meta.value("seed", 0ull));

  auto state = m.named_state();
  GENIE_CHECK(state.size() == data.tensors.size(), IoError,
              "checkpoint tensor count does not match arch");
  for (auto& [name, t] : state) {
    const nn::FTensor* src = data.find(name);
    GENIE_CHECK(src != nullptr, IoError, "checkpoint missing \"" + name + "\"");
    GENIE_CHECK(src->shape() == t.shape(), IoError,
                "checkpoint shape mismatch for \"" + name + "\"");
    t.data() = src->data();
  }
  return m;
}

void save_images(const nn::FTensor& images, const std::string& path,
                 const std::string& extra_meta_json) {
  json meta;
  try {
    meta = json::parse(extra_meta_json);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("image metadata: ") + e.what());
  }
  meta["kind"] = "images";
  save_tensors(path, {{"images", images}}, meta.dump());
}

nn::FTensor load_images(const std::string& path) {
  CheckpointData data = load_tensors(path);
  const nn::FTensor* t = data.find("images");
  GENIE_CHECK(t != nullptr, IoError, "checkpoint holds no \"images\" tensor");
  return *t;
}

}  // namespace genie::io

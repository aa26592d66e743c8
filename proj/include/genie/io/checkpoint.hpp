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

#ifndef GENIE_IO_CHECKPOINT_HPP_
#define GENIE_IO_CHECKPOINT_HPP_

// GENZ tensor container. Layout, all integers little-endian:
//
//   char[4]  magic "GENZ"
//   u32      version (currently 1)
//   u32      tensor count
//   per tensor:
//     u16 name length, name bytes
//     u8  dtype (0 = f32)
//     u8  ndim, u32 dims[ndim]
//     u64 payload offset, u64 byte length
//   u64      payload length, payload bytes
//   u32      metadata length, metadata JSON bytes
//
// Writes go to <path>.tmp and are renamed into place, so a crash never
// leaves a half-written checkpoint at the target path. The same container
// stores models, distilled image sets and quantized-parameter bundles; the
// metadata JSON says which.

#include <cstdint>
#include <string>
#include <vector>

#include "genie/nn/model.hpp"

namespace genie::io {

struct CheckpointError : IoError {
  enum class Kind {
    kBadMagic,
    kUnknownVersion,
    kTruncated,
    kOverlap,
    kBadTable,
  };
  Kind kind;
  CheckpointError(Kind k, const std::string& msg)
      : IoError("checkpoint: " + msg), kind(k) {}
};

struct TensorEntry {
  std::string name;
  nn::FTensor t;
};

struct CheckpointData {
  std::vector<TensorEntry> tensors;
  std::string meta_json;

  const nn::FTensor* find(const std::string& name) const;
};

void save_tensors(const std::string& path,
                  const std::vector<TensorEntry>& tensors,
                  const std::string& meta_json);
CheckpointData load_tensors(const std::string& path);

// Model convenience wrappers: the payload is named_state(), the metadata
// records the arch JSON and build seed so load can rebuild the graph.
void save_model(const nn::ModelGraph& m, const std::string& path);
nn::ModelGraph load_model(const std::string& path);

// Image-set wrappers used for distilled calibration data.
void save_images(const nn::FTensor& images, const std::string& path,
                 const std::string& extra_meta_json = "{}");
nn::FTensor load_images(const std::string& path);

}  // namespace genie::io

#endif  // GENIE_IO_CHECKPOINT_HPP_

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

#ifndef GENIE_NN_DATA_HPP_
#define GENIE_NN_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "genie/nn/model.hpp"

namespace genie::nn {

struct LabeledImages {
  FTensor images;  // N x C x H x W, values roughly in [-1, 1]
  std::vector<int> labels;
  int num_classes = 10;

  int count() const { return images.defined() ? images.dim(0) : 0; }
};

// Synthetic 10-class desk dataset: 3x32x32 colored spatial patterns rendered
// deterministically from the seed. Classes are fine discriminations (stripe
// orientation and frequency bands, mirrored diagonals, checkers, rings,
// disks, blobs) with label-independent colors, so the classifier must read
// shape rather than hue. Labels are balanced round-robin.
LabeledImages make_desk_dataset(int n, std::uint64_t seed);

// IDX-format ingestion (the MNIST container): ubyte images + ubyte labels.
// Images are centered on a 32x32 canvas, scaled to [-1, 1] and replicated
// to three channels so they feed the same models as the desk set.
LabeledImages load_idx_dataset(const std::string& images_path,
                               const std::string& labels_path);

// Gathers rows into a batch tensor (no grad).
FTensor gather_images(const LabeledImages& d, const int* idx, int n);
std::vector<int> gather_labels(const LabeledImages& d, const int* idx, int n);

}  // namespace genie::nn

#endif  // GENIE_NN_DATA_HPP_

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

#ifndef GENIE_DISTILL_SWING_HPP_
#define GENIE_DISTILL_SWING_HPP_

// Swing convolution: a drop-in replacement for a stride-n conv during data
// synthesis. The input is reflection-padded by n-1 on the right and bottom,
// shifted by a random offset (dy,dx) in {0..n-1}^2, cropped back to the
// original extent and then convolved as usual. Each strided conv samples its
// own offset per forward pass. Inference paths never use this.

#include "genie/rng.hpp"
#include "genie/tensor/nnops.hpp"

namespace genie::distill {

struct SwingOffset {
  int dy = 0, dx = 0;
};

inline SwingOffset sample_swing_offset(Rng& rng, int stride) {
  SwingOffset o;
  o.dy = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(stride)));
  o.dx = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(stride)));
  return o;
}

template <typename T>
tns::Tensor<T> swing_conv2d(const tns::Tensor<T>& x, const tns::Tensor<T>& w,
                            const tns::Tensor<T>* bias, int stride, int pad,
                            SwingOffset off) {
  GENIE_CHECK(stride > 1, ConfigError,
              "swing_conv2d: stride-1 convs take the plain path");
  GENIE_CHECK(off.dy >= 0 && off.dy < stride && off.dx >= 0 && off.dx < stride,
              ConfigError, "swing_conv2d: offset outside {0..n-1}^2");
  const int h = static_cast<int>(x.shape()[2]);
  const int wd = static_cast<int>(x.shape()[3]);
  auto padded = tns::reflection_pad2d(x, 0, stride - 1, 0, stride - 1);
  auto shifted = tns::crop2d(padded, off.dy, off.dx, h, wd);
  if (bias) return tns::conv2d(shifted, w, *bias, stride, pad);
  return tns::conv2d(shifted, w, stride, pad);
}

}  // namespace genie::distill

#endif  // GENIE_DISTILL_SWING_HPP_

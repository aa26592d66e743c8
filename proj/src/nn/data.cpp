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

#include "genie/nn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace genie::nn {
namespace {

constexpr int kH = 32, kW = 32;

struct Rgb {
  float r, g, b;
};

// Palette for sampling image colors. Colors are drawn independently of the
// label, so hue never identifies the class; only the spatial pattern does.
constexpr Rgb kPalette[10] = {
    {0.9f, 0.2f, 0.2f},  {0.2f, 0.9f, 0.2f},  {0.2f, 0.3f, 0.9f},
    {0.9f, 0.8f, 0.1f},  {0.8f, 0.2f, 0.9f},  {0.1f, 0.9f, 0.9f},
    {0.9f, 0.5f, 0.1f},  {0.5f, 0.9f, 0.5f},  {0.4f, 0.4f, 0.9f},
    {0.9f, 0.9f, 0.9f},
};

float clamp1(float v) { return std::max(-1.0f, std::min(1.0f, v)); }

// Renders one image. Classes are fine spatial discriminations (stripe
// orientation and frequency bands, mirrored diagonals, checker, rings,
// disk, blobs); per-sample randomness covers phase, frequency inside the
// class band, contrast, center, colors and pixel noise.
void render_desk_image(int cls, Rng& rng, float* out) {
  const float phase = static_cast<float>(rng.uniform(0.0, 6.2831853));
  const float phase2 = static_cast<float>(rng.uniform(0.0, 6.2831853));
  const float lo = static_cast<float>(rng.uniform(0.36, 0.42));
  const float hi = static_cast<float>(rng.uniform(0.46, 0.52));
  const float mid = static_cast<float>(rng.uniform(0.40, 0.48));
  const float cx = static_cast<float>(rng.uniform(12.0, 20.0));
  const float cy = static_cast<float>(rng.uniform(12.0, 20.0));
  const float radius = static_cast<float>(rng.uniform(7.0, 10.0));
  const float contrast = static_cast<float>(rng.uniform(0.40, 0.90));
  const bool flip = rng.bernoulli(0.5);

  Rgb ca = kPalette[rng.next_below(10)];
  Rgb cb = kPalette[rng.next_below(10)];
  auto jit = [&](float v) {
    return clamp1(v + static_cast<float>(rng.uniform(-0.2, 0.2)));
  };
  ca = {jit(ca.r) * contrast, jit(ca.g) * contrast, jit(ca.b) * contrast};
  cb = {jit(-cb.r) * contrast, jit(-cb.g) * contrast, jit(-cb.b) * contrast};

  float bx[3], by[3], bs[3];
  for (int i = 0; i < 3; ++i) {
    bx[i] = static_cast<float>(rng.uniform(6.0, 26.0));
    by[i] = static_cast<float>(rng.uniform(6.0, 26.0));
    bs[i] = static_cast<float>(rng.uniform(2.5, 4.5));
  }

  for (int y = 0; y < kH; ++y) {
    for (int x = 0; x < kW; ++x) {
      const float dx = x - cx, dy = y - cy;
      const float r = std::sqrt(dx * dx + dy * dy);
      float p = 0.0f;
      switch (cls) {
        case 0:
          p = 0.5f + 0.5f * std::sin(lo * y + phase);
          break;
        case 1:
          p = 0.5f + 0.5f * std::sin(hi * y + phase);
          break;
        case 2:
          p = 0.5f + 0.5f * std::sin(lo * x + phase);
          break;
        case 3:
          p = 0.5f + 0.5f * std::sin(hi * x + phase);
          break;
        case 4:
          p = 0.5f + 0.5f * std::sin(0.7071f * mid * (x + y) + phase);
          break;
        case 5:
          p = 0.5f + 0.5f * std::sin(0.7071f * mid * (x - y) + phase);
          break;
        case 6:
          p = 0.5f + 0.5f * std::sin(mid * x + phase) *
                         std::sin(mid * y + phase2);
          break;
        case 7:
          p = 0.5f + 0.5f * std::sin(mid * r + phase);
          break;
        case 8:
          p = 1.0f / (1.0f + std::exp(-2.5f * (radius - r)));
          break;
        case 9: {
          for (int i = 0; i < 3; ++i) {
            float ddx = x - bx[i], ddy = y - by[i];
            p += std::exp(-(ddx * ddx + ddy * ddy) / (2.0f * bs[i] * bs[i]));
          }
          p = std::min(1.0f, p);
          break;
        }
      }
      if (flip && cls >= 8) p = 1.0f - p;
      const float noise = static_cast<float>(rng.normal(0.0, 0.12));
      const std::size_t pos = std::size_t(y) * kW + x;
      out[0 * kH * kW + pos] = clamp1(ca.r * p + cb.r * (1.0f - p) + noise);
      out[1 * kH * kW + pos] = clamp1(ca.g * p + cb.g * (1.0f - p) + noise);
      out[2 * kH * kW + pos] = clamp1(ca.b * p + cb.b * (1.0f - p) + noise);
    }
  }
}

std::uint32_t read_be32(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  GENIE_CHECK(f.good(), IoError, "truncated idx file " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

LabeledImages make_desk_dataset(int n, std::uint64_t seed) {
  GENIE_CHECK(n >= 1, ConfigError, "desk dataset size must be >= 1");
  LabeledImages d;
  d.num_classes = 10;
  d.labels.resize(n);
  std::vector<float> pix(std::size_t(n) * 3 * kH * kW);
  Rng base(seed);
  for (int i = 0; i < n; ++i) {
    d.labels[i] = i % 10;
    Rng r = base.fork(static_cast<std::uint64_t>(i));
    render_desk_image(d.labels[i], r, pix.data() + std::size_t(i) * 3 * kH * kW);
  }
  d.images = FTensor::from({n, 3, kH, kW}, std::move(pix));
  return d;
}

LabeledImages load_idx_dataset(const std::string& images_path,
                               const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  GENIE_CHECK(fi.good(), IoError, "cannot open " + images_path);
  GENIE_CHECK(read_be32(fi, images_path) == 0x803u, IoError,
              "bad idx image magic in " + images_path);
  const int n = static_cast<int>(read_be32(fi, images_path));
  const int h = static_cast<int>(read_be32(fi, images_path));
  const int w = static_cast<int>(read_be32(fi, images_path));
  GENIE_CHECK(n >= 1 && h >= 1 && h <= kH && w >= 1 && w <= kW, IoError,
              "idx image dims unsupported");
  std::vector<unsigned char> raw(std::size_t(n) * h * w);
  fi.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  GENIE_CHECK(fi.good(), IoError, "truncated idx file " + images_path);

  std::ifstream fl(labels_path, std::ios::binary);
  GENIE_CHECK(fl.good(), IoError, "cannot open " + labels_path);
  GENIE_CHECK(read_be32(fl, labels_path) == 0x801u, IoError,
              "bad idx label magic in " + labels_path);
  GENIE_CHECK(static_cast<int>(read_be32(fl, labels_path)) == n, IoError,
              "idx image/label count mismatch");
  std::vector<unsigned char> lab(n);
  fl.read(reinterpret_cast<char*>(lab.data()), n);
  GENIE_CHECK(fl.good(), IoError, "truncated idx file " + labels_path);

  LabeledImages d;
  d.labels.resize(n);
  int maxl = 0;
  for (int i = 0; i < n; ++i) {
    d.labels[i] = lab[i];
    maxl = std::max(maxl, d.labels[i]);
  }
  d.num_classes = maxl + 1;

  const int oy = (kH - h) / 2, ox = (kW - w) / 2;
  std::vector<float> pix(std::size_t(n) * 3 * kH * kW, -1.0f);
  for (int i = 0; i < n; ++i) {
    const unsigned char* src = raw.data() + std::size_t(i) * h * w;
    float* dst = pix.data() + std::size_t(i) * 3 * kH * kW;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        float v = src[y * w + x] / 255.0f * 2.0f - 1.0f;
        std::size_t pos = std::size_t(oy + y) * kW + (ox + x);
        dst[0 * kH * kW + pos] = v;
        dst[1 * kH * kW + pos] = v;
        dst[2 * kH * kW + pos] = v;
      }
  }
  d.images = FTensor::from({n, 3, kH, kW}, std::move(pix));
  return d;
}

FTensor gather_images(const LabeledImages& d, const int* idx, int n) {
  GENIE_CHECK(d.count() > 0, ConfigError, "gather from empty dataset");
  const int c = d.images.dim(1), h = d.images.dim(2), w = d.images.dim(3);
  const std::size_t stride = std::size_t(c) * h * w;
  std::vector<float> out(std::size_t(n) * stride);
  for (int i = 0; i < n; ++i) {
    GENIE_CHECK(idx[i] >= 0 && idx[i] < d.count(), ShapeError,
                "gather index out of range");
    std::memcpy(out.data() + std::size_t(i) * stride,
                d.images.data().data() + std::size_t(idx[i]) * stride,
                stride * sizeof(float));
  }
  return FTensor::from({n, c, h, w}, std::move(out));
}

std::vector<int> gather_labels(const LabeledImages& d, const int* idx, int n) {
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = d.labels[idx[i]];
  return out;
}

}  // namespace genie::nn

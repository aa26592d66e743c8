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

// Rough sgemm throughput probe for sizing run configurations.

#include <chrono>
#include <cstdio>
#include <vector>

#include "genie/kernels/kernels.hpp"
#include "genie/rng.hpp"

using Clock = std::chrono::steady_clock;

static void bench(const genie::kern::KernelTable& t, int m, int n, int k) {
  genie::Rng rng(1);
  std::vector<float> a(static_cast<std::size_t>(m) * k);
  std::vector<float> b(static_cast<std::size_t>(k) * n);
  std::vector<float> c(static_cast<std::size_t>(m) * n, 0.0f);
  for (auto& x : a) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (auto& x : b) x = static_cast<float>(rng.uniform(-1.0, 1.0));

  double flop = 2.0 * m * n * k;
  int reps = static_cast<int>(2e9 / flop) + 1;
  t.sgemm(false, false, m, n, k, 1.0f, a.data(), k, b.data(), n, 0.0f,
          c.data(), n);
  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    t.sgemm(false, false, m, n, k, 1.0f, a.data(), k, b.data(), n, 0.0f,
            c.data(), n);
  double sec = std::chrono::duration<double>(Clock::now() - t0).count();
  std::printf("%-6s m=%-5d n=%-5d k=%-4d reps=%-5d %7.2f GF/s\n", t.name, m, n,
              k, reps, flop * reps / sec / 1e9);
}

int main() {
  const genie::kern::KernelTable* tables[] = {&genie::kern::scalar_table(),
                                              genie::kern::avx2_table()};
  for (const auto* t : tables) {
    if (!t) continue;
    bench(*t, 16, 1024, 27);    // first conv
    bench(*t, 64, 256, 576);    // deep conv
    bench(*t, 64, 16384, 256);  // generator linear
    bench(*t, 128, 128, 128);
    bench(*t, 384, 384, 384);
  }
  return 0;
}

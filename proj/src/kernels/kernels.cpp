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

#include <atomic>
#include <string>

#include "genie/common.hpp"
#include "genie/kernels/kernels.hpp"

namespace genie::kern {
namespace {

std::atomic<const KernelTable*> g_override{nullptr};

const KernelTable* detect() {
  std::string pref = getenv_or("GENIE_KERNELS", "");
  if (pref == "scalar") return &scalar_table();
  const KernelTable* avx = avx2_table();
  if (pref == "avx2") {
    GENIE_CHECK(avx != nullptr, Error,
                "GENIE_KERNELS=avx2 but AVX2/FMA is not available");
    return avx;
  }
  GENIE_CHECK(pref.empty(), Error,
              "unknown GENIE_KERNELS value '" + pref +
                  "' (expected scalar or avx2)");
  return avx ? avx : &scalar_table();
}

}  // namespace

const KernelTable& table() {
  const KernelTable* o = g_override.load(std::memory_order_acquire);
  if (o) return *o;
  static const KernelTable* chosen = detect();
  return *chosen;
}

void set_table(const KernelTable* t) {
  g_override.store(t, std::memory_order_release);
}

}  // namespace genie::kern

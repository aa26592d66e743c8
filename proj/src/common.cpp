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

#include "genie/common.hpp"

#include <atomic>
#include <cstdlib>

namespace genie {
namespace {

std::atomic<bool> g_checked{true};

int parse_threads() {
  std::string v = getenv_or("GENIE_THREADS", "1");
  int n = 1;
  try {
    n = std::stoi(v);
  } catch (...) {
    return 1;
  }
  return n < 1 ? 1 : n;
}

}  // namespace

bool checked_mode() { return g_checked.load(std::memory_order_relaxed); }

void set_checked_mode(bool on) {
  g_checked.store(on, std::memory_order_relaxed);
}

int max_threads() {
  static int n = parse_threads();
  return n;
}

std::string getenv_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace genie

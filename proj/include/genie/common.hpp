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
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace genie {

// Error hierarchy. The CLI maps these onto exit codes: ConfigError -> 2,
// NumericError -> 3, IoError -> 4.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg)
      : Error("numeric error: " + msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg)
      : Error("config error: " + msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

#define GENIE_CHECK(cond, ExcType, msg)      \
  do {                                       \
    if (!(cond)) throw ExcType(msg);         \
  } while (0)

// When enabled, ops scan their inputs for NaN/Inf and throw NumericError.
// Long-running pipelines leave this off and watch their loss scalars instead.
bool checked_mode();
void set_checked_mode(bool on);

// GENIE_THREADS caps batch-level parallelism (0 or unset -> hardware default).
int max_threads();

std::string getenv_or(const char* name, const std::string& fallback);

// FNV-1a over raw bytes, used for artifact hashes in reports.
std::uint64_t fnv1a(const void* data, std::size_t n,
                    std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace genie

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

#ifndef GENIE_TENSOR_OPTIM_HPP_
#define GENIE_TENSOR_OPTIM_HPP_

#include <cmath>
#include <limits>
#include <vector>

#include "genie/kernels/kernels.hpp"
#include "genie/tensor/tensor.hpp"

namespace genie::tns {

// Adam with bias correction. Parameters are grouped so each group can run
// its own learning rate (and be rescheduled between steps). Parameters whose
// grad was never touched in the current iteration are skipped.
template <typename T>
class Adam {
 public:
  struct Group {
    std::vector<Tensor<T>> params;
    T lr;
  };

  explicit Adam(std::vector<Group> groups, T beta1 = T(0.9),
                T beta2 = T(0.999), T eps = T(1e-8))
      : groups_(std::move(groups)), b1_(beta1), b2_(beta2), eps_(eps) {
    slots_.resize(groups_.size());
    for (std::size_t g = 0; g < groups_.size(); ++g)
      slots_[g].resize(groups_[g].params.size());
  }

  void step() {
    ++t_;
    T bc1 = T(1) / (T(1) - std::pow(b1_, static_cast<T>(t_)));
    T bc2 = T(1) / (T(1) - std::pow(b2_, static_cast<T>(t_)));
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      T lr = groups_[g].lr;
      for (std::size_t i = 0; i < groups_[g].params.size(); ++i) {
        auto& p = groups_[g].params[i];
        if (!p.has_grad()) continue;
        auto& slot = slots_[g][i];
        if (slot.m.empty()) {
          slot.m.assign(p.size(), T(0));
          slot.v.assign(p.size(), T(0));
        }
        if constexpr (std::is_same_v<T, float>) {
          kern::table().adam_step(p.data().data(), p.grad().data(),
                                  slot.m.data(), slot.v.data(), p.size(), lr,
                                  b1_, b2_, eps_, bc1, bc2);
        } else {
          const auto& grad = p.grad();
          for (std::size_t j = 0; j < p.size(); ++j) {
            slot.m[j] = b1_ * slot.m[j] + (T(1) - b1_) * grad[j];
            slot.v[j] = b2_ * slot.v[j] + (T(1) - b2_) * grad[j] * grad[j];
            p.data()[j] -=
                lr * (slot.m[j] * bc1) / (std::sqrt(slot.v[j] * bc2) + eps_);
          }
        }
      }
    }
  }

  void zero_grad() {
    for (auto& g : groups_)
      for (auto& p : g.params) p.zero_grad();
  }

  void set_lr(std::size_t g, T lr) { groups_[g].lr = lr; }
  T lr(std::size_t g) const { return groups_[g].lr; }
  int steps() const { return t_; }

 private:
  struct Slot {
    std::vector<T> m, v;
  };
  std::vector<Group> groups_;
  std::vector<std::vector<Slot>> slots_;
  T b1_, b2_, eps_;
  int t_ = 0;
};

// lr(t) = lr0 * gamma^floor(t / every_n)
template <typename T>
struct ExponentialSched {
  T lr0;
  T gamma;
  int every_n;

  T at(int t) const {
    GENIE_CHECK(every_n >= 1, ConfigError, "exponential: every_n must be >= 1");
    GENIE_CHECK(t >= 0, ConfigError, "exponential: negative step");
    return lr0 * std::pow(gamma, static_cast<T>(t / every_n));
  }
};

// lr(t) = lr0 * 0.5 * (1 + cos(pi * t / total)); reaches 0 exactly at
// t == total. Training loops query t in [0, total) so every emitted lr
// stays positive.
template <typename T>
struct CosineSched {
  T lr0;
  int total;

  T at(int t) const {
    GENIE_CHECK(total >= 1, ConfigError, "cosine: total must be >= 1");
    GENIE_CHECK(t >= 0 && t <= total, ConfigError, "cosine: step out of range");
    const T pi = T(3.14159265358979323846);
    return lr0 * T(0.5) *
           (T(1) + std::cos(pi * static_cast<T>(t) / static_cast<T>(total)));
  }
};

// Multiplies the lr by `factor` once the metric has gone `patience`
// observations without improving on the best seen, with a floor at min_lr.
template <typename T>
class PlateauSched {
 public:
  PlateauSched(T lr0, T factor, int patience, T min_lr)
      : lr_(lr0), factor_(factor), patience_(patience), min_lr_(min_lr) {
    GENIE_CHECK(factor > T(0) && factor < T(1), ConfigError,
                "plateau: factor must be in (0,1)");
    GENIE_CHECK(patience >= 1, ConfigError, "plateau: patience must be >= 1");
  }

  T observe(T metric) {
    if (metric < best_) {
      best_ = metric;
      bad_ = 0;
    } else if (++bad_ >= patience_) {
      lr_ = std::max(lr_ * factor_, min_lr_);
      bad_ = 0;
    }
    return lr_;
  }

  T lr() const { return lr_; }

 private:
  T lr_, factor_;
  int patience_;
  T min_lr_;
  T best_ = std::numeric_limits<T>::infinity();
  int bad_ = 0;
};

}  // namespace genie::tns

#endif  // GENIE_TENSOR_OPTIM_HPP_

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

#ifndef GENIE_TENSOR_TENSOR_HPP_
#define GENIE_TENSOR_TENSOR_HPP_

// Tape-based reverse-mode autodiff. Tensors wrap shared graph nodes; every
// op allocates a fresh output node whose closure scatters gradients back to
// its parents. Graphs are DAGs by construction (an op can only reference
// tensors that already exist), and backward visits nodes in descending
// creation order, so accumulation order is deterministic across runs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "genie/common.hpp"

namespace genie::tns {

using Shape = std::vector<int>;

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

inline std::uint64_t next_seq() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward_fn;

  void ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), T(0));
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), T(0), requires_grad);
  }

  static Tensor full(Shape shape, T v, bool requires_grad = false) {
    std::vector<T> data(numel(shape), v);
    return from(std::move(shape), std::move(data), requires_grad);
  }

  static Tensor from(Shape shape, std::vector<T> data,
                     bool requires_grad = false) {
    GENIE_CHECK(data.size() == numel(shape), ShapeError,
                "tensor data length " + std::to_string(data.size()) +
                    " does not match shape " + shape_str(shape));
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    n->seq = next_seq();
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

  static Tensor scalar(T v, bool requires_grad = false) {
    return from({1}, {v}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  int dim(std::size_t i) const { return n_->shape[i]; }
  std::size_t size() const { return n_->value.size(); }
  bool requires_grad() const { return n_ && n_->requires_grad; }

  std::vector<T>& data() { return n_->value; }
  const std::vector<T>& data() const { return n_->value; }

  std::vector<T>& grad() {
    n_->ensure_grad();
    return n_->grad;
  }
  bool has_grad() const { return n_ && !n_->grad.empty(); }

  void zero_grad() {
    if (n_ && !n_->grad.empty())
      std::fill(n_->grad.begin(), n_->grad.end(), T(0));
  }

  T item() const {
    GENIE_CHECK(size() == 1, ShapeError,
                "item() needs a single-element tensor, got " +
                    shape_str(n_->shape));
    return n_->value[0];
  }

  Tensor detach() const {
    Tensor t;
    auto n = std::make_shared<Node<T>>();
    n->shape = n_->shape;
    n->value = n_->value;
    n->seq = next_seq();
    t.n_ = std::move(n);
    return t;
  }

  const std::shared_ptr<Node<T>>& node() const { return n_; }

  static Tensor wrap(std::shared_ptr<Node<T>> n) {
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

 private:
  std::shared_ptr<Node<T>> n_;
};

// Builds an op node. Parents that do not require grad are kept for the
// closure's value reads, but when none of them requires grad the tape is
// skipped entirely and the result is a plain constant.
template <typename T, typename F>
Tensor<T> make_op(Shape shape, std::vector<T> value,
                  std::vector<Tensor<T>> parents, F&& backward_fn) {
  GENIE_CHECK(value.size() == numel(shape), ShapeError,
              "op produced " + std::to_string(value.size()) +
                  " values for shape " + shape_str(shape));
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.requires_grad();
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = rg;
  n->seq = next_seq();
  if (rg) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::forward<F>(backward_fn);
  }
  return Tensor<T>::wrap(std::move(n));
}

// Reverse pass from a scalar loss. Gradients accumulate (+=) on every
// requires_grad tensor reachable from `root`; repeat runs over the same
// graph and inputs produce identical bytes.
template <typename T>
void backward(const Tensor<T>& root) {
  GENIE_CHECK(root.defined() && root.size() == 1, ShapeError,
              "backward requires a scalar loss tensor");
  GENIE_CHECK(std::isfinite(static_cast<double>(root.data()[0])), NumericError,
              "backward called on non-finite loss");
  GENIE_CHECK(root.requires_grad(), Error,
              "backward called on a tensor with no grad path");

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<Node<T>*> stack{root.node().get()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents)
      if (p->requires_grad && seen.insert(p.get()).second)
        stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

  root.node()->ensure_grad();
  root.node()->grad[0] += T(1);
  for (Node<T>* n : order)
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
}

}  // namespace genie::tns

#endif  // GENIE_TENSOR_TENSOR_HPP_

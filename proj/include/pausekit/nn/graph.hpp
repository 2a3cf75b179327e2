// pausekit/nn/graph.hpp

// Copyright 2026 Pausekit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Define-by-run reverse-mode differentiation. Each op appends a node to the
// tape; creation order is a valid topological order, so backward() walks the
// tape once in reverse. Gradients are accumulated only into nodes that
// require them, so frozen parameters stay ungradiented and their subgraphs
// are skipped.

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>

#include "pausekit/nn/tensor.hpp"

namespace pausekit::nn {

struct Node {
  Tensor value;
  Tensor grad;  // empty until a gradient is first accumulated
  bool requires_grad = false;
  std::function<void(Node&)> backward_fn;  // empty for leaves
};

class Graph;

// Lightweight handle to a node on a graph's tape.
struct Var {
  Node* node = nullptr;
  Graph* graph = nullptr;

  bool valid() const { return node != nullptr; }
  const Tensor& value() const { return node->value; }
  const Tensor& grad() const { return node->grad; }
};

// Zero-initializes the gradient buffer on first use.
inline Tensor& grad_buffer(Node* n) {
  if (n->grad.empty()) n->grad = Tensor::zeros(n->value.shape());
  return n->grad;
}

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value) { return make(std::move(value), false, nullptr); }

  // Binds a named parameter as a leaf. Repeated binds of the same parameter
  // (same owning set and name) reuse the node so gradients accumulate in one
  // place; distinct parameter sets never alias even when names collide.
  Var param(const void* owner, const std::string& name, const Tensor& value, bool trainable) {
    auto& by_name = param_nodes_[owner];
    auto it = by_name.find(name);
    if (it != by_name.end()) return Var{it->second, this};
    Var v = make(value, trainable, nullptr);
    by_name.emplace(name, v.node);
    param_order_.push_back({name, v.node});
    return v;
  }

  Var make(Tensor value, bool requires_grad, std::function<void(Node&)> backward_fn) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward_fn = std::move(backward_fn);
    return Var{&n, this};
  }

  // Reverse-mode sweep from a scalar root. The graph is consumed: a second
  // backward() call is an error.
  void backward(const Var& root) {
    if (root.graph != this) throw ConfigError("backward: root belongs to another graph");
    if (consumed_) throw ConfigError("backward: graph already consumed");
    consumed_ = true;
    if (root.node->value.numel() != 1)
      throw ConfigError("backward: root must be a scalar, got shape " +
                        root.node->value.shape_str());
    grad_buffer(root.node).fill(1.0);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      if (it->backward_fn && !it->grad.empty() && it->requires_grad) it->backward_fn(*it);
    }
  }

  // Gradients of the trainable parameters reached by the backward sweep.
  std::map<std::string, Tensor> gradients() const {
    std::map<std::string, Tensor> out;
    for (const auto& [name, n] : param_order_) {
      if (!n->requires_grad || n->grad.empty()) continue;
      if (!out.emplace(name, n->grad).second)
        throw ConfigError("gradients: parameter name '" + name +
                          "' is bound from more than one parameter set");
    }
    return out;
  }

  bool consumed() const { return consumed_; }
  size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;  // stable addresses
  std::map<const void*, std::unordered_map<std::string, Node*>> param_nodes_;
  std::vector<std::pair<std::string, Node*>> param_order_;
  bool consumed_ = false;
};

inline void check_same_graph(const Var& a, const Var& b, const char* op) {
  if (a.graph != b.graph) throw ConfigError(std::string(op) + ": operands from different graphs");
}

}  // namespace pausekit::nn

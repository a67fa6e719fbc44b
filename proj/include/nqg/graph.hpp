// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "nqg/tensor.hpp"

namespace nqg {

class Graph;

/// Handle to a node recorded in a Graph.
struct Var {
  Graph *graph = nullptr;
  std::size_t id = 0;

  const Tensor &value() const;
  const Shape &shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double operator[](std::size_t i) const { return value()[i]; }
};

/**
 * Tape of primitive operations in creation order.
 *
 * Nodes are appended as ops execute, so every op's inputs precede it.
 * backward() walks the tape once in reverse, calling each node's adjoint
 * rule. Parameter tensors are bound by reference (no copy); their gradient
 * is accumulated into a caller-supplied sink, normally the tensor's own
 * grad slot. One graph must only be driven from one thread.
 */
class Graph {
public:
  /// Adjoint rule: receives the node's output value and gradient and
  /// accumulates into inputs through Graph::grad_sink().
  using Backward = std::function<void(Graph &, const Tensor &out,
                                      std::span<const double> out_grad)>;

  Graph() = default;
  Graph(const Graph &) = delete;
  Graph &operator=(const Graph &) = delete;

  /// Input that never receives gradient.
  Var constant(Tensor value);
  /// Owned leaf whose gradient is readable through grad() after backward.
  Var leaf(Tensor value);
  /// Binds a parameter by reference. Gradient goes to `p.grad()` when the
  /// tensor has a gradient slot; otherwise the parameter is treated as a
  /// constant.
  Var bind(Tensor &p);
  /// Binds by reference with an explicit gradient sink (may be empty for
  /// read-only use).
  Var bind(const Tensor &p, std::span<double> sink);

  const Tensor &value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  /// Gradient of an owned node after backward(); empty if none flowed.
  std::span<const double> grad(Var v) const;

  /// Reverse-mode sweep from a scalar loss.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Used by op implementations.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward fn);
  Var record(Tensor value, const std::vector<Var> &inputs, Backward fn);
  /// Writable gradient buffer of node `v`, or an empty span when `v` does
  /// not take gradient.
  std::span<double> grad_sink(Var v);

private:
  struct Node {
    Tensor value;
    const Tensor *bound = nullptr;
    std::span<double> external_grad;
    std::vector<double> grad;
    bool requires_grad = false;
    Backward backward;
  };
  Var push(Node node);

  std::deque<Node> nodes_;
};

} // namespace nqg

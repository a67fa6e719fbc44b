// SPDX-License-Identifier: Apache-2.0
#include "nqg/graph.hpp"

#include "nqg/error.hpp"

namespace nqg {

const Tensor &Var::value() const { return graph->value(*this); }

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Graph::bind(Tensor &p) {
  return p.has_grad() ? bind(p, p.grad()) : bind(p, std::span<double>{});
}

Var Graph::bind(const Tensor &p, std::span<double> sink) {
  if (!sink.empty() && sink.size() != p.size())
    throw DimensionError("gradient sink size " + std::to_string(sink.size()) +
                         " does not match parameter " +
                         shape_string(p.shape()));
  Node n;
  n.bound = &p;
  n.external_grad = sink;
  n.requires_grad = !sink.empty();
  return push(std::move(n));
}

const Tensor &Graph::value(Var v) const {
  const Node &n = nodes_[v.id];
  return n.bound ? *n.bound : n.value;
}

std::span<const double> Graph::grad(Var v) const {
  const Node &n = nodes_[v.id];
  if (!n.external_grad.empty())
    return n.external_grad;
  return n.grad;
}

std::span<double> Graph::grad_sink(Var v) {
  Node &n = nodes_[v.id];
  if (!n.requires_grad)
    return {};
  if (!n.external_grad.empty())
    return n.external_grad;
  if (n.grad.empty())
    n.grad.assign(value(v).size(), 0.0);
  return n.grad;
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs,
                  Backward fn) {
  bool needs = false;
  for (const Var &in : inputs)
    needs = needs || nodes_[in.id].requires_grad;
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs)
    n.backward = std::move(fn);
  return push(std::move(n));
}

Var Graph::record(Tensor value, const std::vector<Var> &inputs, Backward fn) {
  bool needs = false;
  for (const Var &in : inputs)
    needs = needs || nodes_[in.id].requires_grad;
  Node n;
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs)
    n.backward = std::move(fn);
  return push(std::move(n));
}

void Graph::backward(Var loss) {
  if (loss.graph != this)
    throw ContractError("backward: loss belongs to another graph");
  if (value(loss).size() != 1)
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_string(value(loss).shape()));
  if (!nodes_[loss.id].requires_grad)
    return;
  // Interior adjoints are per-sweep; leaves and bound sinks accumulate.
  for (auto &n : nodes_)
    if (n.backward)
      n.grad.clear();
  grad_sink(loss)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node &n = nodes_[i];
    if (!n.backward || n.grad.empty())
      continue;
    n.backward(*this, n.value, n.grad);
  }
}

} // namespace nqg

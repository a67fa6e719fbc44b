// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <utility>

#include "nqg/error.hpp"
#include "nqg/trainer.hpp"

namespace nqg {

namespace {

void require_grad(const std::string &name, const Tensor &t) {
  if (!t.has_grad())
    throw ContractError("parameter '" + name + "' has no gradient");
}

} // namespace

void AdamOptimizer::step(Parameters &params) {
  ++t_;
  const double c1 = 1.0 - std::pow(settings_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(settings_.beta2, static_cast<double>(t_));
  params.for_each([&](const std::string &name, Tensor &p) {
    require_grad(name, p);
    auto [mi, fresh_m] = m_.try_emplace(name, p.shape());
    auto [vi, fresh_v] = v_.try_emplace(name, p.shape());
    auto m = mi->second.values();
    auto v = vi->second.values();
    auto w = p.values();
    const auto g = std::as_const(p).grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = settings_.beta1 * m[i] + (1.0 - settings_.beta1) * g[i];
      v[i] = settings_.beta2 * v[i] + (1.0 - settings_.beta2) * g[i] * g[i];
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      w[i] -= settings_.lr * mh / (std::sqrt(vh) + settings_.epsilon);
    }
  });
}

void AdamOptimizer::save(std::map<std::string, Tensor> &out) const {
  for (const auto &[name, t] : m_)
    out["adam.m." + name] = t;
  for (const auto &[name, t] : v_)
    out["adam.v." + name] = t;
}

void AdamOptimizer::load(const std::map<std::string, Tensor> &in,
                         std::size_t steps) {
  m_.clear();
  v_.clear();
  for (const auto &[key, t] : in) {
    if (key.rfind("adam.m.", 0) == 0)
      m_.emplace(key.substr(7), t);
    else if (key.rfind("adam.v.", 0) == 0)
      v_.emplace(key.substr(7), t);
  }
  t_ = steps;
}

void sgd_step(Parameters &params, double lr) {
  params.for_each([&](const std::string &name, Tensor &p) {
    require_grad(name, p);
    auto w = p.values();
    const auto g = std::as_const(p).grad();
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] -= lr * g[i];
  });
}

void clip_gradients(std::span<double> grads, double lo, double hi) {
  for (double &g : grads)
    g = std::clamp(g, lo, hi);
}

void clip_gradients(Parameters &params, double lo, double hi) {
  params.for_each([&](const std::string &, Tensor &p) {
    if (p.has_grad())
      clip_gradients(p.grad(), lo, hi);
  });
}

} // namespace nqg

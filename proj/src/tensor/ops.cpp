// SPDX-License-Identifier: Apache-2.0
#include "nqg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nqg/error.hpp"

namespace nqg::ops {

namespace {

Graph &graph_of(Var a) {
  if (!a.graph)
    throw ContractError("op applied to an unbound Var");
  return *a.graph;
}

Graph &graph_of(Var a, Var b) {
  if (a.graph != b.graph)
    throw ContractError("op mixes Vars from different graphs");
  return graph_of(a);
}

void require_same_shape(const char *op, const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_vector(const char *op, const Tensor &a) {
  if (a.rank() != 1)
    throw DimensionError(std::string(op) + ": expected a vector, got " +
                         shape_string(a.shape()));
}

void require_finite(const char *op, const Tensor &a) {
  for (double v : a.values())
    if (!std::isfinite(v))
      throw NumericError(std::string(op) + ": non-finite input");
}

double stable_sigmoid(double x) {
  if (x >= 0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

} // namespace

Var matmul(Var a, Var b) {
  Graph &g = graph_of(a, b);
  const Tensor &A = a.value();
  const Tensor &B = b.value();
  const bool vec = B.rank() == 1;
  if (A.rank() != 2 || (B.rank() != 1 && B.rank() != 2) ||
      A.cols() != B.shape()[0])
    throw DimensionError("matmul: incompatible shapes " +
                         shape_string(A.shape()) + " and " +
                         shape_string(B.shape()));
  const std::size_t m = A.rows(), k = A.cols();
  const std::size_t n = vec ? 1 : B.cols();
  Tensor out(vec ? Shape{m} : Shape{m, n});
  const double *pa = A.values().data();
  const double *pb = B.values().data();
  double *po = out.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    const double *arow = pa + i * k;
    double *orow = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double *brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j)
        orow[j] += av * brow[j];
    }
  }
  return g.record(
      std::move(out), {a, b},
      [a, b, m, k, n](Graph &g, const Tensor &, std::span<const double> og) {
        auto ga = g.grad_sink(a);
        if (!ga.empty()) {
          const double *pb = g.value(b).values().data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0;
              for (std::size_t j = 0; j < n; ++j)
                acc += og[i * n + j] * pb[p * n + j];
              ga[i * k + p] += acc;
            }
        }
        auto gb = g.grad_sink(b);
        if (!gb.empty()) {
          const double *pa = g.value(a).values().data();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              const double av = pa[i * k + p];
              for (std::size_t j = 0; j < n; ++j)
                gb[p * n + j] += av * og[i * n + j];
            }
        }
      });
}

Var transpose(Var a) {
  Graph &g = graph_of(a);
  const Tensor &A = a.value();
  if (A.rank() != 2)
    throw DimensionError("transpose: expected a matrix, got " +
                         shape_string(A.shape()));
  const std::size_t r = A.rows(), c = A.cols();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out.at(j, i) = A.at(i, j);
  return g.record(std::move(out), {a},
                  [a, r, c](Graph &g, const Tensor &, auto og) {
                    auto ga = g.grad_sink(a);
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < c; ++j)
                        ga[i * c + j] += og[j * r + i];
                  });
}

Var add(Var a, Var b) {
  Graph &g = graph_of(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  const auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += bv[i];
  return g.record(std::move(out), {a, b},
                  [a, b](Graph &g, const Tensor &, auto og) {
                    for (Var v : {a, b}) {
                      auto gs = g.grad_sink(v);
                      for (std::size_t i = 0; i < gs.size(); ++i)
                        gs[i] += og[i];
                    }
                  });
}

Var sub(Var a, Var b) {
  Graph &g = graph_of(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] -= bv[i];
  return g.record(std::move(out), {a, b},
                  [a, b](Graph &g, const Tensor &, auto og) {
                    auto ga = g.grad_sink(a);
                    for (std::size_t i = 0; i < ga.size(); ++i)
                      ga[i] += og[i];
                    auto gb = g.grad_sink(b);
                    for (std::size_t i = 0; i < gb.size(); ++i)
                      gb[i] -= og[i];
                  });
}

Var mul(Var a, Var b) {
  Graph &g = graph_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= bv[i];
  return g.record(std::move(out), {a, b},
                  [a, b](Graph &g, const Tensor &, auto og) {
                    auto ga = g.grad_sink(a);
                    if (!ga.empty()) {
                      const auto bv = g.value(b).values();
                      for (std::size_t i = 0; i < ga.size(); ++i)
                        ga[i] += og[i] * bv[i];
                    }
                    auto gb = g.grad_sink(b);
                    if (!gb.empty()) {
                      const auto av = g.value(a).values();
                      for (std::size_t i = 0; i < gb.size(); ++i)
                        gb[i] += og[i] * av[i];
                    }
                  });
}

Var scale(Var a, double c) {
  Graph &g = graph_of(a);
  Tensor out = a.value();
  for (auto &v : out.values())
    v *= c;
  return g.record(std::move(out), {a},
                  [a, c](Graph &g, const Tensor &, auto og) {
                    auto ga = g.grad_sink(a);
                    for (std::size_t i = 0; i < ga.size(); ++i)
                      ga[i] += c * og[i];
                  });
}

Var one_minus(Var a) {
  Graph &g = graph_of(a);
  Tensor out = a.value();
  for (auto &v : out.values())
    v = 1.0 - v;
  return g.record(std::move(out), {a}, [a](Graph &g, const Tensor &, auto og) {
    auto ga = g.grad_sink(a);
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] -= og[i];
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var add_rows(Var m, Var v) {
  Graph &g = graph_of(m, v);
  const Tensor &M = m.value();
  const Tensor &V = v.value();
  require_vector("add_rows", V);
  if (M.rank() != 2 || M.cols() != V.size())
    throw DimensionError("add_rows: incompatible shapes " +
                         shape_string(M.shape()) + " and " +
                         shape_string(V.shape()));
  const std::size_t r = M.rows(), c = M.cols();
  Tensor out = M;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out.at(i, j) += V[j];
  return g.record(std::move(out), {m, v},
                  [m, v, r, c](Graph &g, const Tensor &, auto og) {
                    auto gm = g.grad_sink(m);
                    for (std::size_t i = 0; i < gm.size(); ++i)
                      gm[i] += og[i];
                    auto gv = g.grad_sink(v);
                    if (!gv.empty())
                      for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < c; ++j)
                          gv[j] += og[i * c + j];
                  });
}

Var tanh(Var a) {
  Graph &g = graph_of(a);
  Tensor out = a.value();
  for (auto &v : out.values())
    v = std::tanh(v);
  return g.record(std::move(out), {a},
                  [a](Graph &g, const Tensor &out, auto og) {
                    auto ga = g.grad_sink(a);
                    for (std::size_t i = 0; i < ga.size(); ++i)
                      ga[i] += og[i] * (1.0 - out[i] * out[i]);
                  });
}

Var sigmoid(Var a) {
  Graph &g = graph_of(a);
  Tensor out = a.value();
  for (auto &v : out.values())
    v = stable_sigmoid(v);
  return g.record(std::move(out), {a},
                  [a](Graph &g, const Tensor &out, auto og) {
                    auto ga = g.grad_sink(a);
                    for (std::size_t i = 0; i < ga.size(); ++i)
                      ga[i] += og[i] * out[i] * (1.0 - out[i]);
                  });
}

Var log(Var a) {
  Graph &g = graph_of(a);
  Tensor out = a.value();
  for (auto &v : out.values()) {
    if (!(v > 0))
      throw NumericError("log: non-positive input");
    v = std::log(v);
  }
  return g.record(std::move(out), {a}, [a](Graph &g, const Tensor &, auto og) {
    auto ga = g.grad_sink(a);
    const auto av = g.value(a).values();
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] += og[i] / av[i];
  });
}

Var log_sigmoid(Var a) {
  Graph &g = graph_of(a);
  Tensor out = a.value();
  for (auto &v : out.values())
    v = std::min(v, 0.0) - std::log1p(std::exp(-std::abs(v)));
  return g.record(std::move(out), {a}, [a](Graph &g, const Tensor &, auto og) {
    auto ga = g.grad_sink(a);
    const auto av = g.value(a).values();
    for (std::size_t i = 0; i < ga.size(); ++i)
      ga[i] += og[i] * stable_sigmoid(-av[i]);
  });
}

Var concat(const std::vector<Var> &parts) {
  if (parts.empty())
    throw DimensionError("concat: no inputs");
  Graph &g = graph_of(parts.front());
  std::size_t total = 0;
  for (const Var &p : parts) {
    graph_of(parts.front(), p);
    require_vector("concat", p.value());
    total += p.size();
  }
  Tensor out({total});
  std::size_t off = 0;
  for (const Var &p : parts) {
    const auto pv = p.value().values();
    std::copy(pv.begin(), pv.end(), out.values().begin() + off);
    off += pv.size();
  }
  return g.record(std::move(out), parts,
                  [parts](Graph &g, const Tensor &, auto og) {
                    std::size_t off = 0;
                    for (const Var &p : parts) {
                      auto gp = g.grad_sink(p);
                      const std::size_t n = g.value(p).size();
                      for (std::size_t i = 0; i < gp.size(); ++i)
                        gp[i] += og[off + i];
                      off += n;
                    }
                  });
}

Var stack_rows(const std::vector<Var> &rows) {
  if (rows.empty())
    throw DimensionError("stack_rows: no inputs");
  Graph &g = graph_of(rows.front());
  const std::size_t c = rows.front().size();
  for (const Var &r : rows) {
    graph_of(rows.front(), r);
    require_vector("stack_rows", r.value());
    if (r.size() != c)
      throw DimensionError("stack_rows: ragged rows " +
                           shape_string(rows.front().shape()) + " vs " +
                           shape_string(r.shape()));
  }
  Tensor out({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto rv = rows[i].value().values();
    std::copy(rv.begin(), rv.end(), out.row(i).begin());
  }
  return g.record(std::move(out), rows,
                  [rows, c](Graph &g, const Tensor &, auto og) {
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      auto gr = g.grad_sink(rows[i]);
                      for (std::size_t j = 0; j < gr.size(); ++j)
                        gr[j] += og[i * c + j];
                    }
                  });
}

Var slice(Var v, std::size_t offset, std::size_t length) {
  Graph &g = graph_of(v);
  require_vector("slice", v.value());
  if (length == 0 || offset + length > v.size())
    throw DimensionError("slice: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") outside " +
                         shape_string(v.shape()));
  const auto vv = v.value().values().subspan(offset, length);
  Tensor out({length}, std::vector<double>(vv.begin(), vv.end()));
  return g.record(std::move(out), {v},
                  [v, offset](Graph &g, const Tensor &, auto og) {
                    auto gv = g.grad_sink(v);
                    for (std::size_t i = 0; i < og.size(); ++i)
                      gv[offset + i] += og[i];
                  });
}

Var row(Var table, std::size_t index) {
  Graph &g = graph_of(table);
  const Tensor &T = table.value();
  if (T.rank() != 2)
    throw DimensionError("row: expected a matrix, got " +
                         shape_string(T.shape()));
  if (index >= T.rows())
    throw LookupError("row " + std::to_string(index) + " outside table of " +
                      std::to_string(T.rows()) + " rows");
  const auto rv = T.row(index);
  const std::size_t c = T.cols();
  Tensor out({c}, std::vector<double>(rv.begin(), rv.end()));
  return g.record(std::move(out), {table},
                  [table, index, c](Graph &g, const Tensor &, auto og) {
                    auto gt = g.grad_sink(table);
                    for (std::size_t j = 0; j < c; ++j)
                      gt[index * c + j] += og[j];
                  });
}

Var softmax(Var v) {
  Graph &g = graph_of(v);
  require_vector("softmax", v.value());
  require_finite("softmax", v.value());
  Tensor out = v.value();
  const double mx = *std::max_element(out.values().begin(), out.values().end());
  double z = 0;
  for (auto &x : out.values()) {
    x = std::exp(x - mx);
    z += x;
  }
  for (auto &x : out.values())
    x /= z;
  return g.record(std::move(out), {v},
                  [v](Graph &g, const Tensor &out, auto og) {
                    auto gv = g.grad_sink(v);
                    double dot = 0;
                    for (std::size_t i = 0; i < og.size(); ++i)
                      dot += og[i] * out[i];
                    for (std::size_t i = 0; i < gv.size(); ++i)
                      gv[i] += out[i] * (og[i] - dot);
                  });
}

Var log_softmax(Var v) {
  Graph &g = graph_of(v);
  require_vector("log_softmax", v.value());
  require_finite("log_softmax", v.value());
  Tensor out = v.value();
  const double mx = *std::max_element(out.values().begin(), out.values().end());
  double z = 0;
  for (double x : out.values())
    z += std::exp(x - mx);
  const double lz = mx + std::log(z);
  for (auto &x : out.values())
    x -= lz;
  return g.record(std::move(out), {v},
                  [v](Graph &g, const Tensor &out, auto og) {
                    auto gv = g.grad_sink(v);
                    double total = 0;
                    for (double x : og)
                      total += x;
                    for (std::size_t i = 0; i < gv.size(); ++i)
                      gv[i] += og[i] - std::exp(out[i]) * total;
                  });
}

Var maxout(Var v) {
  Graph &g = graph_of(v);
  require_vector("maxout", v.value());
  const auto in = v.value().values();
  if (in.size() % 2 != 0)
    throw DimensionError("maxout: odd input length " +
                         shape_string(v.shape()));
  const std::size_t d = in.size() / 2;
  Tensor out({d});
  std::vector<std::size_t> winner(d);
  for (std::size_t j = 0; j < d; ++j) {
    const bool second = in[2 * j + 1] > in[2 * j];
    winner[j] = 2 * j + (second ? 1 : 0);
    out[j] = in[winner[j]];
  }
  return g.record(std::move(out), {v},
                  [v, winner](Graph &g, const Tensor &, auto og) {
                    auto gv = g.grad_sink(v);
                    for (std::size_t j = 0; j < winner.size(); ++j)
                      gv[winner[j]] += og[j];
                  });
}

Var pick(Var v, std::size_t i) {
  Graph &g = graph_of(v);
  if (i >= v.size())
    throw LookupError("pick: index " + std::to_string(i) + " outside " +
                      shape_string(v.shape()));
  return g.record(Tensor::scalar(v[i]), {v},
                  [v, i](Graph &g, const Tensor &, auto og) {
                    g.grad_sink(v)[i] += og[0];
                  });
}

Var sum(Var v) {
  Graph &g = graph_of(v);
  double s = 0;
  for (double x : v.value().values())
    s += x;
  return g.record(Tensor::scalar(s), {v},
                  [v](Graph &g, const Tensor &, auto og) {
                    auto gv = g.grad_sink(v);
                    for (auto &x : gv)
                      x += og[0];
                  });
}

Var dropout(Var v, double p, bool train, Rng *rng) {
  if (p < 0 || p >= 1)
    throw ContractError("dropout: p must lie in [0,1)");
  if (!train || p == 0)
    return v;
  if (!rng)
    throw ContractError("dropout: training mode needs a random source");
  Graph &g = graph_of(v);
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(v.size());
  for (auto &m : mask) {
    // 53-bit uniform in [0,1).
    const double u = static_cast<double>((*rng)() >> 11) * 0x1.0p-53;
    m = u >= p ? keep_scale : 0.0;
  }
  Tensor out = v.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= mask[i];
  return g.record(std::move(out), {v},
                  [v, mask = std::move(mask)](Graph &g, const Tensor &,
                                              auto og) {
                    auto gv = g.grad_sink(v);
                    for (std::size_t i = 0; i < gv.size(); ++i)
                      gv[i] += og[i] * mask[i];
                  });
}

} // namespace nqg::ops

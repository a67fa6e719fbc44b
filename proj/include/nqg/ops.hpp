// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "nqg/graph.hpp"

/// Differentiable primitives over Graph nodes. Shapes are explicit: there
/// is no implicit broadcasting apart from scale() and add_rows().
namespace nqg::ops {

/// (m x k)(k x n) -> (m x n), or (m x k)(k) -> (m).
Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
/// 1 - a, elementwise.
Var one_minus(Var a);
/// Adds vector v (length d) to every row of matrix m (n x d).
Var add_rows(Var m, Var v);

Var tanh(Var a);
Var sigmoid(Var a);
Var log(Var a);
/// log(sigmoid(a)), stable for large |a|.
Var log_sigmoid(Var a);
Var neg(Var a);

Var concat(const std::vector<Var> &parts);
/// Rank-1 inputs of equal length -> matrix with one input per row.
Var stack_rows(const std::vector<Var> &rows);
Var slice(Var v, std::size_t offset, std::size_t length);
/// Row `index` of a matrix, as a vector. Gradient scatters into that row.
Var row(Var table, std::size_t index);

Var softmax(Var v);
Var log_softmax(Var v);
/// Pairwise max over adjacent elements (0,1), (2,3), ...
Var maxout(Var v);

/// Element i as a scalar.
Var pick(Var v, std::size_t i);
Var sum(Var v);

/// Inverted dropout: survivors scaled by 1/(1-p) when `train`; identity
/// otherwise. Keep decisions come from `rng`.
Var dropout(Var v, double p, bool train, Rng *rng);

} // namespace nqg::ops

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace nqg {

using Shape = std::vector<std::size_t>;
using Rng = std::mt19937_64;

std::string shape_string(const Shape &shape);
std::size_t shape_size(const Shape &shape);

/**
 * Dense row-major array of doubles with an optional gradient slot.
 *
 * Rank-1 tensors play the role of column vectors; scalars are rank-1 of
 * extent 1. The gradient slot is empty until enable_grad() is called and then
 * always has the same extent as the values.
 */
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> values);
  static Tensor scalar(double value);
  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double &operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double &at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return values_[r * cols() + c];
  }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  bool has_grad() const { return grad_enabled_; }
  void enable_grad();
  void zero_grad();
  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }

  /// Value equality: shapes and stored numbers, gradient ignored.
  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
  bool grad_enabled_ = false;
};

/// Zero-mean Gaussian with variance 2/(fan_in+fan_out). For a matrix
/// [rows, cols] fan_in = cols and fan_out = rows; a vector [n] is treated
/// as a 1 x n row.
Tensor xavier_init(const Shape &shape, Rng &rng);
Tensor xavier_init(const Shape &shape, std::uint64_t seed);

/// Central difference (f(x+eps e_i) - f(x-eps e_i)) / 2eps for every
/// coordinate of x.
Tensor finite_difference_grad(const std::function<double(const Tensor &)> &f,
                              const Tensor &x, double eps = 1e-5);

// Binary block: magic "NQGTENSR", u32 rank, u64 extents, raw f64 values,
// all little-endian.
void write_tensor(std::ostream &out, const Tensor &t);
Tensor read_tensor(std::istream &in);

} // namespace nqg

// SPDX-License-Identifier: Apache-2.0
#include "nqg/tensor.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "nqg/error.hpp"

namespace nqg {

namespace {

constexpr std::array<char, 8> kTensorMagic = {'N', 'Q', 'G', 'T',
                                              'E', 'N', 'S', 'R'};

template <typename T> void write_le(std::ostream &out, T value) {
  static_assert(std::is_unsigned_v<T>);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffu);
  out.write(bytes.data(), bytes.size());
}

template <typename T> T read_le(std::istream &in) {
  static_assert(std::is_unsigned_v<T>);
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char *>(bytes.data()), bytes.size());
  if (!in)
    throw FormatError("tensor block truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(bytes[i]) << (8 * i);
  return value;
}

} // namespace

std::string shape_string(const Shape &shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::size_t shape_size(const Shape &shape) {
  std::size_t n = 1;
  for (auto e : shape)
    n *= e;
  return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  for (auto e : shape_)
    if (e == 0)
      throw DimensionError("tensor extents must be positive, got " +
                           shape_string(shape_));
  values_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  for (auto e : shape_)
    if (e == 0)
      throw DimensionError("tensor extents must be positive, got " +
                           shape_string(shape_));
  if (shape_size(shape_) != values_.size())
    throw DimensionError("shape " + shape_string(shape_) + " needs " +
                         std::to_string(shape_size(shape_)) + " values, got " +
                         std::to_string(values_.size()));
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

std::size_t Tensor::rows() const {
  if (rank() != 2)
    throw DimensionError("rows() on non-matrix " + shape_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2)
    throw DimensionError("cols() on non-matrix " + shape_string(shape_));
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
  const auto c = cols();
  return std::span<double>(values_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const auto c = cols();
  return std::span<const double>(values_).subspan(r * c, c);
}

void Tensor::enable_grad() {
  grad_enabled_ = true;
  grad_.assign(values_.size(), 0.0);
}

void Tensor::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

Tensor xavier_init(const Shape &shape, Rng &rng) {
  Tensor t(shape);
  double fan_in = 0, fan_out = 0;
  if (shape.size() == 1) {
    fan_in = static_cast<double>(shape[0]);
    fan_out = 1;
  } else {
    fan_out = static_cast<double>(shape[0]);
    fan_in = static_cast<double>(shape_size(shape) / shape[0]);
  }
  std::normal_distribution<double> dist(0.0,
                                        std::sqrt(2.0 / (fan_in + fan_out)));
  for (auto &v : t.values())
    v = dist(rng);
  return t;
}

Tensor xavier_init(const Shape &shape, std::uint64_t seed) {
  Rng rng(seed);
  return xavier_init(shape, rng);
}

Tensor finite_difference_grad(const std::function<double(const Tensor &)> &f,
                              const Tensor &x, double eps) {
  Tensor probe = x;
  Tensor grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2 * eps);
  }
  return grad;
}

void write_tensor(std::ostream &out, const Tensor &t) {
  out.write(kTensorMagic.data(), kTensorMagic.size());
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (auto e : t.shape())
    write_le<std::uint64_t>(out, e);
  for (double v : t.values())
    write_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out)
    throw IoError("failed writing tensor block");
}

Tensor read_tensor(std::istream &in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kTensorMagic)
    throw FormatError("bad tensor block magic");
  const auto rank = read_le<std::uint32_t>(in);
  if (rank == 0 || rank > 8)
    throw FormatError("bad tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto &e : shape)
    e = read_le<std::uint64_t>(in);
  const auto n = shape_size(shape);
  std::vector<double> values(n);
  for (auto &v : values)
    v = std::bit_cast<double>(read_le<std::uint64_t>(in));
  return Tensor(std::move(shape), std::move(values));
}

} // namespace nqg

// Copyright 2026 The attnalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "attnalign/errors.hpp"

namespace attnalign {

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major array of doubles.
///
/// Any rank is representable, but the differentiable operations work on
/// rank-2 arrays; a rank-1 array reads as a single row.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    for (auto d : shape_) {
      if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
    }
    data_.assign(element_count(shape_), fill);
  }

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0) : Tensor(Shape{rows, cols}, fill) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || element_count(shape_) != data_.size()) {
      throw ShapeError("shape " + shape_string(shape_) + " does not hold " + std::to_string(data_.size()) +
                       " elements");
    }
  }

  /// Builds a rank-2 tensor from nested rows, e.g. {{1, 0}, {0, 1}}.
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged rows in Tensor::from_rows");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(data));
  }

  static Tensor row_vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor(Shape{1, n}, std::move(values));
  }

  bool empty() const noexcept { return data_.empty(); }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t rows() const {
    if (rank() == 1) return 1;
    if (rank() == 2) return shape_[0];
    throw ShapeError("expected a matrix, got " + shape_string(shape_));
  }
  std::size_t cols() const {
    if (rank() == 1) return shape_[0];
    if (rank() == 2) return shape_[1];
    throw ShapeError("expected a matrix, got " + shape_string(shape_));
  }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }

  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols(), cols()); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Elementwise accumulate; shapes must match.
  Tensor& operator+=(const Tensor& o) {
    if (!same_shape(o)) {
      throw ShapeError("cannot add " + shape_string(o.shape_) + " into " + shape_string(shape_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  Tensor& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  double squared_norm() const {
    return std::inner_product(data_.begin(), data_.end(), data_.begin(), 0.0);
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  static std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  Shape shape_;
  std::vector<double> data_;
};

namespace detail {

using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline ConstRowMajorMap as_matrix(const Tensor& t) {
  return ConstRowMajorMap(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}
inline RowMajorMap as_matrix(Tensor& t) {
  return RowMajorMap(t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

}  // namespace detail

/// Plain matrix product, c = a * b.
inline Tensor matmul_values(const Tensor& a, const Tensor& b) {
  if (b.rows() != a.cols()) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Tensor c(a.rows(), b.cols());
  detail::as_matrix(c).noalias() = detail::as_matrix(a) * detail::as_matrix(b);
  return c;
}

/// c += a^T * b  (a: n x k, b: n x m, c: k x m)
inline void accumulate_at_b(const Tensor& a, const Tensor& b, Tensor& c) {
  detail::as_matrix(c).noalias() += detail::as_matrix(a).transpose() * detail::as_matrix(b);
}

/// c += a * b^T  (a: n x m, b: k x m, c: n x k)
inline void accumulate_a_bt(const Tensor& a, const Tensor& b, Tensor& c) {
  detail::as_matrix(c).noalias() += detail::as_matrix(a) * detail::as_matrix(b).transpose();
}

/// Numerically stable softmax over the positions where mask is true; masked
/// positions come out exactly zero.
inline std::vector<double> masked_softmax(std::span<const double> scores, const std::vector<bool>& mask) {
  if (scores.size() != mask.size()) {
    throw ShapeError("masked_softmax: " + std::to_string(scores.size()) + " scores but " +
                     std::to_string(mask.size()) + " mask entries");
  }
  double max_score = -INFINITY;
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i]) {
      any = true;
      max_score = std::max(max_score, scores[i]);
    }
  }
  if (!any) throw ContractError("masked_softmax: mask selects no position");
  std::vector<double> out(scores.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i]) {
      out[i] = std::exp(scores[i] - max_score);
      total += out[i];
    }
  }
  for (auto& v : out) v /= total;
  return out;
}

inline std::vector<double> softmax(std::span<const double> scores) {
  return masked_softmax(scores, std::vector<bool>(scores.size(), true));
}

}  // namespace attnalign

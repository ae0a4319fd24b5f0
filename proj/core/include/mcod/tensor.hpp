// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcod {

/// Dense row-major array of 64-bit floats with an optional gradient slot.
/// All math in the library runs in double precision.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double operator[](std::int64_t i) const { return values_[static_cast<std::size_t>(i)]; }
  double& operator[](std::int64_t i) { return values_[static_cast<std::size_t>(i)]; }

  /// 2-d accessors; the tensor must be rank 2.
  double at2(int row, int col) const {
    return values_[static_cast<std::size_t>(row) * shape_[1] + col];
  }
  double& at2(int row, int col) {
    return values_[static_cast<std::size_t>(row) * shape_[1] + col];
  }

  std::span<const double> row(int r) const {
    auto cols = static_cast<std::size_t>(shape_.back());
    return {values_.data() + static_cast<std::size_t>(r) * cols, cols};
  }

  bool all_finite() const;

  /// Gradient slot; present only after ensure_grad() (or a tape backward that
  /// targeted this tensor).
  bool has_grad() const { return grad_.has_value(); }
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  void ensure_grad();
  void clear_grad() { grad_.reset(); }

  std::string shape_str() const;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
  std::optional<std::vector<double>> grad_;
};

std::int64_t shape_size(const std::vector<int>& shape);

/// Numerically safe softmax of a vector (max-subtraction). Non-finite input
/// raises InvalidValueError.
std::vector<double> softmax(std::span<const double> v);

/// v / ||v||. Raises DegenerateVectorError when ||v|| <= 1e-12.
std::vector<double> l2_normalized(std::span<const double> v);

double l2_norm(std::span<const double> v);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> v);

}  // namespace mcod

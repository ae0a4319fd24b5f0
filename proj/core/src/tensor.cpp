// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcod/errors.hpp"

namespace mcod {

std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ContractError("tensor dimensions must be non-negative");
    n *= d;
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape)
    : shape_(std::move(shape)), values_(static_cast<std::size_t>(shape_size(shape_)), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != static_cast<std::int64_t>(values_.size())) {
    throw ContractError("tensor value count does not match shape " + shape_str());
  }
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

std::vector<double>& Tensor::grad() {
  if (!grad_) throw StateError("tensor has no gradient slot");
  return *grad_;
}

const std::vector<double>& Tensor::grad() const {
  if (!grad_) throw StateError("tensor has no gradient slot");
  return *grad_;
}

void Tensor::ensure_grad() {
  if (!grad_) grad_.emplace(values_.size(), 0.0);
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
  os << "]";
  return os.str();
}

std::vector<double> softmax(std::span<const double> v) {
  if (v.empty()) throw ContractError("softmax of empty vector");
  double hi = v[0];
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidValueError("softmax input is not finite");
    hi = std::max(hi, x);
  }
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - hi);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> l2_normalized(std::span<const double> v) {
  double n = l2_norm(v);
  if (!(n > 1e-12)) throw DegenerateVectorError("cannot normalize vector with norm <= 1e-12");
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

int argmax(std::span<const double> v) {
  if (v.empty()) throw ContractError("argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[static_cast<std::size_t>(i)] > v[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

}  // namespace mcod

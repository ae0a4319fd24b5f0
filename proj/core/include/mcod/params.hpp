// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mcod/tensor.hpp"

namespace mcod {

/// Ordered, named collection of trainable tensors for one encoder tower.
/// Iteration order is construction order and is the canonical order for
/// optimizer state and serialization.
class ParamSet {
 public:
  void add(std::string name, Tensor t);

  std::size_t size() const { return tensors_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  Tensor& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor& tensor(std::size_t i) const { return tensors_[i]; }

  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  /// True when both sets have identical names and shapes in the same order.
  bool same_architecture(const ParamSet& other) const;

  std::int64_t total_values() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

}  // namespace mcod

// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "mcod/encoder.hpp"
#include "mcod/tensor.hpp"

namespace mcod {

/// Immutable copy of the queue contents in insertion order.
struct QueueSnapshot {
  Tensor f;  // [size, d_f]
  Tensor z;  // [size, d_z]
  Tensor c;  // [size, K]

  int size() const { return f.rank() == 2 ? f.dim(0) : 0; }
};

/// Fixed-capacity FIFO of momentum-tower outputs (f, z, c). Supplies the
/// negatives for the instance contrastive loss and the population for memory
/// writing and support counting.
class ContrastQueue {
 public:
  ContrastQueue(int capacity, int feature_dim, int embedding_dim, int num_prototypes);

  /// Appends all rows of `batch`; evicts oldest entries beyond capacity.
  void enqueue(const BatchFeatures& batch);

  QueueSnapshot snapshot() const;

  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  std::uint64_t total_inserted() const { return total_inserted_; }

  int feature_dim() const { return feature_dim_; }
  int embedding_dim() const { return embedding_dim_; }
  int num_prototypes() const { return num_prototypes_; }

  /// Checkpoint restore: replaces contents with the rows of a snapshot.
  void restore(const QueueSnapshot& snap, std::uint64_t total_inserted);

 private:
  struct Entry {
    std::vector<double> f, z, c;
  };

  int capacity_;
  int feature_dim_, embedding_dim_, num_prototypes_;
  std::uint64_t total_inserted_ = 0;
  std::deque<Entry> entries_;
};

}  // namespace mcod

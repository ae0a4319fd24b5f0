// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/queue.hpp"

#include <algorithm>

#include "mcod/errors.hpp"

namespace mcod {

ContrastQueue::ContrastQueue(int capacity, int feature_dim, int embedding_dim, int num_prototypes)
    : capacity_(capacity),
      feature_dim_(feature_dim),
      embedding_dim_(embedding_dim),
      num_prototypes_(num_prototypes) {
  if (capacity < 1) throw ContractError("queue capacity must be >= 1");
  if (feature_dim < 1 || embedding_dim < 1 || num_prototypes < 1) {
    throw ContractError("queue dimensions must be >= 1");
  }
}

void ContrastQueue::enqueue(const BatchFeatures& batch) {
  const int n = batch.size();
  if (n == 0) return;
  if (batch.f.dim(1) != feature_dim_ || batch.z.dim(1) != embedding_dim_ ||
      batch.c.dim(1) != num_prototypes_) {
    throw ContractError("enqueue: batch dimensions do not match queue dimensions");
  }
  for (int i = 0; i < n; ++i) {
    Entry e;
    auto fr = batch.f.row(i);
    auto zr = batch.z.row(i);
    auto cr = batch.c.row(i);
    e.f.assign(fr.begin(), fr.end());
    e.z.assign(zr.begin(), zr.end());
    e.c.assign(cr.begin(), cr.end());
    entries_.push_back(std::move(e));
  }
  total_inserted_ += static_cast<std::uint64_t>(n);
  while (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

QueueSnapshot ContrastQueue::snapshot() const {
  const int n = size();
  QueueSnapshot s;
  s.f = Tensor({n, feature_dim_});
  s.z = Tensor({n, embedding_dim_});
  s.c = Tensor({n, num_prototypes_});
  for (int i = 0; i < n; ++i) {
    const Entry& e = entries_[static_cast<std::size_t>(i)];
    std::copy(e.f.begin(), e.f.end(), s.f.values().begin() + static_cast<std::size_t>(i) * feature_dim_);
    std::copy(e.z.begin(), e.z.end(), s.z.values().begin() + static_cast<std::size_t>(i) * embedding_dim_);
    std::copy(e.c.begin(), e.c.end(), s.c.values().begin() + static_cast<std::size_t>(i) * num_prototypes_);
  }
  return s;
}

void ContrastQueue::restore(const QueueSnapshot& snap, std::uint64_t total_inserted) {
  entries_.clear();
  const int n = snap.size();
  for (int i = 0; i < n; ++i) {
    Entry e;
    auto fr = snap.f.row(i);
    auto zr = snap.z.row(i);
    auto cr = snap.c.row(i);
    e.f.assign(fr.begin(), fr.end());
    e.z.assign(zr.begin(), zr.end());
    e.c.assign(cr.begin(), cr.end());
    entries_.push_back(std::move(e));
  }
  total_inserted_ = total_inserted;
}

}  // namespace mcod

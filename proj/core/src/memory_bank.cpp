// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/memory_bank.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "mcod/errors.hpp"

namespace mcod {

std::vector<std::int64_t> support_counts(const Tensor& c_queue) {
  if (c_queue.rank() != 2 || c_queue.dim(0) == 0) {
    throw StateError("support_counts: empty snapshot");
  }
  const int n = c_queue.dim(0), k = c_queue.dim(1);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(argmax(c_queue.row(i)))] += 1;
  return counts;
}

MemoryBank::MemoryBank(int num_prototypes, int feature_dim, std::uint64_t noise_seed,
                       bool literal_softmax)
    : num_prototypes_(num_prototypes),
      feature_dim_(feature_dim),
      literal_softmax_(literal_softmax),
      noise_rng_(noise_seed) {
  if (num_prototypes < 1 || feature_dim < 1) {
    throw ContractError("memory bank dimensions must be >= 1");
  }
}

void MemoryBank::check_initialized() const {
  if (!initialized_) throw StateError("memory bank has not been written yet");
}

void MemoryBank::check_relevancy(const Tensor& c) const {
  for (std::int64_t i = 0; i < c.size(); ++i) {
    if (!std::isfinite(c[i])) throw InvalidValueError("relevancy entries must be finite");
  }
}

const Tensor& MemoryBank::prototypes() const {
  check_initialized();
  return prototypes_;
}

void MemoryBank::write(const QueueSnapshot& snap) {
  const int n = snap.size();
  if (n == 0) throw StateError("memory write from an empty snapshot");
  if (snap.f.dim(1) != feature_dim_ || snap.c.dim(1) != num_prototypes_) {
    throw ContractError("memory write: snapshot dimensions do not match bank");
  }
  Tensor m({num_prototypes_, feature_dim_});
  std::vector<double> col(static_cast<std::size_t>(n));
  for (int j = 0; j < num_prototypes_; ++j) {
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = snap.c.at2(i, j);
    std::vector<double> w;
    if (literal_softmax_) {
      w = softmax(col);
    } else {
      const double total = std::accumulate(col.begin(), col.end(), 0.0);
      if (!(total > 1e-12)) {
        throw DegenerateVectorError("memory write: relevancy column " + std::to_string(j) +
                                    " sums to zero");
      }
      w = col;
      for (double& x : w) x /= total;
    }
    for (int i = 0; i < n; ++i) {
      const double wi = w[static_cast<std::size_t>(i)];
      for (int d = 0; d < feature_dim_; ++d) m.at2(j, d) += wi * snap.f.at2(i, d);
    }
  }
  prototypes_ = std::move(m);
  initialized_ = true;
}

void MemoryBank::forget(const std::vector<std::int64_t>& counts, int queue_size) {
  check_initialized();
  if (queue_size == 0) throw StateError("memory forget: queue size is zero");
  if (static_cast<int>(counts.size()) != num_prototypes_) {
    throw ContractError("memory forget: expected " + std::to_string(num_prototypes_) + " counts");
  }
  std::int64_t total = 0;
  for (std::int64_t c : counts) total += c;
  if (total != queue_size) {
    throw ContractError("memory forget: support counts sum to " + std::to_string(total) +
                        ", queue size is " + std::to_string(queue_size));
  }
  for (int j = 0; j < num_prototypes_; ++j) {
    const double sigma =
        1.0 - static_cast<double>(counts[static_cast<std::size_t>(j)]) / static_cast<double>(queue_size);
    if (sigma == 0.0) continue;  // fully supported slot stays bit-identical
    for (int d = 0; d < feature_dim_; ++d) prototypes_.at2(j, d) += sigma * noise_rng_.gaussian();
  }
  support_ = counts;
}

Tensor MemoryBank::read_soft(const Tensor& relevancy_row) const {
  check_initialized();
  if (relevancy_row.rank() != 1 || relevancy_row.dim(0) != num_prototypes_) {
    throw ContractError("read_soft: relevancy row must have K entries");
  }
  check_relevancy(relevancy_row);
  const std::vector<double> w = literal_softmax_ ? softmax(relevancy_row.values())
                                                 : relevancy_row.values();
  Tensor out({feature_dim_});
  for (int j = 0; j < num_prototypes_; ++j) {
    const double wj = w[static_cast<std::size_t>(j)];
    for (int d = 0; d < feature_dim_; ++d) out[d] += wj * prototypes_.at2(j, d);
  }
  return out;
}

Tensor MemoryBank::read_hard(const Tensor& relevancy_row) const {
  check_initialized();
  if (relevancy_row.rank() != 1 || relevancy_row.dim(0) != num_prototypes_) {
    throw ContractError("read_hard: relevancy row must have K entries");
  }
  check_relevancy(relevancy_row);
  const int j = argmax(relevancy_row.values());
  Tensor out({feature_dim_});
  for (int d = 0; d < feature_dim_; ++d) out[d] = prototypes_.at2(j, d);
  return out;
}

Tensor MemoryBank::read_soft_batch(const Tensor& c) const {
  check_initialized();
  if (c.rank() != 2 || c.dim(1) != num_prototypes_) {
    throw ContractError("read_soft_batch: expected [n,K] relevancy matrix");
  }
  const int n = c.dim(0);
  Tensor out({n, feature_dim_});
  for (int i = 0; i < n; ++i) {
    Tensor row({num_prototypes_}, {c.row(i).begin(), c.row(i).end()});
    Tensor r = read_soft(row);
    std::copy(r.values().begin(), r.values().end(),
              out.values().begin() + static_cast<std::size_t>(i) * feature_dim_);
  }
  return out;
}

Tensor MemoryBank::read_hard_batch(const Tensor& c) const {
  check_initialized();
  if (c.rank() != 2 || c.dim(1) != num_prototypes_) {
    throw ContractError("read_hard_batch: expected [n,K] relevancy matrix");
  }
  const int n = c.dim(0);
  Tensor out({n, feature_dim_});
  for (int i = 0; i < n; ++i) {
    Tensor row({num_prototypes_}, {c.row(i).begin(), c.row(i).end()});
    Tensor r = read_hard(row);
    std::copy(r.values().begin(), r.values().end(),
              out.values().begin() + static_cast<std::size_t>(i) * feature_dim_);
  }
  return out;
}

Var MemoryBank::read_soft_traced(Tape& tape, Var c) const {
  check_initialized();
  Var weights = literal_softmax_ ? tape.softmax_rows(c) : c;
  return tape.matmul(weights, tape.constant(prototypes_));
}

void MemoryBank::restore(Tensor prototypes, std::vector<std::int64_t> support,
                         std::uint64_t rng_state, bool initialized) {
  if (initialized) {
    if (prototypes.rank() != 2 || prototypes.dim(0) != num_prototypes_ ||
        prototypes.dim(1) != feature_dim_) {
      throw ContractError("memory restore: prototype shape mismatch");
    }
  }
  prototypes_ = std::move(prototypes);
  support_ = std::move(support);
  noise_rng_.set_state(rng_state);
  initialized_ = initialized;
}

}  // namespace mcod

// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mcod/queue.hpp"
#include "mcod/rng.hpp"
#include "mcod/tape.hpp"
#include "mcod/tensor.hpp"

namespace mcod {

/// Support counts: n_j = number of snapshot rows whose relevancy argmax is j
/// (ties resolve to the lowest index). Sums to the snapshot size.
std::vector<std::int64_t> support_counts(const Tensor& c_queue);

/// K prototype slots over feature space, updated by writing (convex
/// recombination of queue features), perturbed by forgetting (seeded Gaussian
/// noise scaled by 1 - n_j/N_Q), and queried by soft or hard reading.
///
/// Prototypes are plain buffers: no gradient ever reaches them. When
/// `literal_softmax` is set (the default) reading and writing re-apply a
/// softmax to the stored relevancy probabilities; with it cleared the
/// probabilities are used as weights directly (reading) and columns are
/// normalized by their sums (writing).
class MemoryBank {
 public:
  MemoryBank(int num_prototypes, int feature_dim, std::uint64_t noise_seed,
             bool literal_softmax = true);

  bool initialized() const { return initialized_; }
  int num_prototypes() const { return num_prototypes_; }
  int feature_dim() const { return feature_dim_; }
  bool literal_softmax() const { return literal_softmax_; }

  /// Prototype matrix M, [K, d_f]. StateError before the first write.
  const Tensor& prototypes() const;

  /// Support counts recorded by the last forget(); empty before then.
  const std::vector<std::int64_t>& support() const { return support_; }

  /// Recomputes every prototype from the snapshot: m_j is the weighted sum of
  /// queue features with weights normalized over the queue axis of relevancy
  /// column j. StateError on an empty snapshot.
  void write(const QueueSnapshot& snap);

  /// m_j += eta_j, eta_j ~ N(0, sigma_j^2) elementwise with
  /// sigma_j = 1 - n_j/queue_size. Draws come from the bank's seeded stream;
  /// sigma_j = 0 leaves the row bit-identical.
  void forget(const std::vector<std::int64_t>& counts, int queue_size);

  /// Soft read: weighted prototype combination for one relevancy row [K].
  Tensor read_soft(const Tensor& relevancy_row) const;
  /// Hard read: the argmax prototype (ties to the lowest index).
  Tensor read_hard(const Tensor& relevancy_row) const;

  /// Batched reads over C [n,K] -> [n,d_f].
  Tensor read_soft_batch(const Tensor& c) const;
  Tensor read_hard_batch(const Tensor& c) const;

  /// Soft read on a tape: gradients flow through the relevancy rows (and the
  /// features downstream), never into the prototypes.
  Var read_soft_traced(Tape& tape, Var c) const;

  std::uint64_t noise_rng_state() const { return noise_rng_.state(); }

  /// Checkpoint restore.
  void restore(Tensor prototypes, std::vector<std::int64_t> support, std::uint64_t rng_state,
               bool initialized);

 private:
  void check_initialized() const;
  void check_relevancy(const Tensor& c) const;

  int num_prototypes_;
  int feature_dim_;
  bool literal_softmax_;
  bool initialized_ = false;
  Tensor prototypes_;  // [K, d_f]
  std::vector<std::int64_t> support_;
  RngStream noise_rng_;
};

}  // namespace mcod

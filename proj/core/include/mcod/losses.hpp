// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mcod/tape.hpp"

namespace mcod {

/// Per-step loss values. `total` is always l_z + l_c + l_m + lambda * l_r.
struct LossReport {
  double l_z = 0.0;
  double l_c = 0.0;
  double l_m = 0.0;
  double l_r = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

/// Combines the components into a report; InvalidValueError on non-finite
/// inputs.
LossReport loss_total(double l_z, double l_c, double l_m, double l_r, double lambda);

/// Instance-level InfoNCE. For each row i of z_q the positive is row i of
/// z_k and the negative set is {z_k row i} plus every row of z_queue. All
/// rows must be unit-norm; z_queue may have zero rows (warm-up, empty queue).
/// Returns the batch-mean loss (scalar Var).
Var loss_instance_infonce(Tape& tape, Var z_q, Var z_k, Var z_queue, double tau_z);

/// Cluster-level InfoNCE over the K relevancy columns: column i of c_q pairs
/// with column i of c_k, both normalized; denominators run over all K columns
/// of c_k. Returns the column-mean loss.
Var loss_cluster_infonce(Tape& tape, Var c_q, Var c_k, double tau_c);

/// Column balance regularizer: (1/N) * sum_j (sum_i c_ij)^2. For probability
/// rows the minimum N/K is attained exactly when column sums are equal.
Var loss_regularizer(Tape& tape, Var c_q);

/// Feature consistency: (1/N) * sum_i ||f_hat_i - f_i||^2.
Var loss_memory(Tape& tape, Var f, Var f_hat);

/// Weighted sum on the tape: l_z + l_c + l_m + lambda * l_r. Pass an invalid
/// l_m Var to drop the memory term (warm-up phase).
Var loss_total_traced(Tape& tape, Var l_z, Var l_c, Var l_m, Var l_r, double lambda);

}  // namespace mcod

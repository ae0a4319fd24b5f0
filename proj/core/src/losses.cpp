// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/losses.hpp"

#include <cmath>
#include <string>

#include "mcod/errors.hpp"
#include "mcod/tensor.hpp"

namespace mcod {

namespace {

// Unit-norm contract check. The tolerance is deliberately loose (1e-3): it
// catches unnormalized inputs without rejecting finite-difference probes.
void check_unit_rows(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ContractError(std::string(what) + " must be a rank-2 matrix");
  for (int i = 0; i < t.dim(0); ++i) {
    const double n = l2_norm(t.row(i));
    if (std::abs(n - 1.0) > 1e-3) {
      throw ContractError(std::string(what) + ": row " + std::to_string(i) +
                          " has norm " + std::to_string(n) + ", expected 1");
    }
  }
}

void check_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) throw InvalidValueError(std::string(what) + " contains non-finite values");
}

}  // namespace

LossReport loss_total(double l_z, double l_c, double l_m, double l_r, double lambda) {
  for (double v : {l_z, l_c, l_m, l_r, lambda}) {
    if (!std::isfinite(v)) throw InvalidValueError("loss_total: non-finite component");
  }
  LossReport r;
  r.l_z = l_z;
  r.l_c = l_c;
  r.l_m = l_m;
  r.l_r = l_r;
  r.lambda = lambda;
  r.total = l_z + l_c + l_m + lambda * l_r;
  return r;
}

Var loss_instance_infonce(Tape& tape, Var z_q, Var z_k, Var z_queue, double tau_z) {
  if (!(tau_z > 0.0)) throw ContractError("loss_instance_infonce: tau_z must be positive");
  const Tensor& q = tape.value(z_q);
  const Tensor& k = tape.value(z_k);
  const Tensor& qu = tape.value(z_queue);
  check_finite(q, "z_q");
  check_finite(k, "z_k");
  check_unit_rows(q, "z_q");
  check_unit_rows(k, "z_k");
  if (!q.same_shape(k)) throw ContractError("loss_instance_infonce: z_q and z_k shapes differ");
  if (q.dim(0) < 1) throw ContractError("loss_instance_infonce: empty batch");
  const int n = q.dim(0);
  const int queue_rows = qu.rank() == 2 ? qu.dim(0) : 0;
  if (queue_rows > 0) {
    check_finite(qu, "z_queue");
    check_unit_rows(qu, "z_queue");
    if (qu.dim(1) != q.dim(1)) {
      throw ContractError("loss_instance_infonce: queue embedding dimension differs");
    }
  }

  Var pos = tape.rowwise_dot(z_q, z_k);                     // [n]
  Var logits = tape.reshape(pos, {n, 1});                   // positive first
  if (queue_rows > 0) {
    Var neg = tape.matmul(z_q, z_queue, false, true);       // [n, Q]
    logits = tape.concat_cols(logits, neg);
  }
  logits = tape.scale(logits, 1.0 / tau_z);
  Var lse = tape.logsumexp_rows(logits);                    // [n]
  Var per_sample = tape.sub(lse, tape.scale(pos, 1.0 / tau_z));
  return tape.scale(tape.sum(per_sample), 1.0 / n);
}

Var loss_cluster_infonce(Tape& tape, Var c_q, Var c_k, double tau_c) {
  if (!(tau_c > 0.0)) throw ContractError("loss_cluster_infonce: tau_c must be positive");
  const Tensor& q = tape.value(c_q);
  const Tensor& k = tape.value(c_k);
  check_finite(q, "c_q");
  check_finite(k, "c_k");
  if (q.rank() != 2 || !q.same_shape(k)) {
    throw ContractError("loss_cluster_infonce: c_q and c_k must be equal-shape matrices");
  }
  if (q.dim(0) < 1 || q.dim(1) < 1) throw ContractError("loss_cluster_infonce: empty input");
  const int num_clusters = q.dim(1);

  Var v_q = tape.l2_normalize_rows(tape.transpose(c_q));    // [K, n]
  Var v_k = tape.l2_normalize_rows(tape.transpose(c_k));
  Var sim = tape.scale(tape.matmul(v_q, v_k, false, true), 1.0 / tau_c);  // [K, K]
  Var pos = tape.diag(sim);
  Var per_cluster = tape.sub(tape.logsumexp_rows(sim), pos);
  return tape.scale(tape.sum(per_cluster), 1.0 / num_clusters);
}

Var loss_regularizer(Tape& tape, Var c_q) {
  const Tensor& c = tape.value(c_q);
  check_finite(c, "c_q");
  if (c.rank() != 2 || c.dim(0) < 1) throw ContractError("loss_regularizer: expected [n,K] matrix");
  const int n = c.dim(0);
  Var col_sums = tape.sum_cols(c_q);
  return tape.scale(tape.sum(tape.square(col_sums)), 1.0 / n);
}

Var loss_memory(Tape& tape, Var f, Var f_hat) {
  const Tensor& tf = tape.value(f);
  const Tensor& th = tape.value(f_hat);
  if (tf.rank() != 2 || !tf.same_shape(th)) {
    throw ContractError("loss_memory: f and f_hat must be equal-shape matrices");
  }
  check_finite(tf, "f");
  check_finite(th, "f_hat");
  const int n = tf.dim(0);
  Var diff = tape.sub(f_hat, f);
  return tape.scale(tape.sum(tape.square(diff)), 1.0 / n);
}

Var loss_total_traced(Tape& tape, Var l_z, Var l_c, Var l_m, Var l_r, double lambda) {
  Var total = tape.add(l_z, l_c);
  if (l_m.valid()) total = tape.add(total, l_m);
  return tape.add(total, tape.scale(l_r, lambda));
}

}  // namespace mcod

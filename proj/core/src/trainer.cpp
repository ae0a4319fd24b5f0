// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mcod/augment.hpp"
#include "mcod/errors.hpp"
#include "mcod/rng.hpp"

namespace mcod {

namespace {

// Stream tags keep the independent RNG consumers apart.
constexpr std::uint64_t kInitTag = 0x494e4954;     // tower weights
constexpr std::uint64_t kNoiseTag = 0x4e4f4953;    // forgetting noise
constexpr std::uint64_t kShuffleTag = 0x53485546;  // epoch shuffles
constexpr std::uint64_t kAugmentTag = 0x41554750;  // per-sample augment pairs

std::uint64_t tower_seed(const TrainConfig& cfg) {
  if (cfg.encoder.init_seed >= 0) return static_cast<std::uint64_t>(cfg.encoder.init_seed);
  return RngStream::mix(cfg.seed, kInitTag);
}

}  // namespace

TrainerState make_initial_state(const TrainConfig& config) {
  config.validate();
  Tower q = make_tower(config.encoder, tower_seed(config));
  Tower k = q;  // exact copy at step 0
  AdamState adam = AdamState::init(q.params, config.learning_rate, config.beta1, config.beta2,
                                   config.weight_decay, config.adam_eps);
  return TrainerState{
      .config = config,
      .q_tower = std::move(q),
      .k_tower = std::move(k),
      .adam = std::move(adam),
      .queue = ContrastQueue(config.queue_capacity, config.encoder.feature_dim,
                             config.encoder.embedding_dim, config.encoder.num_prototypes),
      .bank = MemoryBank(config.encoder.num_prototypes, config.encoder.feature_dim,
                         RngStream::mix(config.seed, kNoiseTag), config.literal_memory_softmax),
      .epoch = 0,
  };
}

LossReport train_step(TrainerState& state, const std::vector<Tensor>& dataset,
                      std::span<const int> batch_indices) {
  const TrainConfig& cfg = state.config;
  const int n = static_cast<int>(batch_indices.size());
  if (n == 0) throw ContractError("train_step: empty mini-batch");

  // Step 1: self-labeled pairs, one derived stream per (epoch, sample).
  std::vector<Tensor> xq, xk;
  xq.reserve(static_cast<std::size_t>(n));
  xk.reserve(static_cast<std::size_t>(n));
  for (int idx : batch_indices) {
    const std::uint64_t pair_seed = RngStream::mix(
        RngStream::mix(RngStream::mix(cfg.seed, kAugmentTag), static_cast<std::uint64_t>(state.epoch)),
        static_cast<std::uint64_t>(idx));
    auto [a, b] = make_pair(dataset[static_cast<std::size_t>(idx)], cfg.augment, pair_seed);
    xq.push_back(std::move(a));
    xk.push_back(std::move(b));
  }

  // Step 2: encode; only the query tower is traced.
  Tape tape;
  auto q_vars = lift_params(tape, state.q_tower.params);
  TracedBatch q = encode_traced(tape, cfg.encoder, q_vars, stack_images(xq));
  BatchFeatures k = encode(state.k_tower, stack_images(xk));
  k.validate();

  // Contrastive and regularizer losses use the queue as it was before this
  // batch is enqueued.
  QueueSnapshot pre = state.queue.snapshot();
  Var l_z = loss_instance_infonce(tape, q.z, tape.constant(k.z), tape.constant(pre.z), cfg.tau_z);
  Var l_c = loss_cluster_infonce(tape, q.c, tape.constant(k.c), cfg.tau_c);
  Var l_r = loss_regularizer(tape, q.c);

  // Step 3: enqueue the momentum outputs.
  state.queue.enqueue(k);

  // Steps 4-6: memory phase only.
  Var l_m{};
  double l_m_value = 0.0;
  if (state.in_memory_phase()) {
    const QueueSnapshot snap = state.queue.snapshot();
    if (!state.bank.initialized()) state.bank.write(snap);  // bank bootstrap
    Var f_hat = state.bank.read_soft_traced(tape, q.c);
    l_m = loss_memory(tape, q.f, f_hat);
    l_m_value = tape.value(l_m)[0];
    state.bank.write(snap);
    if (cfg.forgetting) state.bank.forget(support_counts(snap.c), snap.size());
  }

  LossReport report = loss_total(tape.value(l_z)[0], tape.value(l_c)[0], l_m_value,
                                 tape.value(l_r)[0], cfg.lambda);

  Var total = loss_total_traced(tape, l_z, l_c, l_m, l_r, cfg.lambda);
  tape.backward(total);

  std::vector<std::vector<double>> grads;
  grads.reserve(q_vars.size());
  for (Var v : q_vars) grads.push_back(tape.grad(v));
  adam_step(state.q_tower.params, grads, state.adam);
  momentum_update(state.k_tower.params, state.q_tower.params, cfg.momentum_alpha);
  return report;
}

EpochLossRow run_epoch(TrainerState& state, const std::vector<Tensor>& dataset,
                       const StepObserver& observer) {
  const TrainConfig& cfg = state.config;
  const auto n = static_cast<int>(dataset.size());
  if (n < cfg.batch_size) {
    throw ConfigError("dataset has " + std::to_string(n) + " samples, smaller than one batch of " +
                      std::to_string(cfg.batch_size));
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  RngStream shuffle = RngStream::derive(cfg.seed, {kShuffleTag, static_cast<std::uint64_t>(state.epoch)});
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(shuffle.uniform_int(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }

  const int steps = n / cfg.batch_size;  // last partial batch dropped
  EpochLossRow row;
  row.epoch = state.epoch;
  for (int s = 0; s < steps; ++s) {
    std::span<const int> batch(order.data() + static_cast<std::size_t>(s) * cfg.batch_size,
                               static_cast<std::size_t>(cfg.batch_size));
    const LossReport rep = train_step(state, dataset, batch);
    if (observer) observer(StepInfo{state.epoch, s, rep});
    row.l_z += rep.l_z;
    row.l_c += rep.l_c;
    row.l_m += rep.l_m;
    row.l_r += rep.l_r;
    row.total += rep.total;
  }
  row.l_z /= steps;
  row.l_c /= steps;
  row.l_m /= steps;
  row.l_r /= steps;
  row.total /= steps;
  state.epoch += 1;
  return row;
}

void train_until(TrainerState& state, const std::vector<Tensor>& dataset, int target_epoch,
                 std::vector<EpochLossRow>* log, const StepObserver& observer) {
  while (state.epoch < target_epoch) {
    EpochLossRow row = run_epoch(state, dataset, observer);
    if (log) log->push_back(row);
  }
}

TrainerState train(const TrainConfig& config, const std::vector<Tensor>& dataset,
                   std::vector<EpochLossRow>* log, const StepObserver& observer) {
  TrainerState state = make_initial_state(config);
  train_until(state, dataset, config.epochs_warmup + config.epochs_memory, log, observer);
  return state;
}

std::string loss_log_to_text(const std::vector<EpochLossRow>& rows) {
  std::ostringstream os;
  os << "epoch,l_z,l_c,l_m,l_r,total\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.l_z, r.l_c,
                  r.l_m, r.l_r, r.total);
    os << buf;
  }
  return os.str();
}

void write_loss_log(const std::vector<EpochLossRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write loss log: " + path);
  out << loss_log_to_text(rows);
  if (!out) throw IoError("failed writing loss log: " + path);
}

}  // namespace mcod

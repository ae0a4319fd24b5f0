// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mcod/adam.hpp"
#include "mcod/config.hpp"
#include "mcod/encoder.hpp"
#include "mcod/losses.hpp"
#include "mcod/memory_bank.hpp"
#include "mcod/queue.hpp"

namespace mcod {

/// Live training state: both towers, optimizer, queue, memory bank and the
/// completed-epoch counter. Built by make_initial_state or a checkpoint load.
struct TrainerState {
  TrainConfig config;
  Tower q_tower;
  Tower k_tower;
  AdamState adam;
  ContrastQueue queue;
  MemoryBank bank;
  int epoch = 0;

  bool in_memory_phase() const { return epoch >= config.epochs_warmup; }
};

struct StepInfo {
  int epoch = 0;
  int step = 0;
  LossReport losses;
};
using StepObserver = std::function<void(const StepInfo&)>;

struct EpochLossRow {
  int epoch = 0;
  double l_z = 0, l_c = 0, l_m = 0, l_r = 0, total = 0;
};

/// Fresh state: the momentum tower starts as an exact copy of the query
/// tower, the queue empty, the bank unwritten.
TrainerState make_initial_state(const TrainConfig& config);

/// One optimization step over the given samples of `dataset` (Steps 1-6):
/// augment pairs, encode, contrastive + regularizer losses against the
/// pre-enqueue queue, enqueue momentum outputs, then in the memory phase
/// read / consistency loss / write / forget, then backward, Adam on the query
/// tower and the momentum update. During warm-up the memory bank is untouched
/// and l_m is reported as zero.
LossReport train_step(TrainerState& state, const std::vector<Tensor>& dataset,
                      std::span<const int> batch_indices);

/// One shuffled epoch (seeded by the run seed and epoch number); the last
/// partial batch is dropped. Returns the epoch-mean losses and advances
/// state.epoch.
EpochLossRow run_epoch(TrainerState& state, const std::vector<Tensor>& dataset,
                       const StepObserver& observer = nullptr);

/// Runs epochs until state.epoch == target_epoch, appending one row per
/// epoch to `log` when given.
void train_until(TrainerState& state, const std::vector<Tensor>& dataset, int target_epoch,
                 std::vector<EpochLossRow>* log = nullptr, const StepObserver& observer = nullptr);

/// Full run: warm-up epochs then memory epochs.
TrainerState train(const TrainConfig& config, const std::vector<Tensor>& dataset,
                   std::vector<EpochLossRow>* log = nullptr, const StepObserver& observer = nullptr);

/// Loss log CSV: header `epoch,l_z,l_c,l_m,l_r,total`.
void write_loss_log(const std::vector<EpochLossRow>& rows, const std::string& path);
std::string loss_log_to_text(const std::vector<EpochLossRow>& rows);

}  // namespace mcod

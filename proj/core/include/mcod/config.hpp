// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "mcod/augment.hpp"
#include "mcod/dataset.hpp"
#include "mcod/encoder.hpp"

namespace mcod {

enum class ReadMode { soft, hard };

/// Full training recipe. Defaults follow the reference hyperparameters for
/// the simple-dataset setting.
struct TrainConfig {
  int epochs_warmup = 100;
  int epochs_memory = 100;
  int batch_size = 256;
  double tau_z = 1.0;
  double tau_c = 1.0;
  double lambda = 0.05;
  int queue_capacity = 4096;
  double momentum_alpha = 0.999;
  double learning_rate = 1e-4;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool literal_memory_softmax = true;
  bool forgetting = true;
  ReadMode inference_read = ReadMode::soft;
  EncoderConfig encoder;
  AugmentConfig augment;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Everything a run needs: the training recipe plus the dataset mixing
/// protocol. This is what config files describe and checkpoints echo.
struct RunConfig {
  TrainConfig train;
  MixSpec mix;

  bool operator==(const RunConfig&) const = default;
};

/// Plain sectioned key = value text ([train], [encoder], [augment], [mix];
/// '#' comments). Unknown keys are rejected. Round-trips exactly through
/// config_to_text / parse_config.
RunConfig parse_config(const std::string& text);
std::string config_to_text(const RunConfig& config);

RunConfig load_config_file(const std::string& path);
void save_config_file(const RunConfig& config, const std::string& path);

}  // namespace mcod

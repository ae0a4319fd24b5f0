// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "mcod/params.hpp"

namespace mcod {

/// Adam with L2 weight decay folded into the gradient (not decoupled):
/// g' = g + weight_decay * p, then the standard bias-corrected update.
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;
  std::int64_t step = 0;
  std::vector<std::vector<double>> m;  // first moments, aligned with the ParamSet
  std::vector<std::vector<double>> v;  // second moments

  static AdamState init(const ParamSet& params, double lr, double beta1, double beta2,
                        double weight_decay, double eps = 1e-8);
};

/// One optimizer step. `grads` must align with `params` (same order, same
/// lengths); raises ContractError otherwise.
void adam_step(ParamSet& params, const std::vector<std::vector<double>>& grads, AdamState& state);

}  // namespace mcod

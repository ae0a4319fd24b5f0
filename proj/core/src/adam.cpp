// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/adam.hpp"

#include <cmath>

#include "mcod/errors.hpp"

namespace mcod {

AdamState AdamState::init(const ParamSet& params, double lr, double beta1, double beta2,
                          double weight_decay, double eps) {
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.weight_decay = weight_decay;
  s.eps = eps;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m.emplace_back(params.tensor(i).values().size(), 0.0);
    s.v.emplace_back(params.tensor(i).values().size(), 0.0);
  }
  return s;
}

void adam_step(ParamSet& params, const std::vector<std::vector<double>>& grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw ContractError("adam_step: gradient/state count does not match parameter count");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& vals = params.tensor(p).values();
    const auto& g = grads[p];
    if (g.size() != vals.size()) {
      throw ContractError("adam_step: gradient shape mismatch for " + params.names()[p]);
    }
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double gd = g[i] + state.weight_decay * vals[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gd;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gd * gd;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      vals[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace mcod

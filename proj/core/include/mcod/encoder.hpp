// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mcod/params.hpp"
#include "mcod/tape.hpp"
#include "mcod/tensor.hpp"

namespace mcod {

/// Architecture of one tower: a stack of (3x3 conv, relu, 2x2 average pool)
/// blocks followed by a fully connected feature layer, a two-layer embedding
/// head, and a single-layer relevancy head.
struct EncoderConfig {
  int input_height = 28;
  int input_width = 28;
  int input_channels = 1;
  std::vector<int> conv_channels = {8, 16};
  int feature_dim = 256;    // d_f
  int embedding_dim = 128;  // d_z
  int num_prototypes = 10;  // K
  std::int64_t init_seed = -1;  // -1: derive from the run seed

  void validate() const;
  int flattened_dim() const;

  bool operator==(const EncoderConfig&) const = default;
};

/// One encoder tower: the config plus its parameters. Parameter names are
/// prefixed "encoder.", "embed." and "relevancy." so the three parts stay
/// addressable as one ParamSet.
struct Tower {
  EncoderConfig config;
  ParamSet params;
};

Tower make_tower(const EncoderConfig& config, std::uint64_t seed);

/// Per-batch outputs: features F [n,d_f], unit embeddings Z [n,d_z] and
/// relevancy rows C [n,K] (each row a probability vector).
struct BatchFeatures {
  Tensor f;
  Tensor z;
  Tensor c;

  int size() const { return f.rank() == 2 ? f.dim(0) : 0; }
  /// Checks the row invariants (unit Z rows, probability C rows) to 1e-10.
  void validate() const;
};

/// Traced batch outputs for building losses on a tape.
struct TracedBatch {
  Var f;
  Var z;
  Var c;
};

/// Tower parameters lifted onto a tape as differentiable leaves, in ParamSet
/// order. After backward() each parameter tensor carries its gradient.
std::vector<Var> lift_params(Tape& tape, ParamSet& params);

/// Forward pass on a tape. `images` is [n,h,w,c] with pixels in [0,1];
/// `param_vars` must come from lift_params on the same tower.
TracedBatch encode_traced(Tape& tape, const EncoderConfig& config, std::span<const Var> param_vars,
                          const Tensor& images);

/// Plain forward pass (no gradients recorded); used for the momentum tower
/// and at inference. Bit-identical to the traced pass.
BatchFeatures encode(const Tower& tower, const Tensor& images);

/// p_k := alpha * p_k + (1 - alpha) * p_q, elementwise over all parameters.
void momentum_update(ParamSet& theta_k, const ParamSet& theta_q, double alpha);

/// Stacks per-sample [h,w,c] tensors into one [n,h,w,c] batch.
Tensor stack_images(std::span<const Tensor> images);

}  // namespace mcod

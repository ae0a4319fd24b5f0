// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <utility>

#include "mcod/rng.hpp"
#include "mcod/tensor.hpp"

namespace mcod {

/// Stochastic transform parameters. Flip and blur are applied with a
/// probability; rotation, crop and contrast are always applied with a
/// magnitude sampled from their range, so an identity range disables them.
struct AugmentConfig {
  double flip_prob = 0.5;
  double rotation_min_deg = -15.0;
  double rotation_max_deg = 15.0;
  double crop_scale_min = 0.8;
  double crop_scale_max = 1.0;
  double contrast_min = 0.6;
  double contrast_max = 1.4;
  double blur_prob = 0.5;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 1.0;

  /// All transforms off: bitwise identity.
  static AugmentConfig identity();

  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

/// Applies flip, rotation, crop-and-resize, contrast and blur in that fixed
/// order, each sampled from `stream`. Output has the input's shape and pixel
/// values clamped to [0,1]. Exactly eight draws are consumed regardless of
/// which transforms fire.
Tensor augment(const Tensor& image, const AugmentConfig& cfg, RngStream& stream);

/// Two independent augmentations of one sample from disjoint sub-streams of
/// `pair_seed` (the self-labeled pair).
std::pair<Tensor, Tensor> make_pair(const Tensor& image, const AugmentConfig& cfg,
                                    std::uint64_t pair_seed);

}  // namespace mcod

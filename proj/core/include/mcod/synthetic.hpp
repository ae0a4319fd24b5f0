// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "mcod/dataset.hpp"

namespace mcod {

/// Two visually distinct pattern families for desk-scale experiments:
/// class 0 = soft Gaussian blobs, class 1 = sinusoidal stripe textures.
LabeledImageSet make_two_pattern_set(int num_blobs, int num_stripes, int size, std::uint64_t seed);

}  // namespace mcod

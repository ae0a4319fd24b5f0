// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "mcod/trainer.hpp"

namespace mcod {

/// A restored checkpoint: the full training state plus the mixing protocol it
/// was produced under.
struct LoadedCheckpoint {
  TrainerState state;
  MixSpec mix;
};

/// Single binary file: magic, format version, typed length-prefixed named
/// entries (float64 / uint64 / bytes, little-endian), trailing CRC32. The
/// round trip is lossless: parameters, optimizer moments, queue contents,
/// memory prototypes and RNG state restore bit-exact.
void save_checkpoint(const TrainerState& state, const MixSpec& mix, const std::string& path);

/// CompatibilityError on a version mismatch; FormatError on corruption or
/// truncation (no partial state is returned); IoError when unreadable.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace mcod

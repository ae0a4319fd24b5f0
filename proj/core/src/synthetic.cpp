// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcod/errors.hpp"
#include "mcod/rng.hpp"

namespace mcod {

namespace {

Tensor blob_image(int size, RngStream& rng) {
  const double cy = rng.uniform(size * 0.3, size * 0.7);
  const double cx = rng.uniform(size * 0.3, size * 0.7);
  const double sigma = rng.uniform(size * 0.10, size * 0.20);
  const double amp = rng.uniform(0.7, 1.0);
  Tensor img({size, size, 1});
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
      img[static_cast<std::size_t>(y) * size + x] = amp * std::exp(-r2 / (2.0 * sigma * sigma));
    }
  }
  return img;
}

Tensor stripe_image(int size, RngStream& rng) {
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double freq = rng.uniform(2.0, 4.5);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double dy = std::sin(theta), dx = std::cos(theta);
  Tensor img({size, size, 1});
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double t = (y * dy + x * dx) * 2.0 * std::numbers::pi * freq / size + phase;
      img[static_cast<std::size_t>(y) * size + x] = 0.5 + 0.5 * std::sin(t);
    }
  }
  return img;
}

}  // namespace

LabeledImageSet make_two_pattern_set(int num_blobs, int num_stripes, int size, std::uint64_t seed) {
  if (num_blobs < 0 || num_stripes < 0 || size < 1) {
    throw ContractError("make_two_pattern_set: invalid counts or size");
  }
  LabeledImageSet set;
  set.height = size;
  set.width = size;
  set.channels = 1;
  set.provenance = "synthetic-two-pattern";
  RngStream rng = RngStream::derive(seed, {0x53594eu});
  for (int i = 0; i < num_blobs; ++i) {
    set.images.push_back(blob_image(size, rng));
    set.labels.push_back(0);
  }
  for (int i = 0; i < num_stripes; ++i) {
    set.images.push_back(stripe_image(size, rng));
    set.labels.push_back(1);
  }
  return set;
}

}  // namespace mcod

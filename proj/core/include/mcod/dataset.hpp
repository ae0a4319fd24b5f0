// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcod/tensor.hpp"

namespace mcod {

/// Images with class labels. Pixels are [h,w,c] doubles in [0,1].
struct LabeledImageSet {
  std::vector<Tensor> images;
  std::vector<int> labels;
  std::string provenance;
  int height = 0, width = 0, channels = 1;

  std::size_t size() const { return images.size(); }
};

/// Inlier/outlier mixing parameters. The outlier count is
/// round(n_in * p / (1 - p)), which makes p the outlier fraction of the
/// final mixture.
struct MixSpec {
  int inlier_class = 0;
  double outlier_proportion = 0.1;  // p
  std::uint64_t seed = 0;
  int inlier_cap = 0;  // 0: use every inlier

  void validate() const;
  bool operator==(const MixSpec&) const = default;
};

/// A mixture with evaluation-only ground truth. Training code receives
/// `images` alone; the flags and ids never reach the trainer.
struct MixedDataset {
  std::vector<Tensor> images;
  std::vector<int> sample_ids;         // indices into the source set
  std::vector<std::uint8_t> is_outlier;  // evaluation only

  std::size_t size() const { return images.size(); }
};

/// Reads an IDX image/label file pair (the MNIST distribution format):
/// big-endian magic 2051/2049, dimension fields, then raw bytes. Pixels are
/// scaled to [0,1]. FormatError on bad magic or count mismatch, IoError on
/// missing or truncated files.
LabeledImageSet load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes a set back out as an IDX pair (bytes are round(v*255)).
void save_idx(const LabeledImageSet& set, const std::string& images_path,
              const std::string& labels_path);

MixedDataset mix_dataset(const LabeledImageSet& full, const MixSpec& spec);

}  // namespace mcod

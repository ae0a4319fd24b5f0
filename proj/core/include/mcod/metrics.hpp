// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "mcod/config.hpp"
#include "mcod/encoder.hpp"
#include "mcod/memory_bank.hpp"

namespace mcod {

/// One scored sample; higher score = more outlier-like. The label is ground
/// truth carried for evaluation only.
struct ScoreRecord {
  int id = 0;
  double score = 0.0;
  bool is_outlier = false;
};

struct MetricsReport {
  double auroc = 0.0;
  double aupr_in = 0.0;
  double aupr_out = 0.0;
  int num_inliers = 0;
  int num_outliers = 0;
};

/// Squared distance between each sample's feature and its read prototype.
/// No augmentation is applied; the memory bank must be initialized.
std::vector<ScoreRecord> score_images(const Tower& q_tower, const MemoryBank& bank, ReadMode mode,
                                      const std::vector<Tensor>& images,
                                      const std::vector<int>& ids,
                                      const std::vector<std::uint8_t>& is_outlier);

/// Query-tower features [n, d_f] for export; same batching as score_images.
Tensor extract_features(const Tower& q_tower, const std::vector<Tensor>& images);

/// Probability that a random outlier outscores a random inlier, ties counted
/// half (exact rank-sum form). UndefinedMetricError unless both classes are
/// present.
double auroc(const std::vector<ScoreRecord>& records);

enum class PositiveClass { outlier, inlier };

/// Average precision. positive=outlier ranks by descending score,
/// positive=inlier by ascending score (low score = inlier-like); ties break
/// deterministically by sample id. UndefinedMetricError with no positives.
double aupr(const std::vector<ScoreRecord>& records, PositiveClass positive);

MetricsReport compute_metrics(const std::vector<ScoreRecord>& records);

/// 100-bin per-class histogram of similarities
/// s_i = 1 - (score_i - min) / (max - min + eps) over [0,1].
struct SimilarityHistogram {
  std::array<std::int64_t, 100> inliers{};
  std::array<std::int64_t, 100> outliers{};
};

SimilarityHistogram similarity_histogram(const std::vector<ScoreRecord>& records);

/// Score CSV: header `id,score,label`, label in {inlier, outlier}.
void write_scores_csv(const std::vector<ScoreRecord>& records, const std::string& path);
std::vector<ScoreRecord> read_scores_csv(const std::string& path);

void write_histogram_csv(const SimilarityHistogram& hist, const std::string& path);

}  // namespace mcod

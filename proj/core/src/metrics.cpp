// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mcod/errors.hpp"

namespace mcod {

namespace {

constexpr int kScoreBatch = 256;

}  // namespace

std::vector<ScoreRecord> score_images(const Tower& q_tower, const MemoryBank& bank, ReadMode mode,
                                      const std::vector<Tensor>& images,
                                      const std::vector<int>& ids,
                                      const std::vector<std::uint8_t>& is_outlier) {
  if (!bank.initialized()) throw StateError("scoring requires an initialized memory bank");
  if (images.size() != ids.size() || images.size() != is_outlier.size()) {
    throw ContractError("score_images: images, ids and labels must align");
  }
  std::vector<ScoreRecord> out;
  out.reserve(images.size());
  const auto n = static_cast<int>(images.size());
  for (int start = 0; start < n; start += kScoreBatch) {
    const int stop = std::min(n, start + kScoreBatch);
    std::vector<Tensor> batch(images.begin() + start, images.begin() + stop);
    const BatchFeatures feats = encode(q_tower, stack_images(batch));
    const Tensor read = mode == ReadMode::soft ? bank.read_soft_batch(feats.c)
                                               : bank.read_hard_batch(feats.c);
    for (int i = 0; i < stop - start; ++i) {
      double dist = 0.0;
      for (int d = 0; d < feats.f.dim(1); ++d) {
        const double diff = feats.f.at2(i, d) - read.at2(i, d);
        dist += diff * diff;
      }
      out.push_back(ScoreRecord{ids[static_cast<std::size_t>(start + i)], dist,
                                is_outlier[static_cast<std::size_t>(start + i)] != 0});
    }
  }
  return out;
}

Tensor extract_features(const Tower& q_tower, const std::vector<Tensor>& images) {
  const auto n = static_cast<int>(images.size());
  if (n == 0) throw ContractError("extract_features: no images");
  Tensor out({n, q_tower.config.feature_dim});
  for (int start = 0; start < n; start += kScoreBatch) {
    const int stop = std::min(n, start + kScoreBatch);
    std::vector<Tensor> batch(images.begin() + start, images.begin() + stop);
    const BatchFeatures feats = encode(q_tower, stack_images(batch));
    std::copy(feats.f.values().begin(), feats.f.values().end(),
              out.values().begin() + static_cast<std::size_t>(start) * q_tower.config.feature_dim);
  }
  return out;
}

double auroc(const std::vector<ScoreRecord>& records) {
  std::int64_t pos = 0, neg = 0;
  for (const auto& r : records) (r.is_outlier ? pos : neg) += 1;
  if (pos == 0 || neg == 0) {
    throw UndefinedMetricError("auroc needs at least one inlier and one outlier");
  }
  std::vector<int> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return records[static_cast<std::size_t>(a)].score < records[static_cast<std::size_t>(b)].score;
  });
  // average ranks over tie groups, then the rank-sum statistic
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           records[static_cast<std::size_t>(order[j + 1])].score ==
               records[static_cast<std::size_t>(order[i])].score) {
      ++j;
    }
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (records[static_cast<std::size_t>(order[t])].is_outlier) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double aupr(const std::vector<ScoreRecord>& records, PositiveClass positive) {
  const bool out_pos = positive == PositiveClass::outlier;
  std::int64_t num_pos = 0;
  for (const auto& r : records) {
    if (r.is_outlier == out_pos) ++num_pos;
  }
  if (num_pos == 0) throw UndefinedMetricError("aupr needs at least one positive sample");
  std::vector<int> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ra = records[static_cast<std::size_t>(a)];
    const auto& rb = records[static_cast<std::size_t>(b)];
    if (ra.score != rb.score) return out_pos ? ra.score > rb.score : ra.score < rb.score;
    return ra.id < rb.id;
  });
  double ap = 0.0;
  std::int64_t seen_pos = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& r = records[static_cast<std::size_t>(order[rank])];
    if (r.is_outlier == out_pos) {
      ++seen_pos;
      ap += static_cast<double>(seen_pos) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(num_pos);
}

MetricsReport compute_metrics(const std::vector<ScoreRecord>& records) {
  MetricsReport rep;
  for (const auto& r : records) (r.is_outlier ? rep.num_outliers : rep.num_inliers) += 1;
  rep.auroc = auroc(records);
  rep.aupr_out = aupr(records, PositiveClass::outlier);
  rep.aupr_in = aupr(records, PositiveClass::inlier);
  return rep;
}

SimilarityHistogram similarity_histogram(const std::vector<ScoreRecord>& records) {
  if (records.size() < 2) throw ContractError("similarity_histogram needs at least two records");
  double lo = records[0].score, hi = records[0].score;
  for (const auto& r : records) {
    if (!std::isfinite(r.score)) throw InvalidValueError("similarity_histogram: non-finite score");
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  SimilarityHistogram hist;
  const double span = hi - lo + 1e-12;
  for (const auto& r : records) {
    const double s = 1.0 - (r.score - lo) / span;
    int bin = static_cast<int>(s * 100.0);
    bin = std::clamp(bin, 0, 99);
    (r.is_outlier ? hist.outliers : hist.inliers)[static_cast<std::size_t>(bin)] += 1;
  }
  return hist;
}

void write_scores_csv(const std::vector<ScoreRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write scores: " + path);
  out << "id,score,label\n";
  char buf[96];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%s\n", r.id, r.score, r.is_outlier ? "outlier" : "inlier");
    out << buf;
  }
  if (!out) throw IoError("failed writing scores: " + path);
}

std::vector<ScoreRecord> read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores: " + path);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty score file: " + path);
  if (line != "id,score,label" && line != "id,score,label\r") {
    throw FormatError("bad score CSV header in " + path + ": '" + line + "'");
  }
  std::vector<ScoreRecord> records;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id_s, score_s, label_s;
    if (!std::getline(ss, id_s, ',') || !std::getline(ss, score_s, ',') || !std::getline(ss, label_s)) {
      throw FormatError("bad score CSV row at line " + std::to_string(lineno) + " in " + path);
    }
    ScoreRecord r;
    try {
      r.id = std::stoi(id_s);
      r.score = std::stod(score_s);
    } catch (const std::exception&) {
      throw FormatError("bad score CSV value at line " + std::to_string(lineno) + " in " + path);
    }
    if (label_s == "outlier") r.is_outlier = true;
    else if (label_s == "inlier") r.is_outlier = false;
    else throw FormatError("bad label '" + label_s + "' at line " + std::to_string(lineno) + " in " + path);
    records.push_back(r);
  }
  return records;
}

void write_histogram_csv(const SimilarityHistogram& hist, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write histogram: " + path);
  out << "bin,lo,hi,inliers,outliers\n";
  char buf[96];
  for (int b = 0; b < 100; ++b) {
    std::snprintf(buf, sizeof buf, "%d,%.2f,%.2f,%lld,%lld\n", b, b / 100.0, (b + 1) / 100.0,
                  static_cast<long long>(hist.inliers[static_cast<std::size_t>(b)]),
                  static_cast<long long>(hist.outliers[static_cast<std::size_t>(b)]));
    out << buf;
  }
  if (!out) throw IoError("failed writing histogram: " + path);
}

}  // namespace mcod

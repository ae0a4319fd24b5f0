// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mcod/errors.hpp"
#include "mcod/rng.hpp"

namespace mcod {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t read_u32_be(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError("truncated IDX file: " + path);
  return (static_cast<std::uint32_t>(b[0]) << 24) | (static_cast<std::uint32_t>(b[1]) << 16) |
         (static_cast<std::uint32_t>(b[2]) << 8) | static_cast<std::uint32_t>(b[3]);
}

void write_u32_be(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

void MixSpec::validate() const {
  if (!(outlier_proportion >= 0.0 && outlier_proportion <= 0.5)) {
    throw ConfigError("mix: outlier proportion must lie in [0, 0.5]");
  }
  if (inlier_cap < 0) throw ConfigError("mix: inlier cap must be >= 0");
}

LabeledImageSet load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot open IDX image file: " + images_path);
  const std::uint32_t magic = read_u32_be(img, images_path);
  if (magic != kImageMagic) {
    throw FormatError("bad IDX image magic in " + images_path + ": got " + std::to_string(magic) +
                      ", expected " + std::to_string(kImageMagic));
  }
  const std::uint32_t count = read_u32_be(img, images_path);
  const std::uint32_t rows = read_u32_be(img, images_path);
  const std::uint32_t cols = read_u32_be(img, images_path);
  if (rows == 0 || cols == 0) throw FormatError("zero image dimensions in " + images_path);
  std::vector<unsigned char> pixels(static_cast<std::size_t>(count) * rows * cols);
  if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()))) {
    throw IoError("truncated IDX file: " + images_path);
  }

  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot open IDX label file: " + labels_path);
  const std::uint32_t lmagic = read_u32_be(lab, labels_path);
  if (lmagic != kLabelMagic) {
    throw FormatError("bad IDX label magic in " + labels_path + ": got " + std::to_string(lmagic) +
                      ", expected " + std::to_string(kLabelMagic));
  }
  const std::uint32_t lcount = read_u32_be(lab, labels_path);
  if (lcount != count) {
    throw FormatError("IDX image/label count mismatch: " + std::to_string(count) + " images vs " +
                      std::to_string(lcount) + " labels");
  }
  std::vector<unsigned char> labels(lcount);
  if (!lab.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(labels.size()))) {
    throw IoError("truncated IDX file: " + labels_path);
  }

  LabeledImageSet set;
  set.height = static_cast<int>(rows);
  set.width = static_cast<int>(cols);
  set.channels = 1;
  set.provenance = images_path;
  set.images.reserve(count);
  set.labels.reserve(count);
  const std::size_t per = static_cast<std::size_t>(rows) * cols;
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t({set.height, set.width, 1});
    for (std::size_t p = 0; p < per; ++p) {
      t[static_cast<std::int64_t>(p)] = static_cast<double>(pixels[i * per + p]) / 255.0;
    }
    set.images.push_back(std::move(t));
    set.labels.push_back(static_cast<int>(labels[i]));
  }
  return set;
}

void save_idx(const LabeledImageSet& set, const std::string& images_path,
              const std::string& labels_path) {
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw IoError("cannot write IDX image file: " + images_path);
  write_u32_be(img, kImageMagic);
  write_u32_be(img, static_cast<std::uint32_t>(set.size()));
  write_u32_be(img, static_cast<std::uint32_t>(set.height));
  write_u32_be(img, static_cast<std::uint32_t>(set.width));
  for (const Tensor& t : set.images) {
    for (std::int64_t i = 0; i < t.size(); ++i) {
      const auto b = static_cast<unsigned char>(std::lround(std::clamp(t[i], 0.0, 1.0) * 255.0));
      img.put(static_cast<char>(b));
    }
  }
  if (!img) throw IoError("failed writing " + images_path);

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw IoError("cannot write IDX label file: " + labels_path);
  write_u32_be(lab, kLabelMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(set.size()));
  for (int l : set.labels) lab.put(static_cast<char>(static_cast<unsigned char>(l)));
  if (!lab) throw IoError("failed writing " + labels_path);
}

MixedDataset mix_dataset(const LabeledImageSet& full, const MixSpec& spec) {
  spec.validate();
  std::vector<int> inlier_idx, outlier_pool;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (full.labels[i] == spec.inlier_class) {
      inlier_idx.push_back(static_cast<int>(i));
    } else {
      outlier_pool.push_back(static_cast<int>(i));
    }
  }
  if (inlier_idx.empty()) {
    throw ConfigError("mix: no samples of inlier class " + std::to_string(spec.inlier_class));
  }
  if (spec.inlier_cap > 0 && static_cast<int>(inlier_idx.size()) > spec.inlier_cap) {
    inlier_idx.resize(static_cast<std::size_t>(spec.inlier_cap));
  }
  const auto n_in = static_cast<std::int64_t>(inlier_idx.size());
  const double p = spec.outlier_proportion;
  const auto n_out = p == 0.0 ? 0 : static_cast<std::int64_t>(std::llround(n_in * p / (1.0 - p)));
  if (n_out > static_cast<std::int64_t>(outlier_pool.size())) {
    throw ConfigError("mix: outlier pool has " + std::to_string(outlier_pool.size()) +
                      " samples, need " + std::to_string(n_out));
  }

  RngStream rng = RngStream::derive(spec.seed, {0x4d49u});  // mixing stream
  // partial Fisher-Yates: the first n_out entries become the outlier draw
  for (std::int64_t i = 0; i < n_out; ++i) {
    const auto j = i + rng.uniform_int(static_cast<std::int64_t>(outlier_pool.size()) - i);
    std::swap(outlier_pool[static_cast<std::size_t>(i)], outlier_pool[static_cast<std::size_t>(j)]);
  }

  std::vector<std::pair<int, std::uint8_t>> entries;
  entries.reserve(static_cast<std::size_t>(n_in + n_out));
  for (int i : inlier_idx) entries.emplace_back(i, 0);
  for (std::int64_t i = 0; i < n_out; ++i) entries.emplace_back(outlier_pool[static_cast<std::size_t>(i)], 1);
  for (std::size_t i = entries.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i)));
    std::swap(entries[i - 1], entries[j]);
  }

  MixedDataset out;
  out.images.reserve(entries.size());
  out.sample_ids.reserve(entries.size());
  out.is_outlier.reserve(entries.size());
  for (const auto& [idx, flag] : entries) {
    out.images.push_back(full.images[static_cast<std::size_t>(idx)]);
    out.sample_ids.push_back(idx);
    out.is_outlier.push_back(flag);
  }
  return out;
}

}  // namespace mcod

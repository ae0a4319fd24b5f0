// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mcod/dataset.hpp"
#include "mcod/errors.hpp"
#include "mcod/synthetic.hpp"
#include "test_util.hpp"

using namespace mcod;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mcod_test_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void put_be(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

// hand-built 4-image 2x2 fixture
void write_fixture(const std::string& img_path, const std::string& lab_path,
                   std::uint32_t img_magic = 2051, std::uint32_t lab_magic = 2049,
                   std::uint32_t lab_count = 4, bool truncate_images = false) {
  std::ofstream img(img_path, std::ios::binary);
  put_be(img, img_magic);
  put_be(img, 4);  // count
  put_be(img, 2);  // rows
  put_be(img, 2);  // cols
  const unsigned char pixels[16] = {0, 51, 102, 153, 204, 255, 0, 255,
                                    128, 64, 32, 16, 8, 4, 2, 1};
  img.write(reinterpret_cast<const char*>(pixels), truncate_images ? 10 : 16);
  img.close();
  std::ofstream lab(lab_path, std::ios::binary);
  put_be(lab, lab_magic);
  put_be(lab, lab_count);
  const unsigned char labels[4] = {0, 1, 0, 2};
  lab.write(reinterpret_cast<const char*>(labels), 4);
}

}  // namespace

TEST_CASE("load_idx reads a hand-built fixture") {
  TempDir dir;
  write_fixture(dir.file("imgs"), dir.file("labs"));
  const LabeledImageSet set = load_idx(dir.file("imgs"), dir.file("labs"));
  CHECK(set.size() == 4);
  CHECK(set.height == 2);
  CHECK(set.width == 2);
  CHECK(set.labels == std::vector<int>{0, 1, 0, 2});
  CHECK(set.images[0][0] == doctest::Approx(0.0));
  CHECK(set.images[0][1] == doctest::Approx(51.0 / 255.0).epsilon(1e-12));
  CHECK(set.images[1][1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("load_idx names a wrong magic number") {
  TempDir dir;
  write_fixture(dir.file("imgs"), dir.file("labs"), /*img_magic=*/2049);
  try {
    load_idx(dir.file("imgs"), dir.file("labs"));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("2049") != std::string::npos);
    CHECK(std::string(e.what()).find("2051") != std::string::npos);
  }
}

TEST_CASE("load_idx detects count mismatch and truncation") {
  TempDir dir;
  write_fixture(dir.file("imgs"), dir.file("labs"), 2051, 2049, /*lab_count=*/5);
  CHECK_THROWS_AS(load_idx(dir.file("imgs"), dir.file("labs")), FormatError);
  write_fixture(dir.file("imgs2"), dir.file("labs2"), 2051, 2049, 4, /*truncate_images=*/true);
  CHECK_THROWS_AS(load_idx(dir.file("imgs2"), dir.file("labs2")), IoError);
  CHECK_THROWS_AS(load_idx(dir.file("missing"), dir.file("labs")), IoError);
}

TEST_CASE("save_idx / load_idx round trip") {
  TempDir dir;
  LabeledImageSet set = make_two_pattern_set(3, 2, 8, 7);
  save_idx(set, dir.file("imgs"), dir.file("labs"));
  const LabeledImageSet back = load_idx(dir.file("imgs"), dir.file("labs"));
  CHECK(back.size() == set.size());
  CHECK(back.labels == set.labels);
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::int64_t p = 0; p < set.images[i].size(); ++p)
      CHECK(std::abs(back.images[i][p] - set.images[i][p]) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("mix_dataset: 900 inliers at p = 0.1 yields 100 outliers") {
  const LabeledImageSet set = make_two_pattern_set(1200, 400, 8, 3);
  MixSpec spec;
  spec.inlier_class = 0;
  spec.outlier_proportion = 0.1;
  spec.seed = 5;
  spec.inlier_cap = 900;
  const MixedDataset mix = mix_dataset(set, spec);
  int outliers = 0;
  for (auto f : mix.is_outlier) outliers += f;
  CHECK(mix.size() == 1000);
  CHECK(outliers == 100);
  // every flagged sample really is from another class
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const int label = set.labels[static_cast<std::size_t>(mix.sample_ids[i])];
    CHECK((mix.is_outlier[i] ? label != 0 : label == 0));
  }
}

TEST_CASE("mix_dataset: p = 0 yields no outliers") {
  const LabeledImageSet set = make_two_pattern_set(20, 20, 8, 3);
  MixSpec spec;
  spec.outlier_proportion = 0.0;
  const MixedDataset mix = mix_dataset(set, spec);
  for (auto f : mix.is_outlier) CHECK(f == 0);
  CHECK(mix.size() == 20);
}

TEST_CASE("mix_dataset is deterministic for a fixed protocol and seed") {
  const LabeledImageSet set = make_two_pattern_set(50, 50, 8, 3);
  MixSpec spec;
  spec.outlier_proportion = 0.2;
  spec.seed = 9;
  const MixedDataset a = mix_dataset(set, spec);
  const MixedDataset b = mix_dataset(set, spec);
  CHECK(a.sample_ids == b.sample_ids);
  CHECK(a.is_outlier == b.is_outlier);
  spec.seed = 10;
  const MixedDataset c = mix_dataset(set, spec);
  CHECK(a.sample_ids != c.sample_ids);
}

TEST_CASE("mix_dataset rejects an insufficient outlier pool") {
  const LabeledImageSet set = make_two_pattern_set(100, 2, 8, 3);
  MixSpec spec;
  spec.outlier_proportion = 0.3;
  CHECK_THROWS_AS(mix_dataset(set, spec), ConfigError);
  MixSpec missing;
  missing.inlier_class = 7;
  CHECK_THROWS_AS(mix_dataset(set, missing), ConfigError);
}

TEST_CASE("mix_dataset outlier fraction stays within rounding of p (property)") {
  const LabeledImageSet set = make_two_pattern_set(400, 400, 8, 11);
  RngStream rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    MixSpec spec;
    spec.outlier_proportion = rng.uniform(0.0, 0.5);
    spec.seed = rng.next_u64();
    spec.inlier_cap = 50 + static_cast<int>(rng.uniform_int(350));
    const MixedDataset mix = mix_dataset(set, spec);
    double outliers = 0;
    for (auto f : mix.is_outlier) outliers += f;
    const double frac = outliers / static_cast<double>(mix.size());
    CHECK(std::abs(frac - spec.outlier_proportion) <= 1.0 / static_cast<double>(mix.size()) + 1e-12);
  }
}

TEST_CASE("synthetic set: shapes, labels, determinism") {
  const LabeledImageSet a = make_two_pattern_set(5, 4, 16, 42);
  CHECK(a.size() == 9);
  CHECK(a.height == 16);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.labels[i] == (i < 5 ? 0 : 1));
    for (std::int64_t p = 0; p < a.images[i].size(); ++p) {
      CHECK(a.images[i][p] >= 0.0);
      CHECK(a.images[i][p] <= 1.0);
    }
  }
  const LabeledImageSet b = make_two_pattern_set(5, 4, 16, 42);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(testutil::bit_hash(a.images[i]) == testutil::bit_hash(b.images[i]));
}

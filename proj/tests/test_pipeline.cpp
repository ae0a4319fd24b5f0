// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include <zlib.h>

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mcod/checkpoint.hpp"
#include "mcod/config.hpp"
#include "mcod/errors.hpp"
#include "mcod/synthetic.hpp"
#include "mcod/trainer.hpp"
#include "test_util.hpp"

using namespace mcod;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("mcod_pl_" + name)).string();
}

TrainConfig tiny_train_config() {
  TrainConfig t;
  t.epochs_warmup = 1;
  t.epochs_memory = 1;
  t.batch_size = 4;
  t.queue_capacity = 16;
  t.learning_rate = 1e-3;
  t.momentum_alpha = 0.9;
  t.seed = 3;
  t.encoder.input_height = 8;
  t.encoder.input_width = 8;
  t.encoder.conv_channels = {2};
  t.encoder.feature_dim = 6;
  t.encoder.embedding_dim = 4;
  t.encoder.num_prototypes = 3;
  return t;
}

std::vector<Tensor> tiny_images() { return make_two_pattern_set(10, 2, 8, 5).images; }

}  // namespace

TEST_CASE("config defaults carry the reference hyperparameters") {
  const RunConfig cfg;
  const std::string text = config_to_text(cfg);
  CHECK(text.find("epochs_warmup = 100") != std::string::npos);
  CHECK(text.find("epochs_memory = 100") != std::string::npos);
  CHECK(text.find("batch_size = 256") != std::string::npos);
  CHECK(text.find("learning_rate = 0.0001") != std::string::npos);
  CHECK(text.find("weight_decay = 0.0005") != std::string::npos);
  CHECK(text.find("momentum_alpha = 0.999") != std::string::npos);
  CHECK(text.find("queue_capacity = 4096") != std::string::npos);
  CHECK(text.find("lambda = 0.05") != std::string::npos);
  CHECK(text.find("beta1 = 0.9") != std::string::npos);
  CHECK(text.find("beta2 = 0.999") != std::string::npos);
  CHECK(text.find("feature_dim = 256") != std::string::npos);
  CHECK(text.find("embedding_dim = 128") != std::string::npos);
  CHECK(text.find("num_prototypes = 10") != std::string::npos);
  CHECK(text.find("tau_z = 1") != std::string::npos);
  CHECK(text.find("tau_c = 1") != std::string::npos);
}

TEST_CASE("config text round trips") {
  RunConfig cfg;
  cfg.train = tiny_train_config();
  cfg.train.tau_z = 10.0;
  cfg.train.tau_c = 0.01;
  cfg.train.inference_read = ReadMode::hard;
  cfg.train.literal_memory_softmax = false;
  cfg.mix.inlier_class = 4;
  cfg.mix.outlier_proportion = 0.25;
  cfg.mix.seed = 77;
  cfg.mix.inlier_cap = 123;
  const RunConfig back = parse_config(config_to_text(cfg));
  CHECK(back == cfg);
}

TEST_CASE("config parser reports bad input") {
  CHECK_THROWS_AS(parse_config("[train]\nbogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nope]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nbatch_size = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("orphan = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nbatch_size 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nmomentum_alpha = 1.0\n"), ConfigError);
  // comments and blank lines are fine
  CHECK_NOTHROW(parse_config("# header\n\n[train]\nbatch_size = 8  # inline\n"));
}

TEST_CASE("config file save/load") {
  const std::string path = temp_path("cfg.toml");
  RunConfig cfg;
  cfg.train = tiny_train_config();
  save_config_file(cfg, path);
  CHECK(load_config_file(path) == cfg);
  fs::remove(path);
  CHECK_THROWS_AS(load_config_file(path), IoError);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const TrainConfig cfg = tiny_train_config();
  const auto images = tiny_images();
  TrainerState state = train(cfg, images);
  MixSpec mix;
  mix.inlier_class = 0;
  mix.outlier_proportion = 0.1;
  mix.seed = 11;

  const std::string path = temp_path("ckpt.bin");
  save_checkpoint(state, mix, path);
  LoadedCheckpoint loaded = load_checkpoint(path);

  CHECK(loaded.mix == mix);
  CHECK(loaded.state.config == state.config);
  CHECK(loaded.state.epoch == state.epoch);
  CHECK(loaded.state.adam.step == state.adam.step);
  CHECK(testutil::bit_hash(loaded.state.q_tower.params) == testutil::bit_hash(state.q_tower.params));
  CHECK(testutil::bit_hash(loaded.state.k_tower.params) == testutil::bit_hash(state.k_tower.params));
  for (std::size_t i = 0; i < state.adam.m.size(); ++i) {
    CHECK(testutil::bit_hash(loaded.state.adam.m[i]) == testutil::bit_hash(state.adam.m[i]));
    CHECK(testutil::bit_hash(loaded.state.adam.v[i]) == testutil::bit_hash(state.adam.v[i]));
  }
  CHECK(loaded.state.bank.initialized() == state.bank.initialized());
  CHECK(testutil::bit_hash(loaded.state.bank.prototypes()) == testutil::bit_hash(state.bank.prototypes()));
  CHECK(loaded.state.bank.support() == state.bank.support());
  CHECK(loaded.state.bank.noise_rng_state() == state.bank.noise_rng_state());
  const QueueSnapshot a = state.queue.snapshot();
  const QueueSnapshot b = loaded.state.queue.snapshot();
  CHECK(a.size() == b.size());
  CHECK(testutil::bit_hash(a.f) == testutil::bit_hash(b.f));
  CHECK(testutil::bit_hash(a.z) == testutil::bit_hash(b.z));
  CHECK(testutil::bit_hash(a.c) == testutil::bit_hash(b.c));
  CHECK(loaded.state.queue.total_inserted() == state.queue.total_inserted());
  fs::remove(path);
}

TEST_CASE("checkpoint detects truncation and corruption, versions gate loads") {
  const TrainConfig cfg = tiny_train_config();
  TrainerState state = make_initial_state(cfg);
  const std::string path = temp_path("ckpt2.bin");
  save_checkpoint(state, MixSpec{}, path);

  std::ifstream in(path, std::ios::binary);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  {  // truncated: no partial state comes back
    std::ofstream out(path, std::ios::binary);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  {  // flip one payload byte: CRC must catch it
    std::string bad = blob;
    bad[bad.size() / 2] = static_cast<char>(bad[bad.size() / 2] ^ 0x5a);
    std::ofstream out(path, std::ios::binary);
    out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);

  {  // bump the version field and refresh the CRC: compatibility error
    std::string bumped = blob;
    bumped[8] = 2;  // little-endian version lives right after the magic
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bumped.data()), static_cast<uInt>(bumped.size() - 4)));
    for (int i = 0; i < 4; ++i) bumped[bumped.size() - 4 + static_cast<std::size_t>(i)] =
        static_cast<char>((crc >> (8 * i)) & 0xff);
    std::ofstream out(path, std::ios::binary);
    out.write(bumped.data(), static_cast<std::streamsize>(bumped.size()));
  }
  CHECK_THROWS_AS(load_checkpoint(path), CompatibilityError);

  {  // not a checkpoint at all
    std::ofstream out(path, std::ios::binary);
    out << "definitely not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  fs::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <numeric>

#include "mcod/encoder.hpp"
#include "mcod/losses.hpp"
#include "mcod/memory_bank.hpp"
#include "mcod/metrics.hpp"
#include "mcod/queue.hpp"
#include "mcod/rng.hpp"
#include "mcod/synthetic.hpp"
#include "mcod/trainer.hpp"

using namespace mcod;

namespace {

Tensor random_matrix(int n, int d, std::uint64_t seed) {
  RngStream rng(seed);
  Tensor t({n, d});
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

Tensor unit_rows(int n, int d, std::uint64_t seed) {
  RngStream rng(seed);
  Tensor t({n, d});
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(static_cast<std::size_t>(d));
    for (auto& v : row) v = rng.gaussian();
    row = l2_normalized(row);
    for (int j = 0; j < d; ++j) t.at2(i, j) = row[static_cast<std::size_t>(j)];
  }
  return t;
}

Tensor prob_rows(int n, int k, std::uint64_t seed) {
  RngStream rng(seed);
  Tensor t({n, k});
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      t.at2(i, j) = rng.uniform(0.01, 1.0);
      sum += t.at2(i, j);
    }
    for (int j = 0; j < k; ++j) t.at2(i, j) /= sum;
  }
  return t;
}

EncoderConfig bench_encoder() {
  EncoderConfig c;
  c.input_height = 16;
  c.input_width = 16;
  c.conv_channels = {8, 16};
  c.feature_dim = 32;
  c.embedding_dim = 16;
  c.num_prototypes = 4;
  return c;
}

void BM_EncodeForward(benchmark::State& state) {
  const EncoderConfig cfg = bench_encoder();
  const Tower tower = make_tower(cfg, 1);
  RngStream rng(2);
  Tensor batch({static_cast<int>(state.range(0)), 16, 16, 1});
  for (std::int64_t i = 0; i < batch.size(); ++i) batch[i] = rng.uniform();
  for (auto _ : state) {
    BatchFeatures out = encode(tower, batch);
    benchmark::DoNotOptimize(out.f.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeForward)->Arg(16)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.epochs_warmup = 0;
  cfg.epochs_memory = 1;
  cfg.batch_size = static_cast<int>(state.range(0));
  cfg.queue_capacity = 512;
  cfg.tau_z = 10.0;
  cfg.tau_c = 0.01;
  cfg.encoder = bench_encoder();
  const auto images = make_two_pattern_set(256, 64, 16, 3).images;
  TrainerState ts = make_initial_state(cfg);
  std::vector<int> ids(static_cast<std::size_t>(cfg.batch_size));
  std::iota(ids.begin(), ids.end(), 0);
  for (auto _ : state) {
    LossReport rep = train_step(ts, images, ids);
    benchmark::DoNotOptimize(rep.total);
  }
  state.SetItemsProcessed(state.iterations() * cfg.batch_size);
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_InstanceInfoNCE(benchmark::State& state) {
  const int n = 64, d = 16;
  const int q = static_cast<int>(state.range(0));
  Tensor zq = unit_rows(n, d, 1);
  const Tensor zk = unit_rows(n, d, 2);
  const Tensor queue = unit_rows(q, d, 3);
  for (auto _ : state) {
    Tape t;
    Var root = loss_instance_infonce(t, t.leaf(zq), t.constant(zk), t.constant(queue), 10.0);
    t.backward(root);
    benchmark::DoNotOptimize(zq.grad().data());
  }
}
BENCHMARK(BM_InstanceInfoNCE)->Arg(256)->Arg(1024)->Arg(4096);

void BM_MemoryWrite(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  QueueSnapshot snap;
  snap.f = random_matrix(rows, 32, 4);
  snap.z = unit_rows(rows, 16, 5);
  snap.c = prob_rows(rows, 10, 6);
  MemoryBank bank(10, 32, 7);
  for (auto _ : state) {
    bank.write(snap);
    benchmark::DoNotOptimize(bank.prototypes().data());
  }
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_MemoryWrite)->Arg(1024)->Arg(4096);

void BM_QueueEnqueueSnapshot(benchmark::State& state) {
  ContrastQueue queue(4096, 32, 16, 10);
  BatchFeatures batch;
  batch.f = random_matrix(256, 32, 8);
  batch.z = unit_rows(256, 16, 9);
  batch.c = prob_rows(256, 10, 10);
  for (auto _ : state) {
    queue.enqueue(batch);
    QueueSnapshot snap = queue.snapshot();
    benchmark::DoNotOptimize(snap.f.data());
  }
}
BENCHMARK(BM_QueueEnqueueSnapshot);

void BM_Auroc(benchmark::State& state) {
  RngStream rng(11);
  std::vector<ScoreRecord> recs;
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) recs.push_back({i, rng.uniform(), rng.uniform() < 0.1});
  recs.push_back({n, 2.0, true});
  recs.push_back({n + 1, -1.0, false});
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(recs));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Auroc)->Arg(1000)->Arg(10000);

}  // namespace

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}

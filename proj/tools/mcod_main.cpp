// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0
//
// mcod: memory- and contrast-based outlier detection on unlabeled image
// mixtures. Subcommands: train, score, eval, analyze, export-features, sweep,
// make-synthetic.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcod/checkpoint.hpp"
#include "mcod/config.hpp"
#include "mcod/dataset.hpp"
#include "mcod/errors.hpp"
#include "mcod/metrics.hpp"
#include "mcod/synthetic.hpp"
#include "mcod/trainer.hpp"

namespace fs = std::filesystem;
using namespace mcod;

namespace {

// Locates an IDX image/label pair in a directory: the MNIST names first, then
// any *-images-idx3-ubyte with a matching labels file.
std::pair<std::string, std::string> find_idx_pair(const std::string& dir) {
  const fs::path base(dir);
  const fs::path std_img = base / "train-images-idx3-ubyte";
  const fs::path std_lab = base / "train-labels-idx1-ubyte";
  if (fs::exists(std_img) && fs::exists(std_lab)) return {std_img.string(), std_lab.string()};
  if (!fs::is_directory(base)) throw mcod::IoError("data directory not found: " + dir);
  for (const auto& entry : fs::directory_iterator(base)) {
    const std::string name = entry.path().filename().string();
    const auto pos = name.find("-images-idx3-ubyte");
    if (pos == std::string::npos) continue;
    const fs::path labels = base / (name.substr(0, pos) + "-labels-idx1-ubyte");
    if (fs::exists(labels)) return {entry.path().string(), labels.string()};
  }
  throw mcod::IoError("no IDX image/label pair found in " + dir);
}

MixedDataset load_and_mix(const std::string& data_dir, const MixSpec& mix) {
  const auto [images_path, labels_path] = find_idx_pair(data_dir);
  const LabeledImageSet full = load_idx(images_path, labels_path);
  std::printf("loaded %zu images (%dx%d) from %s\n", full.size(), full.height, full.width,
              images_path.c_str());
  return mix_dataset(full, mix);
}

void apply_data_shape(RunConfig& cfg, const std::string& data_dir) {
  const auto [images_path, labels_path] = find_idx_pair(data_dir);
  (void)labels_path;
  // peek at the header only
  const LabeledImageSet probe = load_idx(images_path, labels_path);
  if (cfg.train.encoder.input_height != probe.height ||
      cfg.train.encoder.input_width != probe.width) {
    throw mcod::ConfigError("encoder input " + std::to_string(cfg.train.encoder.input_height) + "x" +
                      std::to_string(cfg.train.encoder.input_width) + " does not match data " +
                      std::to_string(probe.height) + "x" + std::to_string(probe.width) +
                      "; set [encoder] input_height/input_width in the config");
  }
}

MetricsReport print_metrics(const std::vector<ScoreRecord>& records) {
  const MetricsReport rep = compute_metrics(records);
  std::printf("\n%-10s %10s\n", "metric", "value");
  std::printf("%-10s %10.4f\n", "AUROC", rep.auroc);
  std::printf("%-10s %10.4f\n", "AUPR-IN", rep.aupr_in);
  std::printf("%-10s %10.4f\n", "AUPR-OUT", rep.aupr_out);
  std::printf("\nauroc=%.6f\n", rep.auroc);
  std::printf("aupr_in=%.6f\n", rep.aupr_in);
  std::printf("aupr_out=%.6f\n", rep.aupr_out);
  std::printf("n_inliers=%d\n", rep.num_inliers);
  std::printf("n_outliers=%d\n", rep.num_outliers);
  return rep;
}

struct TrainArgs {
  std::string config_path;
  std::string data_dir;
  std::optional<int> inlier_class;
  std::optional<double> p;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  std::string log_path;
};

TrainerState run_training(RunConfig cfg, const std::string& data_dir, const std::string& out_path,
                          const std::string& log_path) {
  apply_data_shape(cfg, data_dir);
  const MixedDataset mixed = load_and_mix(data_dir, cfg.mix);
  std::printf("mixture: %zu samples, p=%.3f, inlier class %d\n", mixed.size(),
              cfg.mix.outlier_proportion, cfg.mix.inlier_class);

  std::vector<EpochLossRow> log;
  TrainerState state = make_initial_state(cfg.train);
  const int total = cfg.train.epochs_warmup + cfg.train.epochs_memory;
  while (state.epoch < total) {
    const EpochLossRow row = run_epoch(state, mixed.images);
    log.push_back(row);
    std::printf("epoch %3d/%d  l_z=%.4f l_c=%.4f l_m=%.4f l_r=%.4f total=%.4f%s\n", row.epoch + 1,
                total, row.l_z, row.l_c, row.l_m, row.l_r, row.total,
                row.epoch + 1 == cfg.train.epochs_warmup ? "  [warm-up done]" : "");
    std::fflush(stdout);
  }
  save_checkpoint(state, cfg.mix, out_path);
  write_loss_log(log, log_path);
  std::printf("checkpoint: %s\nloss log:   %s\n", out_path.c_str(), log_path.c_str());
  return state;
}

std::vector<ScoreRecord> score_checkpoint(const LoadedCheckpoint& ckpt, const std::string& data_dir) {
  const MixedDataset mixed = load_and_mix(data_dir, ckpt.mix);
  return score_images(ckpt.state.q_tower, ckpt.state.bank, ckpt.state.config.inference_read,
                      mixed.images, mixed.sample_ids, mixed.is_outlier);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcod: unsupervised outlier detection with contrastive twin encoders and a prototype memory"};
  app.require_subcommand(1);

  // train
  TrainArgs targs;
  auto* train_cmd = app.add_subcommand("train", "Train on an unlabeled mixture and write a checkpoint");
  train_cmd->add_option("--config", targs.config_path, "Run config file (defaults used when omitted)");
  train_cmd->add_option("--data", targs.data_dir, "Directory holding an IDX image/label pair")->required();
  train_cmd->add_option("--inlier-class", targs.inlier_class, "Class id treated as inliers");
  train_cmd->add_option("--p", targs.p, "Outlier proportion of the mixture");
  train_cmd->add_option("--seed", targs.seed, "Global seed (training and mixing)");
  train_cmd->add_option("--out", targs.out_path, "Checkpoint output path")->required();
  train_cmd->add_option("--log", targs.log_path, "Loss log CSV path (default: <out>.losses.csv)");

  // score
  std::string score_ckpt, score_data, score_out;
  auto* score_cmd = app.add_subcommand("score", "Score a dataset with a trained checkpoint");
  score_cmd->add_option("--ckpt", score_ckpt, "Checkpoint file")->required();
  score_cmd->add_option("--data", score_data, "Data directory (re-mixed per the checkpoint's protocol)")->required();
  score_cmd->add_option("--out", score_out, "Scores CSV output path")->required();

  // eval
  std::string eval_scores;
  auto* eval_cmd = app.add_subcommand("eval", "Print AUROC / AUPR-IN / AUPR-OUT for a score file");
  eval_cmd->add_option("--scores", eval_scores, "Scores CSV")->required();

  // analyze
  std::string an_scores, an_out;
  auto* an_cmd = app.add_subcommand("analyze", "100-bin per-class similarity histogram");
  an_cmd->add_option("--scores", an_scores, "Scores CSV")->required();
  an_cmd->add_option("--out", an_out, "Histogram CSV output path")->required();

  // export-features
  std::string ef_ckpt, ef_data, ef_out;
  auto* ef_cmd = app.add_subcommand("export-features", "Dump raw feature vectors for external visualization");
  ef_cmd->add_option("--ckpt", ef_ckpt, "Checkpoint file")->required();
  ef_cmd->add_option("--data", ef_data, "Data directory")->required();
  ef_cmd->add_option("--out", ef_out, "Features CSV output path")->required();

  // sweep
  std::string sw_config, sw_data, sw_param, sw_outdir = ".";
  std::optional<int> sw_class;
  std::optional<std::uint64_t> sw_seed;
  auto* sw_cmd = app.add_subcommand("sweep", "Repeat train+eval over a parameter list (e.g. p=0.05,0.1)");
  sw_cmd->add_option("--config", sw_config, "Run config file");
  sw_cmd->add_option("--data", sw_data, "Data directory")->required();
  sw_cmd->add_option("--param", sw_param, "Sweep parameter, currently p=<comma list>")->required();
  sw_cmd->add_option("--inlier-class", sw_class, "Class id treated as inliers");
  sw_cmd->add_option("--seed", sw_seed, "Global seed");
  sw_cmd->add_option("--out-dir", sw_outdir, "Directory for per-run artifacts");

  // make-synthetic
  std::string ms_out;
  int ms_blobs = 1200, ms_stripes = 400, ms_size = 16;
  std::uint64_t ms_seed = 0;
  auto* ms_cmd = app.add_subcommand("make-synthetic", "Write a two-pattern synthetic IDX dataset");
  ms_cmd->add_option("--out", ms_out, "Output directory")->required();
  ms_cmd->add_option("--blobs", ms_blobs, "Gaussian blob count (class 0)");
  ms_cmd->add_option("--stripes", ms_stripes, "Stripe texture count (class 1)");
  ms_cmd->add_option("--size", ms_size, "Image size in pixels");
  ms_cmd->add_option("--seed", ms_seed, "Generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      RunConfig cfg = targs.config_path.empty() ? RunConfig{} : load_config_file(targs.config_path);
      if (targs.inlier_class) cfg.mix.inlier_class = *targs.inlier_class;
      if (targs.p) cfg.mix.outlier_proportion = *targs.p;
      if (targs.seed) {
        cfg.train.seed = *targs.seed;
        cfg.mix.seed = *targs.seed;
      }
      cfg.train.validate();
      cfg.mix.validate();
      const std::string log_path = targs.log_path.empty() ? targs.out_path + ".losses.csv" : targs.log_path;
      run_training(cfg, targs.data_dir, targs.out_path, log_path);
    } else if (*score_cmd) {
      const LoadedCheckpoint ckpt = load_checkpoint(score_ckpt);
      const auto records = score_checkpoint(ckpt, score_data);
      write_scores_csv(records, score_out);
      std::printf("wrote %zu scores to %s\n", records.size(), score_out.c_str());
    } else if (*eval_cmd) {
      print_metrics(read_scores_csv(eval_scores));
    } else if (*an_cmd) {
      const auto records = read_scores_csv(an_scores);
      write_histogram_csv(similarity_histogram(records), an_out);
      std::printf("wrote 100-bin histogram to %s\n", an_out.c_str());
    } else if (*ef_cmd) {
      const LoadedCheckpoint ckpt = load_checkpoint(ef_ckpt);
      const MixedDataset mixed = load_and_mix(ef_data, ckpt.mix);
      const Tensor feats = extract_features(ckpt.state.q_tower, mixed.images);
      std::FILE* f = std::fopen(ef_out.c_str(), "w");
      if (!f) throw mcod::IoError("cannot write features: " + ef_out);
      std::fprintf(f, "id,label");
      for (int d = 0; d < feats.dim(1); ++d) std::fprintf(f, ",f%d", d);
      std::fprintf(f, "\n");
      for (int i = 0; i < feats.dim(0); ++i) {
        std::fprintf(f, "%d,%s", mixed.sample_ids[static_cast<std::size_t>(i)],
                     mixed.is_outlier[static_cast<std::size_t>(i)] ? "outlier" : "inlier");
        for (int d = 0; d < feats.dim(1); ++d) std::fprintf(f, ",%.17g", feats.at2(i, d));
        std::fprintf(f, "\n");
      }
      std::fclose(f);
      std::printf("wrote %d feature rows to %s\n", feats.dim(0), ef_out.c_str());
    } else if (*sw_cmd) {
      if (sw_param.rfind("p=", 0) != 0) {
        throw mcod::ConfigError("sweep: only 'p=<comma list>' is supported, got '" + sw_param + "'");
      }
      std::vector<double> ps;
      std::stringstream ss(sw_param.substr(2));
      std::string item;
      while (std::getline(ss, item, ',')) ps.push_back(std::stod(item));
      if (ps.empty()) throw mcod::ConfigError("sweep: empty parameter list");

      RunConfig base = sw_config.empty() ? RunConfig{} : load_config_file(sw_config);
      if (sw_class) base.mix.inlier_class = *sw_class;
      if (sw_seed) {
        base.train.seed = *sw_seed;
        base.mix.seed = *sw_seed;
      }
      fs::create_directories(sw_outdir);
      const std::string results_path = (fs::path(sw_outdir) / "sweep_results.csv").string();
      std::FILE* rf = std::fopen(results_path.c_str(), "w");
      if (!rf) throw mcod::IoError("cannot write sweep results: " + results_path);
      std::fprintf(rf, "p,auroc,aupr_in,aupr_out\n");
      for (double p : ps) {
        RunConfig cfg = base;
        cfg.mix.outlier_proportion = p;
        char tag[32];
        std::snprintf(tag, sizeof tag, "p%.4g", p);
        std::printf("=== sweep %s ===\n", tag);
        const std::string ckpt_path = (fs::path(sw_outdir) / (std::string("sweep_") + tag + ".ckpt")).string();
        TrainerState state = run_training(cfg, sw_data, ckpt_path, ckpt_path + ".losses.csv");
        const MixedDataset mixed = load_and_mix(sw_data, cfg.mix);
        const auto records = score_images(state.q_tower, state.bank, cfg.train.inference_read,
                                          mixed.images, mixed.sample_ids, mixed.is_outlier);
        write_scores_csv(records, (fs::path(sw_outdir) / (std::string("sweep_") + tag + ".scores.csv")).string());
        const MetricsReport rep = print_metrics(records);
        std::fprintf(rf, "%.17g,%.6f,%.6f,%.6f\n", p, rep.auroc, rep.aupr_in, rep.aupr_out);
        std::fflush(rf);
      }
      std::fclose(rf);
      std::printf("sweep results: %s\n", results_path.c_str());
    } else if (*ms_cmd) {
      fs::create_directories(ms_out);
      const LabeledImageSet set = make_two_pattern_set(ms_blobs, ms_stripes, ms_size, ms_seed);
      save_idx(set, (fs::path(ms_out) / "train-images-idx3-ubyte").string(),
               (fs::path(ms_out) / "train-labels-idx1-ubyte").string());
      std::printf("wrote %zu images (%d blobs + %d stripes, %dx%d) to %s\n", set.size(), ms_blobs,
                  ms_stripes, ms_size, ms_size, ms_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

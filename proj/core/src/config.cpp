// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mcod/errors.hpp"

namespace mcod {

void TrainConfig::validate() const {
  if (epochs_warmup < 0 || epochs_memory < 0) throw ConfigError("train: epoch counts must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (queue_capacity < 1) throw ConfigError("train: queue_capacity must be >= 1");
  if (!(tau_z > 0.0) || !(tau_c > 0.0)) throw ConfigError("train: temperatures must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("train: lambda must be >= 0");
  if (!(momentum_alpha >= 0.0 && momentum_alpha < 1.0)) {
    throw ConfigError("train: momentum_alpha must lie in [0,1)");
  }
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) {
    throw ConfigError("train: learning_rate and weight_decay must be >= 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in [0,1)");
  }
  encoder.validate();
  augment.validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config: bad unsigned value for " + key + ": '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config: bad boolean value for " + key + ": '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(static_cast<int>(parse_int(key, trim(item))));
  }
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

void apply_train(TrainConfig& t, const std::string& key, const std::string& v) {
  if (key == "epochs_warmup") t.epochs_warmup = static_cast<int>(parse_int(key, v));
  else if (key == "epochs_memory") t.epochs_memory = static_cast<int>(parse_int(key, v));
  else if (key == "batch_size") t.batch_size = static_cast<int>(parse_int(key, v));
  else if (key == "tau_z") t.tau_z = parse_double(key, v);
  else if (key == "tau_c") t.tau_c = parse_double(key, v);
  else if (key == "lambda") t.lambda = parse_double(key, v);
  else if (key == "queue_capacity") t.queue_capacity = static_cast<int>(parse_int(key, v));
  else if (key == "momentum_alpha") t.momentum_alpha = parse_double(key, v);
  else if (key == "learning_rate") t.learning_rate = parse_double(key, v);
  else if (key == "weight_decay") t.weight_decay = parse_double(key, v);
  else if (key == "beta1") t.beta1 = parse_double(key, v);
  else if (key == "beta2") t.beta2 = parse_double(key, v);
  else if (key == "adam_eps") t.adam_eps = parse_double(key, v);
  else if (key == "seed") t.seed = parse_u64(key, v);
  else if (key == "literal_memory_softmax") t.literal_memory_softmax = parse_bool(key, v);
  else if (key == "forgetting") t.forgetting = parse_bool(key, v);
  else if (key == "inference_read") {
    if (v == "soft") t.inference_read = ReadMode::soft;
    else if (v == "hard") t.inference_read = ReadMode::hard;
    else throw ConfigError("config: inference_read must be 'soft' or 'hard', got '" + v + "'");
  } else {
    throw ConfigError("config: unknown key in [train]: " + key);
  }
}

void apply_encoder(EncoderConfig& e, const std::string& key, const std::string& v) {
  if (key == "input_height") e.input_height = static_cast<int>(parse_int(key, v));
  else if (key == "input_width") e.input_width = static_cast<int>(parse_int(key, v));
  else if (key == "input_channels") e.input_channels = static_cast<int>(parse_int(key, v));
  else if (key == "conv_channels") e.conv_channels = parse_int_list(key, v);
  else if (key == "feature_dim") e.feature_dim = static_cast<int>(parse_int(key, v));
  else if (key == "embedding_dim") e.embedding_dim = static_cast<int>(parse_int(key, v));
  else if (key == "num_prototypes") e.num_prototypes = static_cast<int>(parse_int(key, v));
  else if (key == "init_seed") e.init_seed = parse_int(key, v);
  else throw ConfigError("config: unknown key in [encoder]: " + key);
}

void apply_augment(AugmentConfig& a, const std::string& key, const std::string& v) {
  if (key == "flip_prob") a.flip_prob = parse_double(key, v);
  else if (key == "rotation_min_deg") a.rotation_min_deg = parse_double(key, v);
  else if (key == "rotation_max_deg") a.rotation_max_deg = parse_double(key, v);
  else if (key == "crop_scale_min") a.crop_scale_min = parse_double(key, v);
  else if (key == "crop_scale_max") a.crop_scale_max = parse_double(key, v);
  else if (key == "contrast_min") a.contrast_min = parse_double(key, v);
  else if (key == "contrast_max") a.contrast_max = parse_double(key, v);
  else if (key == "blur_prob") a.blur_prob = parse_double(key, v);
  else if (key == "blur_sigma_min") a.blur_sigma_min = parse_double(key, v);
  else if (key == "blur_sigma_max") a.blur_sigma_max = parse_double(key, v);
  else throw ConfigError("config: unknown key in [augment]: " + key);
}

void apply_mix(MixSpec& m, const std::string& key, const std::string& v) {
  if (key == "inlier_class") m.inlier_class = static_cast<int>(parse_int(key, v));
  else if (key == "outlier_proportion") m.outlier_proportion = parse_double(key, v);
  else if (key == "seed") m.seed = parse_u64(key, v);
  else if (key == "inlier_cap") m.inlier_cap = static_cast<int>(parse_int(key, v));
  else throw ConfigError("config: unknown key in [mix]: " + key);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config: malformed section header at line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      if (section != "train" && section != "encoder" && section != "augment" && section != "mix") {
        throw ConfigError("config: unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section == "train") apply_train(cfg.train, key, value);
    else if (section == "encoder") apply_encoder(cfg.train.encoder, key, value);
    else if (section == "augment") apply_augment(cfg.train.augment, key, value);
    else if (section == "mix") apply_mix(cfg.mix, key, value);
    else throw ConfigError("config: key outside any section at line " + std::to_string(lineno));
  }
  cfg.train.validate();
  cfg.mix.validate();
  return cfg;
}

std::string config_to_text(const RunConfig& c) {
  std::ostringstream os;
  const TrainConfig& t = c.train;
  os << "[train]\n";
  os << "epochs_warmup = " << t.epochs_warmup << "\n";
  os << "epochs_memory = " << t.epochs_memory << "\n";
  os << "batch_size = " << t.batch_size << "\n";
  os << "tau_z = " << fmt(t.tau_z) << "\n";
  os << "tau_c = " << fmt(t.tau_c) << "\n";
  os << "lambda = " << fmt(t.lambda) << "\n";
  os << "queue_capacity = " << t.queue_capacity << "\n";
  os << "momentum_alpha = " << fmt(t.momentum_alpha) << "\n";
  os << "learning_rate = " << fmt(t.learning_rate) << "\n";
  os << "weight_decay = " << fmt(t.weight_decay) << "\n";
  os << "beta1 = " << fmt(t.beta1) << "\n";
  os << "beta2 = " << fmt(t.beta2) << "\n";
  os << "adam_eps = " << fmt(t.adam_eps) << "\n";
  os << "seed = " << t.seed << "\n";
  os << "literal_memory_softmax = " << (t.literal_memory_softmax ? "true" : "false") << "\n";
  os << "forgetting = " << (t.forgetting ? "true" : "false") << "\n";
  os << "inference_read = " << (t.inference_read == ReadMode::soft ? "soft" : "hard") << "\n";
  os << "\n[encoder]\n";
  const EncoderConfig& e = t.encoder;
  os << "input_height = " << e.input_height << "\n";
  os << "input_width = " << e.input_width << "\n";
  os << "input_channels = " << e.input_channels << "\n";
  os << "conv_channels = ";
  for (std::size_t i = 0; i < e.conv_channels.size(); ++i) os << (i ? "," : "") << e.conv_channels[i];
  os << "\n";
  os << "feature_dim = " << e.feature_dim << "\n";
  os << "embedding_dim = " << e.embedding_dim << "\n";
  os << "num_prototypes = " << e.num_prototypes << "\n";
  os << "init_seed = " << e.init_seed << "\n";
  os << "\n[augment]\n";
  const AugmentConfig& a = t.augment;
  os << "flip_prob = " << fmt(a.flip_prob) << "\n";
  os << "rotation_min_deg = " << fmt(a.rotation_min_deg) << "\n";
  os << "rotation_max_deg = " << fmt(a.rotation_max_deg) << "\n";
  os << "crop_scale_min = " << fmt(a.crop_scale_min) << "\n";
  os << "crop_scale_max = " << fmt(a.crop_scale_max) << "\n";
  os << "contrast_min = " << fmt(a.contrast_min) << "\n";
  os << "contrast_max = " << fmt(a.contrast_max) << "\n";
  os << "blur_prob = " << fmt(a.blur_prob) << "\n";
  os << "blur_sigma_min = " << fmt(a.blur_sigma_min) << "\n";
  os << "blur_sigma_max = " << fmt(a.blur_sigma_max) << "\n";
  os << "\n[mix]\n";
  os << "inlier_class = " << c.mix.inlier_class << "\n";
  os << "outlier_proportion = " << fmt(c.mix.outlier_proportion) << "\n";
  os << "seed = " << c.mix.seed << "\n";
  os << "inlier_cap = " << c.mix.inlier_cap << "\n";
  return os.str();
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void save_config_file(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out << config_to_text(config);
  if (!out) throw IoError("failed writing config file: " + path);
}

}  // namespace mcod

// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/encoder.hpp"

#include <cmath>
#include <string>

#include "mcod/errors.hpp"
#include "mcod/rng.hpp"

namespace mcod {

void EncoderConfig::validate() const {
  if (input_height < 1 || input_width < 1 || input_channels < 1) {
    throw ConfigError("encoder: input dimensions must be positive");
  }
  if (feature_dim < 1 || embedding_dim < 1 || num_prototypes < 1) {
    throw ConfigError("encoder: feature_dim, embedding_dim and num_prototypes must be >= 1");
  }
  if (conv_channels.empty()) throw ConfigError("encoder: at least one conv block is required");
  int h = input_height, w = input_width;
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    if (conv_channels[i] < 1) throw ConfigError("encoder: conv channel widths must be >= 1");
    if (h % 2 != 0 || w % 2 != 0) {
      throw ConfigError("encoder: input " + std::to_string(input_height) + "x" +
                        std::to_string(input_width) + " cannot be pooled " +
                        std::to_string(conv_channels.size()) + " times");
    }
    h /= 2;
    w /= 2;
  }
}

int EncoderConfig::flattened_dim() const {
  const int blocks = static_cast<int>(conv_channels.size());
  const int h = input_height >> blocks;
  const int w = input_width >> blocks;
  return h * w * conv_channels.back();
}

namespace {

Tensor uniform_fan_in(std::vector<int> shape, int fan_in, RngStream& rng) {
  Tensor t(std::move(shape));
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-s, s);
  return t;
}

// Small positive bias so an all-dark input cannot propagate exact zeros
// through the relu chain into the embedding normalization.
Tensor bias_init(int n) { return Tensor({n}, std::vector<double>(static_cast<std::size_t>(n), 0.01)); }

void check_images(const EncoderConfig& cfg, const Tensor& images) {
  if (images.rank() != 4 || images.dim(1) != cfg.input_height || images.dim(2) != cfg.input_width ||
      images.dim(3) != cfg.input_channels) {
    throw ContractError("encode: image batch " + images.shape_str() + " does not match configured input shape");
  }
  for (std::int64_t i = 0; i < images.size(); ++i) {
    const double v = images[i];
    if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) {
      throw ContractError("encode: pixel values must lie in [0,1]");
    }
  }
}

}  // namespace

Tower make_tower(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  RngStream rng(seed);
  Tower tower;
  tower.config = config;
  int ci = config.input_channels;
  for (std::size_t b = 0; b < config.conv_channels.size(); ++b) {
    const int co = config.conv_channels[b];
    const std::string p = "encoder.conv" + std::to_string(b);
    tower.params.add(p + ".weight", uniform_fan_in({3, 3, ci, co}, 9 * ci, rng));
    tower.params.add(p + ".bias", bias_init(co));
    ci = co;
  }
  const int flat = config.flattened_dim();
  tower.params.add("encoder.fc.weight", uniform_fan_in({flat, config.feature_dim}, flat, rng));
  tower.params.add("encoder.fc.bias", bias_init(config.feature_dim));
  tower.params.add("embed.fc1.weight",
                   uniform_fan_in({config.feature_dim, config.feature_dim}, config.feature_dim, rng));
  tower.params.add("embed.fc1.bias", bias_init(config.feature_dim));
  tower.params.add("embed.fc2.weight",
                   uniform_fan_in({config.feature_dim, config.embedding_dim}, config.feature_dim, rng));
  tower.params.add("embed.fc2.bias", bias_init(config.embedding_dim));
  tower.params.add("relevancy.weight",
                   uniform_fan_in({config.embedding_dim, config.num_prototypes}, config.embedding_dim, rng));
  tower.params.add("relevancy.bias", bias_init(config.num_prototypes));
  return tower;
}

void BatchFeatures::validate() const {
  const int n = size();
  for (int i = 0; i < n; ++i) {
    if (std::abs(l2_norm(z.row(i)) - 1.0) > 1e-10) {
      throw ContractError("batch features: embedding row " + std::to_string(i) + " is not unit norm");
    }
    double sum = 0.0;
    for (double v : c.row(i)) {
      if (v < 0.0) throw ContractError("batch features: negative relevancy entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-10) {
      throw ContractError("batch features: relevancy row " + std::to_string(i) + " does not sum to 1");
    }
  }
}

std::vector<Var> lift_params(Tape& tape, ParamSet& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) vars.push_back(tape.leaf(params.tensor(i)));
  return vars;
}

TracedBatch encode_traced(Tape& tape, const EncoderConfig& config, std::span<const Var> param_vars,
                          const Tensor& images) {
  check_images(config, images);
  const int n = images.dim(0);
  std::size_t p = 0;
  auto next = [&]() { return param_vars[p++]; };

  Var x = tape.constant(images);
  for (std::size_t b = 0; b < config.conv_channels.size(); ++b) {
    Var w = next(), bias = next();
    x = tape.avgpool2(tape.relu(tape.conv2d(x, w, bias)));
  }
  x = tape.reshape(x, {n, config.flattened_dim()});
  Var fc_w = next(), fc_b = next();
  Var f = tape.add_rowwise(tape.matmul(x, fc_w), fc_b);

  Var g1_w = next(), g1_b = next(), g2_w = next(), g2_b = next();
  Var hidden = tape.relu(tape.add_rowwise(tape.matmul(f, g1_w), g1_b));
  Var z = tape.l2_normalize_rows(tape.add_rowwise(tape.matmul(hidden, g2_w), g2_b));

  Var h_w = next(), h_b = next();
  Var c = tape.softmax_rows(tape.add_rowwise(tape.matmul(z, h_w), h_b));
  if (p != param_vars.size()) throw ContractError("encode: parameter count does not match architecture");
  return {f, z, c};
}

BatchFeatures encode(const Tower& tower, const Tensor& images) {
  Tape tape(Recording::off);
  std::vector<Var> vars;
  vars.reserve(tower.params.size());
  for (std::size_t i = 0; i < tower.params.size(); ++i) {
    vars.push_back(tape.constant(tower.params.tensor(i)));
  }
  TracedBatch out = encode_traced(tape, tower.config, vars, images);
  return {tape.value(out.f), tape.value(out.z), tape.value(out.c)};
}

void momentum_update(ParamSet& theta_k, const ParamSet& theta_q, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("momentum_update: alpha must lie in [0,1]");
  if (!theta_k.same_architecture(theta_q)) {
    throw ContractError("momentum_update: tower architectures differ");
  }
  for (std::size_t p = 0; p < theta_k.size(); ++p) {
    auto& k = theta_k.tensor(p).values();
    const auto& q = theta_q.tensor(p).values();
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = alpha * k[i] + (1.0 - alpha) * q[i];
  }
}

Tensor stack_images(std::span<const Tensor> images) {
  if (images.empty()) throw ContractError("stack_images: empty batch");
  const auto& s = images[0].shape();
  if (s.size() != 3) throw ContractError("stack_images: samples must be [h,w,c]");
  Tensor out({static_cast<int>(images.size()), s[0], s[1], s[2]});
  const std::size_t per = images[0].values().size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != s) throw ContractError("stack_images: inconsistent sample shapes");
    std::copy(images[i].values().begin(), images[i].values().end(), out.values().begin() + i * per);
  }
  return out;
}

}  // namespace mcod

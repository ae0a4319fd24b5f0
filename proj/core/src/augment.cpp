// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcod/errors.hpp"

namespace mcod {

AugmentConfig AugmentConfig::identity() {
  AugmentConfig c;
  c.flip_prob = 0.0;
  c.rotation_min_deg = 0.0;
  c.rotation_max_deg = 0.0;
  c.crop_scale_min = 1.0;
  c.crop_scale_max = 1.0;
  c.contrast_min = 1.0;
  c.contrast_max = 1.0;
  c.blur_prob = 0.0;
  return c;
}

void AugmentConfig::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(flip_prob) || !prob(blur_prob)) throw ConfigError("augment: probabilities must lie in [0,1]");
  if (rotation_min_deg > rotation_max_deg || crop_scale_min > crop_scale_max ||
      contrast_min > contrast_max || blur_sigma_min > blur_sigma_max) {
    throw ConfigError("augment: ranges must satisfy lo <= hi");
  }
  if (!(crop_scale_min > 0.0 && crop_scale_max <= 1.0)) {
    throw ConfigError("augment: crop scale must lie in (0,1]");
  }
}

namespace {

struct Dims {
  int h, w, c;
};

Dims dims_of(const Tensor& img) {
  if (img.rank() != 3) throw ContractError("augment: image must be [h,w,c]");
  return {img.dim(0), img.dim(1), img.dim(2)};
}

double pixel(const Tensor& img, const Dims& d, int y, int x, int c) {
  return img[(static_cast<std::size_t>(y) * d.w + x) * d.c + c];
}

double pixel_clamped(const Tensor& img, const Dims& d, int y, int x, int c) {
  y = std::clamp(y, 0, d.h - 1);
  x = std::clamp(x, 0, d.w - 1);
  return pixel(img, d, y, x, c);
}

// Bilinear sample with zero fill outside the image.
double sample_bilinear(const Tensor& img, const Dims& d, double y, double x, int c) {
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0, fx = x - x0;
  double acc = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    for (int dx = 0; dx <= 1; ++dx) {
      const int yy = y0 + dy, xx = x0 + dx;
      if (yy < 0 || yy >= d.h || xx < 0 || xx >= d.w) continue;
      const double wgt = (dy ? fy : 1.0 - fy) * (dx ? fx : 1.0 - fx);
      acc += wgt * pixel(img, d, yy, xx, c);
    }
  }
  return acc;
}

Tensor flip_horizontal(const Tensor& img, const Dims& d) {
  Tensor out(img.shape());
  for (int y = 0; y < d.h; ++y)
    for (int x = 0; x < d.w; ++x)
      for (int c = 0; c < d.c; ++c)
        out[(static_cast<std::size_t>(y) * d.w + x) * d.c + c] = pixel(img, d, y, d.w - 1 - x, c);
  return out;
}

Tensor rotate(const Tensor& img, const Dims& d, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cy = (d.h - 1) / 2.0, cx = (d.w - 1) / 2.0;
  Tensor out(img.shape());
  for (int y = 0; y < d.h; ++y) {
    for (int x = 0; x < d.w; ++x) {
      // inverse mapping: rotate the destination point back by -degrees
      const double sy = cy + (y - cy) * cs - (x - cx) * sn;
      const double sx = cx + (y - cy) * sn + (x - cx) * cs;
      for (int c = 0; c < d.c; ++c)
        out[(static_cast<std::size_t>(y) * d.w + x) * d.c + c] = sample_bilinear(img, d, sy, sx, c);
    }
  }
  return out;
}

Tensor crop_resize(const Tensor& img, const Dims& d, int oy, int ox, int ch, int cw) {
  Tensor out(img.shape());
  // align-corners mapping back to the full size
  const double ry = d.h > 1 ? static_cast<double>(ch - 1) / (d.h - 1) : 0.0;
  const double rx = d.w > 1 ? static_cast<double>(cw - 1) / (d.w - 1) : 0.0;
  for (int y = 0; y < d.h; ++y) {
    for (int x = 0; x < d.w; ++x) {
      const double sy = oy + y * ry;
      const double sx = ox + x * rx;
      for (int c = 0; c < d.c; ++c)
        out[(static_cast<std::size_t>(y) * d.w + x) * d.c + c] = sample_bilinear(img, d, sy, sx, c);
    }
  }
  return out;
}

Tensor adjust_contrast(const Tensor& img, double factor) {
  double mean = 0.0;
  for (std::int64_t i = 0; i < img.size(); ++i) mean += img[i];
  mean /= static_cast<double>(img.size());
  Tensor out(img.shape());
  for (std::int64_t i = 0; i < img.size(); ++i) out[i] = (img[i] - mean) * factor + mean;
  return out;
}

Tensor gaussian_blur3(const Tensor& img, const Dims& d, double sigma) {
  // separable 3-tap kernel, clamp-to-edge borders
  const double w1 = std::exp(-1.0 / (2.0 * sigma * sigma));
  const double norm = 1.0 + 2.0 * w1;
  const double k0 = 1.0 / norm, k1 = w1 / norm;
  Tensor tmp(img.shape());
  for (int y = 0; y < d.h; ++y)
    for (int x = 0; x < d.w; ++x)
      for (int c = 0; c < d.c; ++c)
        tmp[(static_cast<std::size_t>(y) * d.w + x) * d.c + c] =
            k1 * pixel_clamped(img, d, y, x - 1, c) + k0 * pixel(img, d, y, x, c) +
            k1 * pixel_clamped(img, d, y, x + 1, c);
  Tensor out(img.shape());
  for (int y = 0; y < d.h; ++y)
    for (int x = 0; x < d.w; ++x)
      for (int c = 0; c < d.c; ++c)
        out[(static_cast<std::size_t>(y) * d.w + x) * d.c + c] =
            k1 * pixel_clamped(tmp, d, y - 1, x, c) + k0 * pixel(tmp, d, y, x, c) +
            k1 * pixel_clamped(tmp, d, y + 1, x, c);
  return out;
}

}  // namespace

Tensor augment(const Tensor& image, const AugmentConfig& cfg, RngStream& stream) {
  cfg.validate();
  const Dims d = dims_of(image);
  for (std::int64_t i = 0; i < image.size(); ++i) {
    if (!(image[i] >= 0.0 && image[i] <= 1.0)) {
      throw ContractError("augment: pixel values must lie in [0,1]");
    }
  }

  // Fixed draw order, always eight draws, so streams stay aligned no matter
  // which transforms fire.
  const double u_flip = stream.uniform();
  const double angle = stream.uniform(cfg.rotation_min_deg, cfg.rotation_max_deg);
  const double scale = stream.uniform(cfg.crop_scale_min, cfg.crop_scale_max);
  const std::uint64_t r_oy = stream.next_u64();
  const std::uint64_t r_ox = stream.next_u64();
  const double factor = stream.uniform(cfg.contrast_min, cfg.contrast_max);
  const double u_blur = stream.uniform();
  const double sigma = stream.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);

  Tensor out = image;
  if (u_flip < cfg.flip_prob) out = flip_horizontal(out, d);
  if (angle != 0.0) out = rotate(out, d, angle);

  const int ch = static_cast<int>(std::lround(scale * d.h));
  const int cw = static_cast<int>(std::lround(scale * d.w));
  if (ch < 1 || cw < 1) throw ContractError("augment: image is smaller than the minimum crop");
  const int oy = static_cast<int>(r_oy % static_cast<std::uint64_t>(d.h - ch + 1));
  const int ox = static_cast<int>(r_ox % static_cast<std::uint64_t>(d.w - cw + 1));
  if (!(ch == d.h && cw == d.w && oy == 0 && ox == 0)) out = crop_resize(out, d, oy, ox, ch, cw);

  if (factor != 1.0) out = adjust_contrast(out, factor);
  if (u_blur < cfg.blur_prob) out = gaussian_blur3(out, d, sigma);

  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
  return out;
}

std::pair<Tensor, Tensor> make_pair(const Tensor& image, const AugmentConfig& cfg,
                                    std::uint64_t pair_seed) {
  RngStream sq = RngStream::derive(pair_seed, {0});
  RngStream sk = RngStream::derive(pair_seed, {1});
  return {augment(image, cfg, sq), augment(image, cfg, sk)};
}

}  // namespace mcod

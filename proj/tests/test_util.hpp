// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <vector>

#include "mcod/params.hpp"
#include "mcod/rng.hpp"
#include "mcod/tensor.hpp"

namespace testutil {

// FNV-1a over the raw bytes; used for bitwise state comparisons.
inline std::uint64_t bit_hash(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double d : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

inline std::uint64_t bit_hash(const mcod::Tensor& t) { return bit_hash(t.values()); }

inline std::uint64_t bit_hash(const mcod::ParamSet& p) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < p.size(); ++i) h ^= bit_hash(p.tensor(i)) + 0x9e3779b9 + (h << 6);
  return h;
}

// Combined absolute/relative error; equals relative error once magnitudes
// exceed 1.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central finite differences against an analytic gradient, elementwise.
// `forward` must recompute the scalar from the current contents of `x`.
inline double max_grad_err(mcod::Tensor& x, const std::function<double()>& forward,
                           std::span<const double> analytic, double step = 1e-5) {
  double worst = 0.0;
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double fp = forward();
    x[i] = saved - step;
    const double fm = forward();
    x[i] = saved;
    const double fd = (fp - fm) / (2.0 * step);
    worst = std::max(worst, rel_err(analytic[static_cast<std::size_t>(i)], fd));
  }
  return worst;
}

inline mcod::Tensor random_tensor(std::vector<int> shape, mcod::RngStream& rng, double lo = -1.0,
                                  double hi = 1.0) {
  mcod::Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

inline mcod::Tensor random_unit_rows(int n, int d, mcod::RngStream& rng) {
  mcod::Tensor t({n, d});
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(static_cast<std::size_t>(d));
    for (auto& v : row) v = rng.gaussian();
    row = mcod::l2_normalized(row);
    for (int j = 0; j < d; ++j) t.at2(i, j) = row[static_cast<std::size_t>(j)];
  }
  return t;
}

inline mcod::Tensor random_prob_rows(int n, int k, mcod::RngStream& rng) {
  mcod::Tensor t({n, k});
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      t.at2(i, j) = rng.uniform(1e-3, 1.0);
      sum += t.at2(i, j);
    }
    for (int j = 0; j < k; ++j) t.at2(i, j) /= sum;
  }
  return t;
}

}  // namespace testutil

// Copyright (c) 2026 mcod contributors
// SPDX-License-Identifier: Apache-2.0

#include "mcod/tape.hpp"

#include <algorithm>
#include <cmath>

#include "mcod/errors.hpp"

namespace mcod {

namespace {

void check_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ContractError(std::string(op) + ": expected a rank-2 tensor, got " + t.shape_str());
}

}  // namespace

Var Tape::push(Tensor value, bool requires_grad, std::function<void()> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad && recording_ == Recording::on;
  if (n.requires_grad) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor& t) {
  Var v = push(t, /*requires_grad=*/true, nullptr);
  node(v).source = &t;
  return v;
}

Var Tape::constant(Tensor t) { return push(std::move(t), false, nullptr); }

const std::vector<double>& Tape::grad(Var v) const {
  if (!backward_done_) throw StateError("gradient requested before backward()");
  return nodes_[static_cast<std::size_t>(v.index)].grad;
}

std::vector<double>& Tape::grad_buf(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad.assign(n.value.values().size(), 0.0);
  return n.grad;
}

Var Tape::add(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw ContractError("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] + tb[i];
  if (!track(a, b)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, b, v] {
    const auto& g = node(v).grad;
    if (node(a).requires_grad) {
      auto& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (node(b).requires_grad) {
      auto& gb = grad_buf(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  };
  return v;
}

Var Tape::sub(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw ContractError("sub: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] - tb[i];
  if (!track(a, b)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, b, v] {
    const auto& g = node(v).grad;
    if (node(a).requires_grad) {
      auto& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (node(b).requires_grad) {
      auto& gb = grad_buf(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  };
  return v;
}

Var Tape::mul(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) throw ContractError("mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * tb[i];
  if (!track(a, b)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, b, v] {
    const auto& g = node(v).grad;
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (node(a).requires_grad) {
      auto& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * tb[static_cast<std::int64_t>(i)];
    }
    if (node(b).requires_grad) {
      auto& gb = grad_buf(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ta[static_cast<std::int64_t>(i)];
    }
  };
  return v;
}

Var Tape::square(Var a) { return mul(a, a); }

Var Tape::scale(Var a, double s) {
  const Tensor& ta = value(a);
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] * s;
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v, s] {
    const auto& g = node(v).grad;
    auto& ga = grad_buf(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  };
  return v;
}

Var Tape::relu(Var a) {
  const Tensor& ta = value(a);
  Tensor out(ta.shape());
  for (std::int64_t i = 0; i < ta.size(); ++i) out[i] = ta[i] > 0.0 ? ta[i] : 0.0;
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v] {
    const auto& g = node(v).grad;
    const Tensor& ta = node(a).value;
    auto& ga = grad_buf(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (ta[static_cast<std::int64_t>(i)] > 0.0) ga[i] += g[i];
    }
  };
  return v;
}

Var Tape::reshape(Var a, std::vector<int> shape) {
  const Tensor& ta = value(a);
  if (shape_size(shape) != ta.size()) {
    throw ContractError("reshape: element count mismatch for " + ta.shape_str());
  }
  Tensor out(std::move(shape), ta.values());
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v] {
    const auto& g = node(v).grad;
    auto& ga = grad_buf(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  };
  return v;
}

Var Tape::add_rowwise(Var a, Var row) {
  const Tensor& ta = value(a);
  const Tensor& tr = value(row);
  check_rank2(ta, "add_rowwise");
  if (tr.rank() != 1 || tr.dim(0) != ta.dim(1)) {
    throw ContractError("add_rowwise: row shape " + tr.shape_str() + " does not match " + ta.shape_str());
  }
  const int n = ta.dim(0), k = ta.dim(1);
  Tensor out(ta.shape());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) out.at2(i, j) = ta.at2(i, j) + tr[j];
  if (!track(a, row)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, row, v, n, k] {
    const auto& g = node(v).grad;
    if (node(a).requires_grad) {
      auto& ga = grad_buf(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (node(row).requires_grad) {
      auto& gr = grad_buf(row);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) gr[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(i) * k + j];
    }
  };
  return v;
}

namespace {

// C[n,p] += opA(A) * opB(B) with op in {identity, transpose}.
void matmul_kernel(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& out) {
  const int n = out.dim(0), p = out.dim(1);
  const int m = ta ? a.dim(0) : a.dim(1);
  for (int i = 0; i < n; ++i) {
    for (int kk = 0; kk < m; ++kk) {
      const double av = ta ? a.at2(kk, i) : a.at2(i, kk);
      if (av == 0.0) continue;
      if (tb) {
        for (int j = 0; j < p; ++j) out.at2(i, j) += av * b.at2(j, kk);
      } else {
        for (int j = 0; j < p; ++j) out.at2(i, j) += av * b.at2(kk, j);
      }
    }
  }
}

}  // namespace

Var Tape::matmul(Var a, Var b, bool trans_a, bool trans_b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  check_rank2(ta, "matmul");
  check_rank2(tb, "matmul");
  if (trans_a && trans_b) throw ContractError("matmul: simultaneous transposes are not supported");
  const int n = trans_a ? ta.dim(1) : ta.dim(0);
  const int m = trans_a ? ta.dim(0) : ta.dim(1);
  const int mb = trans_b ? tb.dim(1) : tb.dim(0);
  const int p = trans_b ? tb.dim(0) : tb.dim(1);
  if (m != mb) {
    throw ContractError("matmul: inner dimensions disagree, " + ta.shape_str() + " x " + tb.shape_str());
  }
  Tensor out({n, p});
  matmul_kernel(ta, trans_a, tb, trans_b, out);
  if (!track(a, b)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, b, v, trans_a, trans_b] {
    const Node& nv = node(v);
    Tensor g(nv.value.shape(), nv.grad);
    const Tensor& va = node(a).value;
    const Tensor& vb = node(b).value;
    if (node(a).requires_grad) {
      Tensor da(va.shape());
      if (!trans_a && !trans_b) {
        matmul_kernel(g, false, vb, true, da);  // dA = G * B^T
      } else if (!trans_a && trans_b) {
        matmul_kernel(g, false, vb, false, da);  // dA = G * B
      } else {  // trans_a && !trans_b
        matmul_kernel(vb, false, g, true, da);   // dA = B * G^T
      }
      auto& ga = grad_buf(a);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += da[static_cast<std::int64_t>(i)];
    }
    if (node(b).requires_grad) {
      Tensor db(vb.shape());
      if (!trans_a && !trans_b) {
        matmul_kernel(va, true, g, false, db);  // dB = A^T * G
      } else if (!trans_a && trans_b) {
        matmul_kernel(g, true, va, false, db);  // dB = G^T * A
      } else {
        matmul_kernel(va, false, g, false, db);  // dB = A * G
      }
      auto& gb = grad_buf(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += db[static_cast<std::int64_t>(i)];
    }
  };
  return v;
}

Var Tape::transpose(Var a) {
  const Tensor& ta = value(a);
  check_rank2(ta, "transpose");
  const int n = ta.dim(0), m = ta.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.at2(j, i) = ta.at2(i, j);
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v, n, m] {
    const auto& g = node(v).grad;
    auto& ga = grad_buf(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) ga[static_cast<std::size_t>(i) * m + j] += g[static_cast<std::size_t>(j) * n + i];
  };
  return v;
}

Var Tape::rowwise_dot(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  check_rank2(ta, "rowwise_dot");
  if (!ta.same_shape(tb)) {
    throw ContractError("rowwise_dot: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  }
  const int n = ta.dim(0), d = ta.dim(1);
  Tensor out({n});
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += ta.at2(i, j) * tb.at2(i, j);
    out[i] = s;
  }
  if (!track(a, b)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, b, v, n, d] {
    const auto& g = node(v).grad;
    const Tensor& va = node(a).value;
    const Tensor& vb = node(b).value;
    if (node(a).requires_grad) {
      auto& ga = grad_buf(a);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) ga[static_cast<std::size_t>(i) * d + j] += g[static_cast<std::size_t>(i)] * vb.at2(i, j);
    }
    if (node(b).requires_grad) {
      auto& gb = grad_buf(b);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) gb[static_cast<std::size_t>(i) * d + j] += g[static_cast<std::size_t>(i)] * va.at2(i, j);
    }
  };
  return v;
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  check_rank2(ta, "concat_cols");
  check_rank2(tb, "concat_cols");
  if (ta.dim(0) != tb.dim(0)) {
    throw ContractError("concat_cols: row counts disagree, " + ta.shape_str() + " vs " + tb.shape_str());
  }
  const int n = ta.dim(0), ka = ta.dim(1), kb = tb.dim(1);
  Tensor out({n, ka + kb});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ka; ++j) out.at2(i, j) = ta.at2(i, j);
    for (int j = 0; j < kb; ++j) out.at2(i, ka + j) = tb.at2(i, j);
  }
  if (!track(a, b)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, b, v, n, ka, kb] {
    const auto& g = node(v).grad;
    const int k = ka + kb;
    if (node(a).requires_grad) {
      auto& ga = grad_buf(a);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < ka; ++j) ga[static_cast<std::size_t>(i) * ka + j] += g[static_cast<std::size_t>(i) * k + j];
    }
    if (node(b).requires_grad) {
      auto& gb = grad_buf(b);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < kb; ++j) gb[static_cast<std::size_t>(i) * kb + j] += g[static_cast<std::size_t>(i) * k + ka + j];
    }
  };
  return v;
}

Var Tape::softmax_rows(Var a) {
  const Tensor& ta = value(a);
  check_rank2(ta, "softmax_rows");
  const int n = ta.dim(0), k = ta.dim(1);
  Tensor out(ta.shape());
  for (int i = 0; i < n; ++i) {
    auto p = softmax(ta.row(i));
    for (int j = 0; j < k; ++j) out.at2(i, j) = p[static_cast<std::size_t>(j)];
  }
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v, n, k] {
    const auto& g = node(v).grad;
    const Tensor& y = node(v).value;
    auto& ga = grad_buf(a);
    for (int i = 0; i < n; ++i) {
      double gy = 0.0;
      for (int j = 0; j < k; ++j) gy += g[static_cast<std::size_t>(i) * k + j] * y.at2(i, j);
      for (int j = 0; j < k; ++j) {
        ga[static_cast<std::size_t>(i) * k + j] += y.at2(i, j) * (g[static_cast<std::size_t>(i) * k + j] - gy);
      }
    }
  };
  return v;
}

Var Tape::l2_normalize_rows(Var a) {
  const Tensor& ta = value(a);
  check_rank2(ta, "l2_normalize_rows");
  const int n = ta.dim(0), d = ta.dim(1);
  Tensor out(ta.shape());
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double nm = l2_norm(ta.row(i));
    if (!(nm > 1e-12)) throw DegenerateVectorError("l2_normalize_rows: row " + std::to_string(i) + " has norm <= 1e-12");
    norms[static_cast<std::size_t>(i)] = nm;
    for (int j = 0; j < d; ++j) out.at2(i, j) = ta.at2(i, j) / nm;
  }
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v, n, d, norms = std::move(norms)] {
    const auto& g = node(v).grad;
    const Tensor& y = node(v).value;
    auto& ga = grad_buf(a);
    for (int i = 0; i < n; ++i) {
      double gy = 0.0;
      for (int j = 0; j < d; ++j) gy += g[static_cast<std::size_t>(i) * d + j] * y.at2(i, j);
      for (int j = 0; j < d; ++j) {
        ga[static_cast<std::size_t>(i) * d + j] +=
            (g[static_cast<std::size_t>(i) * d + j] - gy * y.at2(i, j)) / norms[static_cast<std::size_t>(i)];
      }
    }
  };
  return v;
}

Var Tape::logsumexp_rows(Var a) {
  const Tensor& ta = value(a);
  check_rank2(ta, "logsumexp_rows");
  const int n = ta.dim(0), k = ta.dim(1);
  Tensor out({n});
  for (int i = 0; i < n; ++i) {
    double hi = ta.at2(i, 0);
    for (int j = 1; j < k; ++j) hi = std::max(hi, ta.at2(i, j));
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(ta.at2(i, j) - hi);
    out[i] = hi + std::log(s);
  }
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v, n, k] {
    const auto& g = node(v).grad;
    const Tensor& x = node(a).value;
    const Tensor& y = node(v).value;
    auto& ga = grad_buf(a);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        ga[static_cast<std::size_t>(i) * k + j] += g[static_cast<std::size_t>(i)] * std::exp(x.at2(i, j) - y[i]);
      }
    }
  };
  return v;
}

Var Tape::diag(Var a) {
  const Tensor& ta = value(a);
  check_rank2(ta, "diag");
  if (ta.dim(0) != ta.dim(1)) throw ContractError("diag: matrix is not square, " + ta.shape_str());
  const int k = ta.dim(0);
  Tensor out({k});
  for (int i = 0; i < k; ++i) out[i] = ta.at2(i, i);
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v, k] {
    const auto& g = node(v).grad;
    auto& ga = grad_buf(a);
    for (int i = 0; i < k; ++i) ga[static_cast<std::size_t>(i) * k + i] += g[static_cast<std::size_t>(i)];
  };
  return v;
}

Var Tape::sum(Var a) {
  const Tensor& ta = value(a);
  double s = 0.0;
  for (std::int64_t i = 0; i < ta.size(); ++i) s += ta[i];
  Tensor out = Tensor::scalar(s);
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v] {
    const double g = node(v).grad[0];
    auto& ga = grad_buf(a);
    for (double& x : ga) x += g;
  };
  return v;
}

Var Tape::sum_cols(Var a) {
  const Tensor& ta = value(a);
  check_rank2(ta, "sum_cols");
  const int n = ta.dim(0), k = ta.dim(1);
  Tensor out({k});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) out[j] += ta.at2(i, j);
  if (!track(a)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, a, v, n, k] {
    const auto& g = node(v).grad;
    auto& ga = grad_buf(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) ga[static_cast<std::size_t>(i) * k + j] += g[static_cast<std::size_t>(j)];
  };
  return v;
}

namespace {

struct ConvDims {
  int n, h, w, ci, k, co, pad;
};

ConvDims conv_dims(const Tensor& in, const Tensor& w, const Tensor& bias) {
  if (in.rank() != 4) throw ContractError("conv2d: input must be [n,h,w,c], got " + in.shape_str());
  if (w.rank() != 4 || w.dim(0) != w.dim(1) || w.dim(0) % 2 == 0) {
    throw ContractError("conv2d: kernel must be [k,k,ci,co] with odd k, got " + w.shape_str());
  }
  if (w.dim(2) != in.dim(3)) throw ContractError("conv2d: channel mismatch");
  if (bias.rank() != 1 || bias.dim(0) != w.dim(3)) throw ContractError("conv2d: bias shape mismatch");
  return {in.dim(0), in.dim(1), in.dim(2), in.dim(3), w.dim(0), w.dim(3), w.dim(0) / 2};
}

}  // namespace

Var Tape::conv2d(Var in, Var w, Var bias) {
  const Tensor& tin = value(in);
  const Tensor& tw = value(w);
  const Tensor& tb = value(bias);
  const ConvDims d = conv_dims(tin, tw, tb);
  Tensor out({d.n, d.h, d.w, d.co});
  for (int nn = 0; nn < d.n; ++nn) {
    for (int y = 0; y < d.h; ++y) {
      for (int x = 0; x < d.w; ++x) {
        double* o = out.data() + ((static_cast<std::size_t>(nn) * d.h + y) * d.w + x) * d.co;
        for (int c = 0; c < d.co; ++c) o[c] = tb[c];
        for (int dy = 0; dy < d.k; ++dy) {
          const int iy = y + dy - d.pad;
          if (iy < 0 || iy >= d.h) continue;
          for (int dx = 0; dx < d.k; ++dx) {
            const int ix = x + dx - d.pad;
            if (ix < 0 || ix >= d.w) continue;
            const double* iv = tin.data() + ((static_cast<std::size_t>(nn) * d.h + iy) * d.w + ix) * d.ci;
            const double* wv = tw.data() + (static_cast<std::size_t>(dy) * d.k + dx) * d.ci * d.co;
            for (int ci = 0; ci < d.ci; ++ci) {
              const double x0 = iv[ci];
              if (x0 == 0.0) continue;
              const double* wr = wv + static_cast<std::size_t>(ci) * d.co;
              for (int c = 0; c < d.co; ++c) o[c] += x0 * wr[c];
            }
          }
        }
      }
    }
  }
  if (recording_ == Recording::off ||
      !(node(in).requires_grad || node(w).requires_grad || node(bias).requires_grad)) {
    return push(std::move(out), false, nullptr);
  }
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, in, w, bias, v, d] {
    const auto& g = node(v).grad;
    const Tensor& tin = node(in).value;
    const Tensor& tw = node(w).value;
    const bool need_in = node(in).requires_grad;
    const bool need_w = node(w).requires_grad;
    const bool need_b = node(bias).requires_grad;
    std::vector<double>* gi = need_in ? &grad_buf(in) : nullptr;
    std::vector<double>* gw = need_w ? &grad_buf(w) : nullptr;
    std::vector<double>* gb = need_b ? &grad_buf(bias) : nullptr;
    for (int nn = 0; nn < d.n; ++nn) {
      for (int y = 0; y < d.h; ++y) {
        for (int x = 0; x < d.w; ++x) {
          const double* go = g.data() + ((static_cast<std::size_t>(nn) * d.h + y) * d.w + x) * d.co;
          if (gb) {
            for (int c = 0; c < d.co; ++c) (*gb)[static_cast<std::size_t>(c)] += go[c];
          }
          for (int dy = 0; dy < d.k; ++dy) {
            const int iy = y + dy - d.pad;
            if (iy < 0 || iy >= d.h) continue;
            for (int dx = 0; dx < d.k; ++dx) {
              const int ix = x + dx - d.pad;
              if (ix < 0 || ix >= d.w) continue;
              const std::size_t in_off = ((static_cast<std::size_t>(nn) * d.h + iy) * d.w + ix) * d.ci;
              const std::size_t w_off = (static_cast<std::size_t>(dy) * d.k + dx) * d.ci * d.co;
              for (int ci = 0; ci < d.ci; ++ci) {
                const double x0 = tin[static_cast<std::int64_t>(in_off) + ci];
                double acc = 0.0;
                const double* wr = tw.data() + w_off + static_cast<std::size_t>(ci) * d.co;
                for (int c = 0; c < d.co; ++c) {
                  if (gw) (*gw)[w_off + static_cast<std::size_t>(ci) * d.co + c] += x0 * go[c];
                  acc += wr[c] * go[c];
                }
                if (gi) (*gi)[in_off + static_cast<std::size_t>(ci)] += acc;
              }
            }
          }
        }
      }
    }
  };
  return v;
}

Var Tape::avgpool2(Var in) {
  const Tensor& tin = value(in);
  if (tin.rank() != 4) throw ContractError("avgpool2: input must be [n,h,w,c], got " + tin.shape_str());
  const int n = tin.dim(0), h = tin.dim(1), w = tin.dim(2), c = tin.dim(3);
  if (h % 2 != 0 || w % 2 != 0) throw ContractError("avgpool2: height and width must be even, got " + tin.shape_str());
  const int oh = h / 2, ow = w / 2;
  Tensor out({n, oh, ow, c});
  auto idx = [&](int nn, int y, int x, int cc) {
    return ((static_cast<std::size_t>(nn) * h + y) * w + x) * c + cc;
  };
  for (int nn = 0; nn < n; ++nn)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        for (int cc = 0; cc < c; ++cc) {
          out[((static_cast<std::size_t>(nn) * oh + y) * ow + x) * c + cc] =
              0.25 * (tin[idx(nn, 2 * y, 2 * x, cc)] + tin[idx(nn, 2 * y, 2 * x + 1, cc)] +
                      tin[idx(nn, 2 * y + 1, 2 * x, cc)] + tin[idx(nn, 2 * y + 1, 2 * x + 1, cc)]);
        }
  if (!track(in)) return push(std::move(out), false, nullptr);
  Var v = push(std::move(out), true, nullptr);
  node(v).backprop = [this, in, v, n, h, w, c, oh, ow] {
    const auto& g = node(v).grad;
    auto& gi = grad_buf(in);
    auto idx = [&](int nn, int y, int x, int cc) {
      return ((static_cast<std::size_t>(nn) * h + y) * w + x) * c + cc;
    };
    for (int nn = 0; nn < n; ++nn)
      for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
          for (int cc = 0; cc < c; ++cc) {
            const double gv = 0.25 * g[((static_cast<std::size_t>(nn) * oh + y) * ow + x) * c + cc];
            gi[idx(nn, 2 * y, 2 * x, cc)] += gv;
            gi[idx(nn, 2 * y, 2 * x + 1, cc)] += gv;
            gi[idx(nn, 2 * y + 1, 2 * x, cc)] += gv;
            gi[idx(nn, 2 * y + 1, 2 * x + 1, cc)] += gv;
          }
  };
  return v;
}

void Tape::backward(Var root) {
  if (recording_ == Recording::off) throw StateError("backward() on a non-recording tape");
  if (backward_done_) throw StateError("backward() may run once per tape");
  const Tensor& r = value(root);
  if (r.size() != 1) throw ContractError("backward: root must be scalar, got " + r.shape_str());
  backward_done_ = true;
  // Leaves unreachable from the root still report zero gradients.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].source != nullptr) grad_buf(Var{static_cast<int>(i)});
  }
  if (node(root).requires_grad) grad_buf(root)[0] = 1.0;
  for (int i = root.index; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backprop && !n.grad.empty()) n.backprop();
  }
  for (Node& n : nodes_) {
    if (n.source == nullptr) continue;
    n.source->ensure_grad();
    std::copy(n.grad.begin(), n.grad.end(), n.source->grad().begin());
  }
}

}  // namespace mcod

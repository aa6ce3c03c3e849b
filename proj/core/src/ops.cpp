// Copyright 2026 The lsopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lsopt/ops.hpp"

#include <cmath>
#include <utility>

namespace lsopt {

namespace {

constexpr double kGeluCoeff = 0.044715;
const double kGeluScale = std::sqrt(2.0 / M_PI);

void maybe_record(Tensor& out, std::vector<Tensor> inputs, std::function<void()> pull) {
  Tape* tape = Tape::active();
  if (tape == nullptr) return;
  bool any = false;
  for (const Tensor& in : inputs) any = any || in.requires_grad();
  if (!any) return;
  out.set_requires_grad(true);
  tape->record(out, std::move(inputs), std::move(pull));
}

// True when `small` is a scalar or its shape equals the trailing dimensions
// of `big`, i.e. tiling `small` every small.size() elements lines up with
// the row-major layout of `big`.
bool tiles_onto(const Tensor& small, const Tensor& big) {
  if (small.size() == 1) return true;
  const auto& s = small.shape();
  const auto& b = big.shape();
  if (s.size() > b.size()) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[s.size() - 1 - i] != b[b.size() - 1 - i]) return false;
  }
  return true;
}

void check_binary_shapes(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return;
  if (tiles_onto(b, a) || tiles_onto(a, b)) return;
  throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                   shape_string(b.shape()) + " are not broadcast-compatible");
}

// out[i] = f(a[i], b[i % b.size()]) with a the larger operand.
template <typename F>
std::vector<double> tiled_forward(const Tensor& big, const Tensor& small, F f) {
  const auto& x = big.values();
  const auto& y = small.values();
  const std::size_t m = y.size();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i], y[i % m]);
  return out;
}

struct MatShape {
  std::size_t batches, rows, inner, cols;
};

MatShape matmul_shape(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() == 2 && sb.size() == 2) {
    if (sa[1] != sb[0]) {
      throw ShapeError("matmul: inner dimensions of " + shape_string(sa) + " and " +
                       shape_string(sb) + " disagree");
    }
    return {1, sa[0], sa[1], sb[1]};
  }
  if (sa.size() == 3 && sb.size() == 3) {
    if (sa[0] != sb[0] || sa[2] != sb[1]) {
      throw ShapeError("matmul: batched shapes " + shape_string(sa) + " and " + shape_string(sb) +
                       " disagree");
    }
    return {sa[0], sa[1], sa[2], sb[2]};
  }
  throw ShapeError("matmul: expected two rank-2 or two rank-3 tensors, got " + shape_string(sa) +
                   " and " + shape_string(sb));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const MatShape ms = matmul_shape(a, b);
  const std::size_t B = ms.batches, m = ms.rows, k = ms.inner, n = ms.cols;

  std::vector<std::size_t> out_shape =
      a.rank() == 2 ? std::vector<std::size_t>{m, n} : std::vector<std::size_t>{B, m, n};
  Tensor out(std::move(out_shape));
  {
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    double* pc = out.values().data();
    for (std::size_t bt = 0; bt < B; ++bt) {
      const double* A = pa + bt * m * k;
      const double* Bm = pb + bt * k * n;
      double* C = pc + bt * m * n;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double av = A[i * k + kk];
          const double* brow = Bm + kk * n;
          double* crow = C + i * n;
          for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
      }
    }
  }

  maybe_record(out, {a, b}, [a, b, out, B, m, k, n]() {
    const double* pa = a.values().data();
    const double* pb = b.values().data();
    const double* pg = out.grad().data();
    for (std::size_t bt = 0; bt < B; ++bt) {
      const double* A = pa + bt * m * k;
      const double* Bm = pb + bt * k * n;
      const double* G = pg + bt * m * n;
      if (a.requires_grad()) {
        double* dA = a.node()->grad.data() + bt * m * k;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            double s = 0.0;
            const double* grow = G + i * n;
            const double* brow = Bm + kk * n;
            for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
            dA[i * k + kk] += s;
          }
        }
      }
      if (b.requires_grad()) {
        double* dB = b.node()->grad.data() + bt * k * n;
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = G + i * n;
          for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = A[i * k + kk];
            double* drow = dB + kk * n;
            for (std::size_t j = 0; j < n; ++j) drow[j] += av * grow[j];
          }
        }
      }
    }
  });
  return out;
}

namespace {

enum class Pairwise { add, sub, mul };

Tensor binary_op(const char* name, Pairwise kind, const Tensor& a, const Tensor& b) {
  check_binary_shapes(name, a, b);
  const bool b_small = tiles_onto(b, a) && a.size() >= b.size();
  const Tensor& big = b_small ? a : b;
  const Tensor& small = b_small ? b : a;

  auto fwd = [kind, b_small](double x, double y) {
    // x comes from the larger operand; restore argument order for sub.
    const double lhs = b_small ? x : y;
    const double rhs = b_small ? y : x;
    switch (kind) {
      case Pairwise::add: return lhs + rhs;
      case Pairwise::sub: return lhs - rhs;
      case Pairwise::mul: return lhs * rhs;
    }
    return 0.0;
  };
  Tensor out(big.shape(), tiled_forward(big, small, fwd));

  maybe_record(out, {a, b}, [kind, big, small, b_small, out]() {
    const auto& g = out.grad();
    const std::size_t m = small.size();
    const double big_sign = (kind == Pairwise::sub && !b_small) ? -1.0 : 1.0;
    const double small_sign = (kind == Pairwise::sub && b_small) ? -1.0 : 1.0;
    if (big.requires_grad()) {
      auto& db = big.node()->grad;
      if (kind == Pairwise::mul) {
        const auto& sv = small.values();
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * sv[i % m];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += big_sign * g[i];
      }
    }
    if (small.requires_grad()) {
      auto& ds = small.node()->grad;
      if (kind == Pairwise::mul) {
        const auto& bv = big.values();
        for (std::size_t i = 0; i < g.size(); ++i) ds[i % m] += g[i] * bv[i];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) ds[i % m] += small_sign * g[i];
      }
    }
  });
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op("add", Pairwise::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op("sub", Pairwise::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op("mul", Pairwise::mul, a, b); }

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = factor * a.values()[i];
  Tensor out(a.shape(), std::move(v));
  maybe_record(out, {a}, [a, out, factor]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const auto& g = out.grad();
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += factor * g[i];
  });
  return out;
}

Tensor relu(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  Tensor out(a.shape(), std::move(v));
  maybe_record(out, {a}, [a, out]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const auto& g = out.grad();
    const auto& x = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) da[i] += g[i];
    }
  });
  return out;
}

Tensor gelu(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = a.values()[i];
    const double u = kGeluScale * (x + kGeluCoeff * x * x * x);
    v[i] = 0.5 * x * (1.0 + std::tanh(u));
  }
  Tensor out(a.shape(), std::move(v));
  maybe_record(out, {a}, [a, out]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const auto& g = out.grad();
    const auto& xs = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = xs[i];
      const double u = kGeluScale * (x + kGeluCoeff * x * x * x);
      const double t = std::tanh(u);
      const double du = kGeluScale * (1.0 + 3.0 * kGeluCoeff * x * x);
      da[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du);
    }
  });
  return out;
}

Tensor exp(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(a.values()[i]);
  Tensor out(a.shape(), std::move(v));
  maybe_record(out, {a}, [a, out]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const auto& g = out.grad();
    const auto& y = out.values();
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i];
  });
  return out;
}

Tensor log(const Tensor& a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (a.values()[i] <= 0.0) {
      throw std::domain_error("log: non-positive entry " + std::to_string(a.values()[i]));
    }
    v[i] = std::log(a.values()[i]);
  }
  Tensor out(a.shape(), std::move(v));
  maybe_record(out, {a}, [a, out]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const auto& g = out.grad();
    const auto& x = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / x[i];
  });
  return out;
}

Tensor softmax_last(const Tensor& a) {
  if (a.rank() < 1) throw ShapeError("softmax_last: requires rank >= 1");
  const std::size_t n = a.shape().back();
  const std::size_t rows = a.size() / n;
  std::vector<double> v(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = a.values().data() + r * n;
    double* y = v.data() + r * n;
    double mx = x[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  Tensor out(a.shape(), std::move(v));
  maybe_record(out, {a}, [a, out, rows, n]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const auto& g = out.grad();
    const auto& y = out.values();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = g.data() + r * n;
      const double* yr = y.data() + r * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += gr[j] * yr[j];
      double* dar = da.data() + r * n;
      for (std::size_t j = 0; j < n; ++j) dar[j] += yr[j] * (gr[j] - dot);
    }
  });
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw ShapeError("softmax_cross_entropy: logits must be [batch,classes], got " +
                     shape_string(logits.shape()));
  }
  const std::size_t batch = logits.shape()[0];
  const std::size_t classes = logits.shape()[1];
  if (batch == 0) throw std::invalid_argument("softmax_cross_entropy: empty batch");
  if (labels.size() != batch) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for batch of " + std::to_string(batch));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(y) +
                              " outside [0," + std::to_string(classes) + ")");
    }
  }

  auto probs = std::make_shared<std::vector<double>>(logits.size());
  double total = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const double* x = logits.values().data() + r * classes;
    double* p = probs->data() + r * classes;
    double mx = x[0];
    for (std::size_t j = 1; j < classes; ++j) mx = std::max(mx, x[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      p[j] = std::exp(x[j] - mx);
      z += p[j];
    }
    for (std::size_t j = 0; j < classes; ++j) p[j] /= z;
    total += std::log(z) - (x[labels[r]] - mx);
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(batch));

  std::vector<int> labels_copy(labels.begin(), labels.end());
  maybe_record(out, {logits},
               [logits, out, probs, labels_copy = std::move(labels_copy), batch, classes]() {
                 if (!logits.requires_grad()) return;
                 const double gl = out.grad()[0] / static_cast<double>(batch);
                 auto& dl = logits.node()->grad;
                 for (std::size_t r = 0; r < batch; ++r) {
                   const double* p = probs->data() + r * classes;
                   double* d = dl.data() + r * classes;
                   for (std::size_t j = 0; j < classes; ++j) d[j] += gl * p[j];
                   d[labels_copy[r]] -= gl;
                 }
               });
  return out;
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  if (x.rank() != 2) {
    throw ShapeError("layernorm: input must be [rows,d], got " + shape_string(x.shape()));
  }
  const std::size_t rows = x.shape()[0];
  const std::size_t d = x.shape()[1];
  if (gain.size() != d || bias.size() != d) {
    throw ShapeError("layernorm: gain/bias must have " + std::to_string(d) + " entries");
  }

  auto normalized = std::make_shared<std::vector<double>>(x.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  std::vector<double> v(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.values().data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    (*inv_std)[r] = inv;
    double* nr = normalized->data() + r * d;
    double* vr = v.data() + r * d;
    for (std::size_t j = 0; j < d; ++j) {
      nr[j] = (xr[j] - mean) * inv;
      vr[j] = gain.values()[j] * nr[j] + bias.values()[j];
    }
  }
  Tensor out(x.shape(), std::move(v));

  maybe_record(out, {x, gain, bias}, [x, gain, bias, out, normalized, inv_std, rows, d]() {
    const auto& g = out.grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = g.data() + r * d;
      const double* nr = normalized->data() + r * d;
      if (gain.requires_grad()) {
        auto& dg = gain.node()->grad;
        for (std::size_t j = 0; j < d; ++j) dg[j] += gr[j] * nr[j];
      }
      if (bias.requires_grad()) {
        auto& db = bias.node()->grad;
        for (std::size_t j = 0; j < d; ++j) db[j] += gr[j];
      }
      if (x.requires_grad()) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double dn = gr[j] * gain.values()[j];
          s1 += dn;
          s2 += dn * nr[j];
        }
        const double inv = (*inv_std)[r];
        const double nd = static_cast<double>(d);
        auto& dx = x.node()->grad;
        for (std::size_t j = 0; j < d; ++j) {
          const double dn = gr[j] * gain.values()[j];
          dx[r * d + j] += inv * (dn - s1 / nd - nr[j] * s2 / nd);
        }
      }
    }
  });
  return out;
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) {
    throw ShapeError("embedding: table must be [rows,d], got " + shape_string(table.shape()));
  }
  const std::size_t rows = table.shape()[0];
  const std::size_t d = table.shape()[1];
  std::vector<double> v(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= rows) {
      throw std::out_of_range("embedding: id " + std::to_string(id) + " outside [0," +
                              std::to_string(rows) + ")");
    }
    const double* src = table.values().data() + static_cast<std::size_t>(id) * d;
    std::copy(src, src + d, v.data() + i * d);
  }
  Tensor out({ids.size(), d}, std::move(v));

  std::vector<int> ids_copy(ids.begin(), ids.end());
  maybe_record(out, {table}, [table, out, ids_copy = std::move(ids_copy), d]() {
    if (!table.requires_grad()) return;
    auto& dt = table.node()->grad;
    const auto& g = out.grad();
    for (std::size_t i = 0; i < ids_copy.size(); ++i) {
      double* drow = dt.data() + static_cast<std::size_t>(ids_copy[i]) * d;
      const double* grow = g.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) drow[j] += grow[j];
    }
  });
  return out;
}

Tensor transpose_last(const Tensor& a) {
  if (a.rank() != 2 && a.rank() != 3) {
    throw ShapeError("transpose_last: requires rank 2 or 3, got " + shape_string(a.shape()));
  }
  const std::size_t B = a.rank() == 3 ? a.shape()[0] : 1;
  const std::size_t m = a.shape()[a.rank() - 2];
  const std::size_t n = a.shape()[a.rank() - 1];
  std::vector<std::size_t> out_shape = a.shape();
  std::swap(out_shape[a.rank() - 2], out_shape[a.rank() - 1]);

  std::vector<double> v(a.size());
  for (std::size_t bt = 0; bt < B; ++bt) {
    const double* src = a.values().data() + bt * m * n;
    double* dst = v.data() + bt * m * n;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
    }
  }
  Tensor out(std::move(out_shape), std::move(v));

  maybe_record(out, {a}, [a, out, B, m, n]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const auto& g = out.grad();
    for (std::size_t bt = 0; bt < B; ++bt) {
      const double* gsrc = g.data() + bt * m * n;
      double* dst = da.data() + bt * m * n;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) dst[i * n + j] += gsrc[j * m + i];
      }
    }
  });
  return out;
}

Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_string(a.shape()) + " as " +
                     shape_string(shape));
  }
  Tensor out(std::move(shape), a.values());
  maybe_record(out, {a}, [a, out]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const auto& g = out.grad();
    for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
  });
  return out;
}

Tensor take_position(const Tensor& x, std::size_t pos) {
  if (x.rank() != 3) {
    throw ShapeError("take_position: requires [B,S,d], got " + shape_string(x.shape()));
  }
  const std::size_t B = x.shape()[0], S = x.shape()[1], d = x.shape()[2];
  if (pos >= S) throw std::out_of_range("take_position: position out of range");
  std::vector<double> v(B * d);
  for (std::size_t b = 0; b < B; ++b) {
    const double* src = x.values().data() + (b * S + pos) * d;
    std::copy(src, src + d, v.data() + b * d);
  }
  Tensor out({B, d}, std::move(v));
  maybe_record(out, {x}, [x, out, B, S, d, pos]() {
    if (!x.requires_grad()) return;
    auto& dx = x.node()->grad;
    const auto& g = out.grad();
    for (std::size_t b = 0; b < B; ++b) {
      double* dst = dx.data() + (b * S + pos) * d;
      const double* src = g.data() + b * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
  return out;
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  Tensor out = Tensor::scalar(s);
  maybe_record(out, {a}, [a, out]() {
    if (!a.requires_grad()) return;
    auto& da = a.node()->grad;
    const double g = out.grad()[0];
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g;
  });
  return out;
}

}  // namespace lsopt

/* Copyright 2026 The DeWave-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "dewave/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "dewave/errors.hpp"

namespace dewave::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using detail::Node;
using detail::make_result;

ConstMap cmap(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
MutMap mmap(std::vector<double>& v, std::size_t r, std::size_t c) {
  return MutMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a) {
  throw ShapeError(std::string(op) + ": unsupported shape " + shape_str(a.shape()));
}
[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) +
                   " and " + shape_str(b.shape()));
}

void require_rank(const char* op, const Tensor& x, std::size_t rank) {
  if (!x.defined() || x.rank() != rank) {
    if (!x.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
    shape_fail(op, x);
  }
}

bool wants(const Node& n, std::size_t i) { return n.parents[i]->requires_grad; }
std::vector<double>& pgrad(Node& n, std::size_t i) { return n.parents[i]->grad_buffer(); }
const std::vector<double>& pval(const Node& n, std::size_t i) { return n.parents[i]->value; }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  if (b.dim(0) != k) shape_fail("matmul", a, b);
  std::vector<double> out(n * m);
  mmap(out, n, m).noalias() = cmap(a.node()->value, n, k) * cmap(b.node()->value, k, m);
  return make_result("matmul", {n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
    auto dy = cmap(self.grad, n, m);
    if (wants(self, 0)) mmap(pgrad(self, 0), n, k).noalias() += dy * cmap(pval(self, 1), k, m).transpose();
    if (wants(self, 1)) mmap(pgrad(self, 1), k, m).noalias() += cmap(pval(self, 0), n, k).transpose() * dy;
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank("matmul_nt", a, 2);
  require_rank("matmul_nt", b, 2);
  const std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(0);
  if (b.dim(1) != k) shape_fail("matmul_nt", a, b);
  std::vector<double> out(n * m);
  mmap(out, n, m).noalias() = cmap(a.node()->value, n, k) * cmap(b.node()->value, m, k).transpose();
  return make_result("matmul_nt", {n, m}, std::move(out), {a, b}, [n, k, m](Node& self) {
    auto dy = cmap(self.grad, n, m);
    if (wants(self, 0)) mmap(pgrad(self, 0), n, k).noalias() += dy * cmap(pval(self, 1), m, k);
    if (wants(self, 1)) mmap(pgrad(self, 1), m, k).noalias() += dy.transpose() * cmap(pval(self, 0), n, k);
  });
}

Tensor transpose(const Tensor& x) {
  require_rank("transpose", x, 2);
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<double> out(r * c);
  mmap(out, c, r) = cmap(x.node()->value, r, c).transpose();
  return make_result("transpose", {c, r}, std::move(out), {x}, [r, c](Node& self) {
    mmap(pgrad(self, 0), r, c) += cmap(self.grad, c, r).transpose();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("add", a, b);
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!wants(self, p)) continue;
      auto& g = pgrad(self, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("sub", a, b);
  std::vector<double> out(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (wants(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul", a, b);
  std::vector<double> out(a.numel());
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = pval(self, 0);
    const auto& bv = pval(self, 1);
    if (wants(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (wants(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& x, double s) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (auto& v : out) v *= s;
  return make_result("scale", x.shape(), std::move(out), {x}, [s](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank("add_row_bias", x, 2);
  require_rank("add_row_bias", bias, 1);
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (bias.dim(0) != c) shape_fail("add_row_bias", x, bias);
  std::vector<double> out(x.values().begin(), x.values().end());
  auto bv = bias.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
  return make_result("add_row_bias", x.shape(), std::move(out), {x, bias}, [r, c](Node& self) {
    if (wants(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
    }
  });
}

Tensor add_col_bias(const Tensor& x, const Tensor& bias) {
  require_rank("add_col_bias", x, 2);
  require_rank("add_col_bias", bias, 1);
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (bias.dim(0) != r) shape_fail("add_col_bias", x, bias);
  std::vector<double> out(x.values().begin(), x.values().end());
  auto bv = bias.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[i];
  return make_result("add_col_bias", x.shape(), std::move(out), {x, bias}, [r, c](Node& self) {
    if (wants(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[i] += self.grad[i * c + j];
    }
  });
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.numel());
  auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  return make_result("relu", x.shape(), std::move(out), {x}, [](Node& self) {
    const auto& in = pval(self, 0);
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in[i] > 0.0) g[i] += self.grad[i];
  });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  std::vector<double> out(x.numel());
  auto in = x.values();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 0.5 * in[i] * (1.0 + std::erf(in[i] * kInvSqrt2));
  return make_result("gelu", x.shape(), std::move(out), {x}, [](Node& self) {
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    const auto& in = pval(self, 0);
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = in[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      g[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 && x.rank() != 2) shape_fail("softmax", x);
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(x.numel());
  auto in = x.values();
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = in.data() + i * c;
    double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out[i * c + j] = std::exp(row[j] - mx);
      z += out[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  std::vector<double> y = out;
  return make_result("softmax", x.shape(), std::move(out), {x}, [r, c, y = std::move(y)](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += y[i * c + j] * (self.grad[i * c + j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() != 1 && x.rank() != 2) shape_fail("layer_norm", x);
  const std::size_t r = x.rows(), c = x.cols();
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c}) shape_fail("layer_norm", x, gamma);
  auto in = x.values();
  auto gv = gamma.values();
  auto bv = beta.values();
  std::vector<double> xhat(x.numel()), rstd(r), out(x.numel());
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = in.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(c);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mu) * rstd[i];
      out[i * c + j] = xhat[i * c + j] * gv[j] + bv[j];
    }
  }
  return make_result(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [r, c, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
        const auto& gv = pval(self, 1);
        const auto& dy = self.grad;
        if (wants(self, 0)) {
          auto& g = pgrad(self, 0);
          for (std::size_t i = 0; i < r; ++i) {
            double mean_d = 0.0, mean_dx = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              const double d = dy[i * c + j] * gv[j];
              mean_d += d;
              mean_dx += d * xhat[i * c + j];
            }
            mean_d /= static_cast<double>(c);
            mean_dx /= static_cast<double>(c);
            for (std::size_t j = 0; j < c; ++j) {
              const double d = dy[i * c + j] * gv[j];
              g[i * c + j] += rstd[i] * (d - mean_d - xhat[i * c + j] * mean_dx);
            }
          }
        }
        if (wants(self, 1)) {
          auto& g = pgrad(self, 1);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g[j] += dy[i * c + j] * xhat[i * c + j];
        }
        if (wants(self, 2)) {
          auto& g = pgrad(self, 2);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g[j] += dy[i * c + j];
        }
      });
}

Tensor standardize_rows(const Tensor& x, std::size_t prefix, double eps) {
  require_rank("standardize_rows", x, 2);
  const std::size_t r = x.rows(), c = x.cols();
  if (prefix == 0 || prefix > c) shape_fail("standardize_rows", x);
  auto in = x.values();
  std::vector<double> xhat(x.numel()), rstd(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = in.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < prefix; ++j) mu += row[j];
    mu /= static_cast<double>(prefix);
    double var = 0.0;
    for (std::size_t j = 0; j < prefix; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(prefix);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) xhat[i * c + j] = (row[j] - mu) * rstd[i];
  }
  std::vector<double> out = xhat;
  return make_result("standardize_rows", x.shape(), std::move(out), {x},
                     [r, c, prefix, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
                       if (!wants(self, 0)) return;
                       const auto& dy = self.grad;
                       auto& g = pgrad(self, 0);
                       const double p = static_cast<double>(prefix);
                       for (std::size_t i = 0; i < r; ++i) {
                         double sum_d = 0.0, sum_dx = 0.0;
                         for (std::size_t j = 0; j < c; ++j) {
                           sum_d += dy[i * c + j];
                           sum_dx += dy[i * c + j] * xhat[i * c + j];
                         }
                         for (std::size_t j = 0; j < c; ++j) {
                           double d = dy[i * c + j];
                           if (j < prefix) d -= (sum_d + xhat[i * c + j] * sum_dx) / p;
                           g[i * c + j] += rstd[i] * d;
                         }
                       }
                     });
}

Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride) {
  require_rank("conv1d", x, 2);
  require_rank("conv1d", w, 3);
  require_rank("conv1d", b, 1);
  const std::size_t cin = x.dim(0), len = x.dim(1);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin || b.dim(0) != cout) shape_fail("conv1d", x, w);
  if (stride == 0 || k == 0) throw ShapeError("conv1d: kernel and stride must be positive");
  if (len < k) {
    throw ShapeError("conv1d: input length " + std::to_string(len) + " shorter than kernel " +
                     std::to_string(k));
  }
  const std::size_t lout = (len - k) / stride + 1;
  // im2col: col[(ci * k + j), t] = x[ci, t * stride + j]
  auto col = std::make_shared<std::vector<double>>(cin * k * lout);
  auto xv = x.values();
  for (std::size_t ci = 0; ci < cin; ++ci)
    for (std::size_t j = 0; j < k; ++j) {
      double* dst = col->data() + (ci * k + j) * lout;
      const double* src = xv.data() + ci * len + j;
      for (std::size_t t = 0; t < lout; ++t) dst[t] = src[t * stride];
    }
  std::vector<double> out(cout * lout);
  auto y = mmap(out, cout, lout);
  y.noalias() = cmap(w.node()->value, cout, cin * k) * cmap(*col, cin * k, lout);
  auto bv = b.values();
  for (std::size_t co = 0; co < cout; ++co) y.row(static_cast<Eigen::Index>(co)).array() += bv[co];
  return make_result(
      "conv1d", {cout, lout}, std::move(out), {x, w, b},
      [=](Node& self) {
        auto dy = cmap(self.grad, cout, lout);
        if (wants(self, 1)) mmap(pgrad(self, 1), cout, cin * k).noalias() += dy * cmap(*col, cin * k, lout).transpose();
        if (wants(self, 2)) {
          auto& g = pgrad(self, 2);
          for (std::size_t co = 0; co < cout; ++co) g[co] += dy.row(static_cast<Eigen::Index>(co)).sum();
        }
        if (wants(self, 0)) {
          RowMat dcol = cmap(pval(self, 1), cout, cin * k).transpose() * dy;
          auto& g = pgrad(self, 0);
          for (std::size_t ci = 0; ci < cin; ++ci)
            for (std::size_t j = 0; j < k; ++j) {
              const double* src = dcol.data() + (ci * k + j) * lout;
              double* dst = g.data() + ci * len + j;
              for (std::size_t t = 0; t < lout; ++t) dst[t * stride] += src[t];
            }
        }
      });
}

Tensor transpose_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride) {
  require_rank("transpose_conv1d", x, 2);
  require_rank("transpose_conv1d", w, 3);
  require_rank("transpose_conv1d", b, 1);
  const std::size_t cin = x.dim(0), len = x.dim(1);
  const std::size_t cout = w.dim(1), k = w.dim(2);
  if (w.dim(0) != cin || b.dim(0) != cout) shape_fail("transpose_conv1d", x, w);
  if (stride == 0 || k == 0 || len == 0) throw ShapeError("transpose_conv1d: empty kernel, stride or input");
  const std::size_t lout = (len - 1) * stride + k;
  // cols[(co * k + j), t] contributes to out[co, t * stride + j]
  RowMat cols = cmap(w.node()->value, cin, cout * k).transpose() * cmap(x.node()->value, cin, len);
  std::vector<double> out(cout * lout, 0.0);
  auto bv = b.values();
  for (std::size_t co = 0; co < cout; ++co) {
    double* dst = out.data() + co * lout;
    for (std::size_t t = 0; t < lout; ++t) dst[t] = bv[co];
    for (std::size_t j = 0; j < k; ++j) {
      const double* src = cols.data() + (co * k + j) * len;
      for (std::size_t t = 0; t < len; ++t) dst[t * stride + j] += src[t];
    }
  }
  return make_result(
      "transpose_conv1d", {cout, lout}, std::move(out), {x, w, b},
      [=](Node& self) {
        const auto& dy = self.grad;
        RowMat dcols(static_cast<Eigen::Index>(cout * k), static_cast<Eigen::Index>(len));
        for (std::size_t co = 0; co < cout; ++co)
          for (std::size_t j = 0; j < k; ++j) {
            double* dst = dcols.data() + (co * k + j) * len;
            const double* src = dy.data() + co * lout + j;
            for (std::size_t t = 0; t < len; ++t) dst[t] = src[t * stride];
          }
        if (wants(self, 1)) mmap(pgrad(self, 1), cin, cout * k).noalias() += cmap(pval(self, 0), cin, len) * dcols.transpose();
        if (wants(self, 0)) mmap(pgrad(self, 0), cin, len).noalias() += cmap(pval(self, 1), cin, cout * k) * dcols;
        if (wants(self, 2)) {
          auto& g = pgrad(self, 2);
          for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t t = 0; t < lout; ++t) g[co] += dy[co * lout + t];
        }
      });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
  require_rank("embedding_lookup", table, 2);
  const std::size_t v = table.dim(0), d = table.dim(1);
  std::vector<double> out(ids.size() * d);
  auto tv = table.values();
  std::vector<int> idv(ids.begin(), ids.end());
  for (std::size_t i = 0; i < idv.size(); ++i) {
    if (idv[i] < 0 || static_cast<std::size_t>(idv[i]) >= v) {
      throw RangeError("embedding_lookup: id " + std::to_string(idv[i]) + " outside table of " +
                       std::to_string(v) + " rows");
    }
    std::copy_n(tv.data() + static_cast<std::size_t>(idv[i]) * d, d, out.data() + i * d);
  }
  const std::size_t count = idv.size();
  return make_result("embedding_lookup", {count, d}, std::move(out), {table},
                     [d, idv = std::move(idv)](Node& self) {
                       auto& g = pgrad(self, 0);
                       for (std::size_t i = 0; i < idv.size(); ++i) {
                         double* dst = g.data() + static_cast<std::size_t>(idv[i]) * d;
                         for (std::size_t j = 0; j < d; ++j) dst[j] += self.grad[i * d + j];
                       }
                     });
}

Tensor mean_squared_error(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mean_squared_error", a, b);
  if (a.numel() == 0) throw InputError("mean_squared_error: empty input");
  auto av = a.values();
  auto bv = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += (av[i] - bv[i]) * (av[i] - bv[i]);
  const double n = static_cast<double>(av.size());
  return make_result("mean_squared_error", {1}, {acc / n}, {a, b}, [n](Node& self) {
    const auto& av = pval(self, 0);
    const auto& bv = pval(self, 1);
    const double g0 = 2.0 * self.grad[0] / n;
    if (wants(self, 0)) {
      auto& g = pgrad(self, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * (av[i] - bv[i]);
    }
    if (wants(self, 1)) {
      auto& g = pgrad(self, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= g0 * (av[i] - bv[i]);
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_index) {
  if (logits.rank() != 2) shape_fail("cross_entropy", logits);
  const std::size_t n = logits.dim(0), v = logits.dim(1);
  if (targets.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                     shape_str(logits.shape()));
  }
  auto lv = logits.values();
  std::vector<double> probs(n * v);
  std::vector<int> tv(targets.begin(), targets.end());
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = lv.data() + i * v;
    const double mx = *std::max_element(row, row + v);
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      probs[i * v + j] = std::exp(row[j] - mx);
      z += probs[i * v + j];
    }
    for (std::size_t j = 0; j < v; ++j) probs[i * v + j] /= z;
    if (tv[i] == ignore_index) continue;
    if (tv[i] < 0 || static_cast<std::size_t>(tv[i]) >= v) {
      throw RangeError("cross_entropy: target " + std::to_string(tv[i]) + " outside " + std::to_string(v) +
                       " classes");
    }
    total += (mx + std::log(z)) - row[tv[i]];
    ++count;
  }
  const double denom = count ? static_cast<double>(count) : 1.0;
  return make_result("cross_entropy", {1}, {total / denom}, {logits},
                     [n, v, denom, ignore_index, tv = std::move(tv), probs = std::move(probs)](Node& self) {
                       auto& g = pgrad(self, 0);
                       const double s = self.grad[0] / denom;
                       for (std::size_t i = 0; i < n; ++i) {
                         if (tv[i] == ignore_index) continue;
                         for (std::size_t j = 0; j < v; ++j) g[i * v + j] += s * probs[i * v + j];
                         g[i * v + static_cast<std::size_t>(tv[i])] -= s;
                       }
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InputError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.cols() != c) shape_fail("concat_rows", parts[0], p);
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  return make_result("concat_rows", {r, c}, std::move(out), parts, [offsets](Node& self) {
    for (std::size_t p = 0; p < offsets.size(); ++p) {
      if (!wants(self, p)) continue;
      auto& g = pgrad(self, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offsets[p] + i];
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InputError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.rows() != r) shape_fail("concat_cols", parts[0], p);
    widths.push_back(p.cols());
    c += p.cols();
  }
  std::vector<double> out(r * c);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    auto pv = p.values();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(pv.data() + i * w, w, out.data() + i * c + off);
    off += w;
  }
  return make_result("concat_cols", {r, c}, std::move(out), parts, [r, c, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      const std::size_t w = widths[p];
      if (wants(self, p)) {
        auto& g = pgrad(self, p);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < w; ++j) g[i * w + j] += self.grad[i * c + off + j];
      }
      off += w;
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank("slice_rows", x, 2);
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (begin > end || end > r) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_str(x.shape()));
  }
  auto xv = x.values();
  std::vector<double> out(xv.begin() + static_cast<std::ptrdiff_t>(begin * c),
                          xv.begin() + static_cast<std::ptrdiff_t>(end * c));
  return make_result("slice_rows", {end - begin, c}, std::move(out), {x}, [begin, c](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * c + i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank("slice_cols", x, 2);
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (begin > end || end > c) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_str(x.shape()));
  }
  const std::size_t w = end - begin;
  auto xv = x.values();
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i) std::copy_n(xv.data() + i * c + begin, w, out.data() + i * w);
  return make_result("slice_cols", {r, w}, std::move(out), {x}, [r, c, w, begin](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * c + begin + j] += self.grad[i * w + j];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    auto& g = pgrad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_result("sum", {1}, {acc}, {x}, [](Node& self) {
    auto& g = pgrad(self, 0);
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw InputError("mean: empty input");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor stop_gradient(const Tensor& x) {
  Tensor out = x.detached_copy();
  out.node()->op = "stop_gradient";
  return out;
}

}  // namespace dewave::ops

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

#include "dewave/nn.hpp"

#include <algorithm>
#include <cmath>

#include "dewave/errors.hpp"
#include "dewave/ops.hpp"

namespace dewave::nn {

namespace {

constexpr double kPositionalScale = 0.1;

Tensor fan_in_parameter(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  return Tensor::parameter(shape, uniform_values(shape_numel(shape), bound, rng));
}

}  // namespace

Linear Linear::create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out,
                      std::mt19937_64& rng) {
  Linear l;
  l.weight = params.add(name + ".weight", fan_in_parameter({in, out}, in, rng));
  l.bias = params.add(name + ".bias", fan_in_parameter({out}, in, rng));
  return l;
}

Tensor Linear::operator()(const Tensor& x) const {
  return ops::add_row_bias(ops::matmul(x, weight), bias);
}

LayerNorm LayerNorm::create(ParamSet& params, const std::string& name, std::size_t dim) {
  LayerNorm ln;
  ln.gamma = params.add(name + ".gamma", Tensor::parameter({dim}, std::vector<double>(dim, 1.0)));
  ln.beta = params.add(name + ".beta", Tensor::parameter({dim}, std::vector<double>(dim, 0.0)));
  return ln;
}

Tensor LayerNorm::operator()(const Tensor& x) const { return ops::layer_norm(x, gamma, beta); }

PositionalEmbedding PositionalEmbedding::create(ParamSet& params, const std::string& name,
                                                std::size_t max_len, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, kPositionalScale);
  std::vector<double> v(max_len * dim);
  for (auto& x : v) x = normal(rng);
  PositionalEmbedding p;
  p.table = params.add(name, Tensor::parameter({max_len, dim}, std::move(v)));
  return p;
}

Tensor PositionalEmbedding::operator()(const Tensor& x) const {
  if (x.rows() > table.dim(0)) {
    throw ShapeError("positional embedding: sequence of " + std::to_string(x.rows()) +
                     " exceeds the maximum length " + std::to_string(table.dim(0)));
  }
  return ops::add(x, ops::slice_rows(table, 0, x.rows()));
}

Tensor attention_bias(std::size_t queries, const std::vector<std::uint8_t>& key_mask, bool causal) {
  const std::size_t keys = key_mask.size();
  std::vector<double> b(queries * keys, 0.0);
  bool any = false;
  for (std::size_t i = 0; i < queries; ++i) {
    for (std::size_t j = 0; j < keys; ++j) {
      if (!key_mask[j] || (causal && j > i)) {
        b[i * keys + j] = -1e9;
        any = true;
      }
    }
  }
  if (!any) return Tensor();
  return Tensor::from({queries, keys}, std::move(b));
}

MultiHeadAttention MultiHeadAttention::create(ParamSet& params, const std::string& name, std::size_t dim,
                                              std::size_t heads, std::mt19937_64& rng) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError(name + ": dimension " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  MultiHeadAttention a;
  a.q = Linear::create(params, name + ".q", dim, dim, rng);
  a.k = Linear::create(params, name + ".k", dim, dim, rng);
  a.v = Linear::create(params, name + ".v", dim, dim, rng);
  a.o = Linear::create(params, name + ".o", dim, dim, rng);
  a.heads = heads;
  return a;
}

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& memory, const Tensor& bias) const {
  const Tensor qs = q(query), ks = k(memory), vs = v(memory);
  const std::size_t dim = qs.cols(), dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t lo = h * dh, hi = lo + dh;
    Tensor qh = heads == 1 ? qs : ops::slice_cols(qs, lo, hi);
    Tensor kh = heads == 1 ? ks : ops::slice_cols(ks, lo, hi);
    Tensor vh = heads == 1 ? vs : ops::slice_cols(vs, lo, hi);
    Tensor scores = ops::scale(ops::matmul_nt(qh, kh), scale);
    if (bias.defined()) scores = ops::add(scores, bias);
    outs.push_back(ops::matmul(ops::softmax(scores), vh));
  }
  return o(heads == 1 ? outs.front() : ops::concat_cols(outs));
}

FeedForward FeedForward::create(ParamSet& params, const std::string& name, std::size_t dim, std::size_t hidden,
                                std::mt19937_64& rng) {
  FeedForward f;
  f.in = Linear::create(params, name + ".in", dim, hidden, rng);
  f.out = Linear::create(params, name + ".out", hidden, dim, rng);
  return f;
}

Tensor FeedForward::operator()(const Tensor& x) const { return out(ops::gelu(in(x))); }

EncoderLayer EncoderLayer::create(ParamSet& params, const std::string& name, std::size_t dim, std::size_t heads,
                                  std::size_t hidden, std::mt19937_64& rng) {
  EncoderLayer l;
  l.ln_attn = LayerNorm::create(params, name + ".ln_attn", dim);
  l.attn = MultiHeadAttention::create(params, name + ".attn", dim, heads, rng);
  l.ln_ffn = LayerNorm::create(params, name + ".ln_ffn", dim);
  l.ffn = FeedForward::create(params, name + ".ffn", dim, hidden, rng);
  return l;
}

Tensor EncoderLayer::operator()(const Tensor& x, const Tensor& bias) const {
  const Tensor n1 = ln_attn(x);
  const Tensor h = ops::add(x, attn(n1, n1, bias));
  return ops::add(h, ffn(ln_ffn(h)));
}

DecoderLayer DecoderLayer::create(ParamSet& params, const std::string& name, std::size_t dim, std::size_t heads,
                                  std::size_t hidden, std::mt19937_64& rng) {
  DecoderLayer l;
  l.ln_self = LayerNorm::create(params, name + ".ln_self", dim);
  l.self_attn = MultiHeadAttention::create(params, name + ".self_attn", dim, heads, rng);
  l.ln_cross = LayerNorm::create(params, name + ".ln_cross", dim);
  l.cross_attn = MultiHeadAttention::create(params, name + ".cross_attn", dim, heads, rng);
  l.ln_ffn = LayerNorm::create(params, name + ".ln_ffn", dim);
  l.ffn = FeedForward::create(params, name + ".ffn", dim, hidden, rng);
  return l;
}

Tensor DecoderLayer::operator()(const Tensor& x, const Tensor& memory, const Tensor& self_bias,
                                const Tensor& cross_bias) const {
  const Tensor n1 = ln_self(x);
  Tensor h = ops::add(x, self_attn(n1, n1, self_bias));
  h = ops::add(h, cross_attn(ln_cross(h), memory, cross_bias));
  return ops::add(h, ffn(ln_ffn(h)));
}

Tensor mask_rows(const Tensor& x, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != x.rows()) {
    throw ShapeError("mask_rows: mask of " + std::to_string(mask.size()) + " for " + shape_str(x.shape()));
  }
  if (std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) return x;
  const std::size_t cols = x.cols();
  std::vector<double> m(x.numel(), 0.0);
  for (std::size_t r = 0; r < mask.size(); ++r)
    if (mask[r]) std::fill(m.begin() + r * cols, m.begin() + (r + 1) * cols, 1.0);
  return ops::mul(x, Tensor::from(x.shape(), std::move(m)));
}

}  // namespace dewave::nn

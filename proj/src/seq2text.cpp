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

#include "dewave/seq2text.hpp"

#include <algorithm>
#include <cmath>

#include "dewave/errors.hpp"
#include "dewave/ops.hpp"

namespace dewave {

namespace {

constexpr double kTokenScale = 0.02;

Tensor normal_table(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = normal(rng);
  return Tensor::parameter({rows, cols}, std::move(v));
}

std::vector<int> content_tokens(std::span<const int> ids, std::size_t vocab, const char* who) {
  std::vector<int> content;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw RangeError(std::string(who) + ": token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(vocab));
    }
    if (!Vocabulary::is_special(id)) content.push_back(id);
  }
  if (content.empty()) throw InputError(std::string(who) + ": no content tokens");
  return content;
}

Tensor key_bias(std::size_t queries, const EmbeddingSequence& memory) {
  return memory.all_valid() ? Tensor() : nn::attention_bias(queries, memory.mask, false);
}

}  // namespace

CodexEncoder CodexEncoder::create(ParamSet& params, const std::string& name, std::size_t dim, std::size_t heads,
                                  std::size_t num_layers, std::size_t ffn_hidden, std::size_t max_len,
                                  std::mt19937_64& rng) {
  CodexEncoder e;
  e.positions = nn::PositionalEmbedding::create(params, name + ".positions", max_len, dim, rng);
  for (std::size_t i = 0; i < num_layers; ++i)
    e.layers.push_back(nn::EncoderLayer::create(params, name + ".layer" + std::to_string(i), dim, heads, ffn_hidden, rng));
  e.final_norm = nn::LayerNorm::create(params, name + ".final_norm", dim);
  e.output = nn::Linear::create(params, name + ".output", dim, dim, rng);
  // Start z_c at the codebook's scale, U(-1/sqrt(m), 1/sqrt(m)) per element.
  const double shrink = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& v : e.output.weight.mutable_values()) v *= shrink;
  for (auto& v : e.output.bias.mutable_values()) v *= shrink;
  return e;
}

EmbeddingSequence CodexEncoder::encode(const EmbeddingSequence& x) const {
  if (x.dim() != output.weight.dim(0)) {
    throw ShapeError("codex encoder: input dim " + std::to_string(x.dim()) + " but model dim " +
                     std::to_string(output.weight.dim(0)));
  }
  const Tensor bias = key_bias(x.length(), x);
  Tensor h = positions(x.values);
  for (const auto& layer : layers) h = layer(h, bias);
  return {nn::mask_rows(output(final_norm(h)), x.mask), x.mask};
}

DecoderLM DecoderLM::create(ParamSet& params, const std::string& name, std::size_t vocab, std::size_t dim,
                            std::size_t heads, std::size_t num_layers, std::size_t ffn_hidden, std::size_t max_len,
                            std::size_t memory_len, std::mt19937_64& rng) {
  DecoderLM d;
  d.token_table = params.add(name + ".tokens", normal_table(vocab, dim, kTokenScale, rng));
  d.positions = nn::PositionalEmbedding::create(params, name + ".positions", max_len, dim, rng);
  d.memory_norm = nn::LayerNorm::create(params, name + ".memory_norm", dim);
  for (std::size_t i = 0; i < num_layers; ++i)
    d.layers.push_back(nn::DecoderLayer::create(params, name + ".layer" + std::to_string(i), dim, heads, ffn_hidden, rng));
  d.final_norm = nn::LayerNorm::create(params, name + ".final_norm", dim);
  d.output = nn::Linear::create(params, name + ".output", dim, vocab, rng);
  d.memory_positions = nn::PositionalEmbedding::create(params, name + ".memory_positions", memory_len, dim, rng);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  d.source_table = params.add(name + ".source", Tensor::parameter({vocab, dim}, uniform_values(vocab * dim, bound, rng)));
  return d;
}

Tensor DecoderLM::logits(const EmbeddingSequence& memory, std::span<const int> inputs) const {
  if (inputs.empty()) throw InputError("decoder: empty input");
  if (memory.dim() != token_table.dim(1)) {
    throw ShapeError("decoder: memory dim " + std::to_string(memory.dim()) + " but model dim " +
                     std::to_string(token_table.dim(1)));
  }
  const std::size_t n = inputs.size();
  const Tensor mem = memory_norm(memory_positions(memory.values));
  const Tensor self_bias = nn::attention_bias(n, std::vector<std::uint8_t>(n, 1), true);
  const Tensor cross_bias = key_bias(n, memory);
  Tensor h = positions(ops::embedding_lookup(token_table, inputs));
  for (const auto& layer : layers) h = layer(h, mem, self_bias, cross_bias);
  return output(final_norm(h));
}

TeacherForced DecoderLM::teacher_forced(const EmbeddingSequence& memory, std::span<const int> target) const {
  if (target.size() < 2) throw InputError("decoder: target needs at least BOS and one more token");
  if (target.front() != Vocabulary::kBos) throw InputError("decoder: target must begin with BOS");
  TeacherForced out;
  out.logits = logits(memory, target.first(target.size() - 1));
  out.nll = ops::cross_entropy(out.logits, target.subspan(1), Vocabulary::kPad);
  return out;
}

EmbeddingSequence DecoderLM::source_memory(std::span<const int> ids) const {
  return EmbeddingSequence::full(ops::embedding_lookup(source_table, content_tokens(ids, vocab(), "source_memory")));
}

std::vector<int> DecoderLM::generate(const EmbeddingSequence& memory, std::size_t max_len) const {
  NoGradGuard no_grad;
  std::vector<int> inputs{Vocabulary::kBos};
  std::vector<int> out;
  const std::size_t cap = std::min(max_len, this->max_len());
  while (out.size() < cap) {
    const Tensor l = logits(memory, inputs);
    const auto row = l.values().subspan((l.rows() - 1) * l.cols(), l.cols());
    const int next = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    out.push_back(next);
    if (next == Vocabulary::kEos) break;
    inputs.push_back(next);
  }
  return out;
}

ReconDecoder ReconDecoder::create(ParamSet& params, const std::string& name, std::size_t dim, std::size_t channels,
                                  std::size_t heads, std::size_t num_layers, std::size_t ffn_hidden,
                                  std::size_t max_len, std::mt19937_64& rng) {
  ReconDecoder r;
  r.positions = nn::PositionalEmbedding::create(params, name + ".positions", max_len, dim, rng);
  for (std::size_t i = 0; i < num_layers; ++i)
    r.layers.push_back(nn::EncoderLayer::create(params, name + ".layer" + std::to_string(i), dim, heads, ffn_hidden, rng));
  r.final_norm = nn::LayerNorm::create(params, name + ".final_norm", dim);
  for (std::size_t i = 0; i < r.kernels.size(); ++i) {
    const std::size_t out = i + 1 == r.kernels.size() ? channels : dim;
    const std::size_t k = r.kernels[i];
    const double bound = 1.0 / std::sqrt(static_cast<double>(out * k));
    const std::string base = name + ".up" + std::to_string(i);
    r.up_w.push_back(params.add(base + ".weight", Tensor::parameter({dim, out, k}, uniform_values(dim * out * k, bound, rng))));
    r.up_b.push_back(params.add(base + ".bias", Tensor::parameter({out}, uniform_values(out, bound, rng))));
  }
  return r;
}

std::size_t ReconDecoder::output_length(std::size_t positions) const {
  std::size_t len = positions;
  for (std::size_t i = 0; i < kernels.size(); ++i) len = (len - 1) * strides[i] + kernels[i];
  return len;
}

Tensor ReconDecoder::reconstruct(const EmbeddingSequence& z_q) const {
  if (z_q.length() == 0) throw InputError("reconstruct: empty sequence");
  const Tensor bias = key_bias(z_q.length(), z_q);
  Tensor h = positions(z_q.values);
  for (const auto& layer : layers) h = layer(h, bias);
  h = ops::transpose(nn::mask_rows(final_norm(h), z_q.mask));
  for (std::size_t i = 0; i < up_w.size(); ++i) {
    h = ops::transpose_conv1d(h, up_w[i], up_b[i], strides[i]);
    if (i + 1 < up_w.size()) h = ops::gelu(h);
  }
  return h;
}

Tensor reconstruction_mse(const Tensor& estimate, const Tensor& wave) {
  if (estimate.rank() != 2 || wave.rank() != 2 || estimate.rows() != wave.rows()) {
    throw ShapeError("reconstruction_mse: channel counts differ: " + shape_str(estimate.shape()) + " vs " +
                     shape_str(wave.shape()));
  }
  const std::size_t len = std::min(estimate.cols(), wave.cols());
  const Tensor a = len < estimate.cols() ? ops::slice_cols(estimate, 0, len) : estimate;
  const Tensor b = len < wave.cols() ? ops::slice_cols(wave, 0, len) : wave;
  // Squared error summed over channels, averaged over time samples.
  return ops::scale(ops::mean_squared_error(a, b), static_cast<double>(a.rows()));
}

TextEmbedding TextEmbedding::create(ParamSet& params, const std::string& name, std::size_t vocab, std::size_t dim,
                                    std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  TextEmbedding t;
  t.table = params.add(name, Tensor::parameter({vocab, dim}, uniform_values(vocab * dim, bound, rng)));
  return t;
}

EmbeddingSequence TextEmbedding::embed(std::span<const int> ids) const {
  return EmbeddingSequence::full(ops::embedding_lookup(table, content_tokens(ids, table.dim(0), "text_embed")));
}

}  // namespace dewave

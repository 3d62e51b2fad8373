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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dewave/params.hpp"
#include "dewave/tensor.hpp"

namespace dewave::nn {

// Layers hold handles to tensors registered in a ParamSet under a name
// prefix. Copying a layer shares its parameters.

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
  static Linear create(ParamSet& params, const std::string& name, std::size_t in, std::size_t out,
                       std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;  // [n, in] -> [n, out]
};

struct LayerNorm {
  Tensor gamma;
  Tensor beta;
  static LayerNorm create(ParamSet& params, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const;
};

// Learned table of per-position vectors, added to a [n, m] sequence.
struct PositionalEmbedding {
  Tensor table;  // [max_len, m]
  static PositionalEmbedding create(ParamSet& params, const std::string& name, std::size_t max_len,
                                    std::size_t dim, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;
  std::size_t max_len() const { return table.dim(0); }
};

// Additive attention bias, [queries, keys]; -1e9 blocks a pair.
Tensor attention_bias(std::size_t queries, const std::vector<std::uint8_t>& key_mask, bool causal);

struct MultiHeadAttention {
  Linear q, k, v, o;
  std::size_t heads = 1;
  static MultiHeadAttention create(ParamSet& params, const std::string& name, std::size_t dim,
                                   std::size_t heads, std::mt19937_64& rng);
  // query [n, m], memory [s, m], bias [n, s] or undefined.
  Tensor operator()(const Tensor& query, const Tensor& memory, const Tensor& bias) const;
};

struct FeedForward {
  Linear in, out;
  static FeedForward create(ParamSet& params, const std::string& name, std::size_t dim,
                            std::size_t hidden, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x) const;
};

// Pre-norm bidirectional encoder block.
struct EncoderLayer {
  LayerNorm ln_attn, ln_ffn;
  MultiHeadAttention attn;
  FeedForward ffn;
  static EncoderLayer create(ParamSet& params, const std::string& name, std::size_t dim,
                             std::size_t heads, std::size_t hidden, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x, const Tensor& bias) const;
};

// Pre-norm decoder block: causal self-attention, cross-attention, feed-forward.
struct DecoderLayer {
  LayerNorm ln_self, ln_cross, ln_ffn;
  MultiHeadAttention self_attn, cross_attn;
  FeedForward ffn;
  static DecoderLayer create(ParamSet& params, const std::string& name, std::size_t dim,
                             std::size_t heads, std::size_t hidden, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x, const Tensor& memory, const Tensor& self_bias,
                    const Tensor& cross_bias) const;
};

// Multiplies row i of x by mask[i]; returns x unchanged when every row is valid.
Tensor mask_rows(const Tensor& x, const std::vector<std::uint8_t>& mask);

}  // namespace dewave::nn

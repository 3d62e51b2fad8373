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

#include <random>
#include <span>
#include <string>
#include <vector>

#include "dewave/corpus.hpp"
#include "dewave/nn.hpp"
#include "dewave/wave_encoder.hpp"

namespace dewave {

// Transformer encoder producing z_c: positional embedding, N bidirectional
// layers, final layer norm and a linear map.
struct CodexEncoder {
  nn::PositionalEmbedding positions;
  std::vector<nn::EncoderLayer> layers;
  nn::LayerNorm final_norm;
  nn::Linear output;

  static CodexEncoder create(ParamSet& params, const std::string& name, std::size_t dim, std::size_t heads,
                             std::size_t num_layers, std::size_t ffn_hidden, std::size_t max_len,
                             std::mt19937_64& rng);
  EmbeddingSequence encode(const EmbeddingSequence& x) const;
};

struct TeacherForced {
  Tensor logits;  // [len - 1, V]
  Tensor nll;     // mean cross-entropy over non-PAD targets
};

// Decoder language model conditioned on a memory sequence through
// cross-attention. Stands in for a pretrained sequence-to-sequence decoder;
// `source_table` embeds text as memory for its text-only pretraining.
struct DecoderLM {
  Tensor token_table;   // [V, m]
  Tensor source_table;  // [V, m]
  nn::PositionalEmbedding positions;
  nn::PositionalEmbedding memory_positions;
  nn::LayerNorm memory_norm;
  std::vector<nn::DecoderLayer> layers;
  nn::LayerNorm final_norm;
  nn::Linear output;

  // max_len bounds the token sequence, memory_len the memory sequence.
  static DecoderLM create(ParamSet& params, const std::string& name, std::size_t vocab, std::size_t dim,
                          std::size_t heads, std::size_t num_layers, std::size_t ffn_hidden,
                          std::size_t max_len, std::size_t memory_len, std::mt19937_64& rng);

  std::size_t vocab() const { return token_table.dim(0); }
  std::size_t max_len() const { return positions.max_len(); }

  // Logits for every input position under a causal mask.
  Tensor logits(const EmbeddingSequence& memory, std::span<const int> inputs) const;
  // Position t sees gold tokens < t+1 and predicts target[t+1]. Throws
  // InputError for a target shorter than two tokens.
  TeacherForced teacher_forced(const EmbeddingSequence& memory, std::span<const int> target) const;
  // Source rows for the non-special tokens of `ids`, in order. Throws
  // RangeError for an unknown id and InputError when nothing remains.
  EmbeddingSequence source_memory(std::span<const int> ids) const;
  // Greedy decoding from BOS; returns at most max_len tokens, ending with EOS
  // when one is produced.
  std::vector<int> generate(const EmbeddingSequence& memory, std::size_t max_len) const;
};

// Reconstruction decoder: positional embedding, N bidirectional layers, a
// final layer norm, then transposed convolutions m->m (kernels 3,3,3 strides 2,2,3)
// with GELU and a final transposed convolution m->channels (kernel 3 stride 2).
struct ReconDecoder {
  std::vector<std::size_t> kernels{3, 3, 3, 3};
  std::vector<std::size_t> strides{2, 2, 3, 2};
  nn::PositionalEmbedding positions;
  std::vector<nn::EncoderLayer> layers;
  nn::LayerNorm final_norm;
  std::vector<Tensor> up_w, up_b;

  static ReconDecoder create(ParamSet& params, const std::string& name, std::size_t dim, std::size_t channels,
                             std::size_t heads, std::size_t num_layers, std::size_t ffn_hidden,
                             std::size_t max_len, std::mt19937_64& rng);

  std::size_t output_length(std::size_t positions) const;
  std::size_t channels() const { return up_w.back().dim(1); }
  // [channels, output_length(T)] wave estimate.
  Tensor reconstruct(const EmbeddingSequence& z_q) const;
};

// Per-sample squared error summed over channels and averaged over samples,
// after clipping both [channels, L] signals to the shorter length.
Tensor reconstruction_mse(const Tensor& estimate, const Tensor& wave);

// Independent token table providing z_t for the contrastive loss.
struct TextEmbedding {
  Tensor table;  // [V, m]
  static TextEmbedding create(ParamSet& params, const std::string& name, std::size_t vocab, std::size_t dim,
                              std::mt19937_64& rng);
  // One row per non-special token of `ids`; RangeError for an unknown id.
  EmbeddingSequence embed(std::span<const int> ids) const;
};

}  // namespace dewave

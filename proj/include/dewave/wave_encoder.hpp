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

#include "dewave/corpus.hpp"
#include "dewave/featurizer.hpp"
#include "dewave/nn.hpp"

namespace dewave {

// A length-T sequence of m-dim vectors with a validity mask. Masked rows hold
// zeros.
struct EmbeddingSequence {
  Tensor values;                   // [T, m]
  std::vector<std::uint8_t> mask;  // T entries

  std::size_t length() const { return mask.size(); }
  std::size_t dim() const { return values.defined() ? values.cols() : 0; }
  std::size_t valid() const;
  bool all_valid() const { return valid() == length(); }
  // Keeps the leading valid rows; masked rows must all come last.
  EmbeddingSequence trimmed() const;
  static EmbeddingSequence full(Tensor values);
};

struct ConvSchedule {
  std::vector<std::size_t> kernels{10, 3, 3, 3, 2};
  std::vector<std::size_t> strides{3, 2, 2, 2, 2};
  std::size_t width = 512;

  // Throws ConfigError for mismatched lists, an empty schedule, or a kernel
  // smaller than its stride.
  void validate() const;
};

struct ReceptiveField {
  std::size_t rf_samples = 0;
  std::size_t hop_samples = 0;
  double rf_ms = 0.0;
  double hop_ms = 0.0;
};

ReceptiveField receptive_field(const ConvSchedule& sched, double fs);

// Output length after each layer of the valid-convolution stack. Throws
// InputError when the input is shorter than the receptive field.
std::vector<std::size_t> conv_layer_lengths(const ConvSchedule& sched, std::size_t samples);
std::size_t conv_output_length(const ConvSchedule& sched, std::size_t samples);

// Raw-wave vectorizer: 1x1 channel fusion, temporal convolution stack with
// GELU (the first conv output standardised per feature over time), layer
// norm, positional embedding and one bidirectional attention layer.
struct WaveEncoder {
  ConvSchedule schedule;
  Tensor fusion_w, fusion_b;
  std::vector<Tensor> conv_w, conv_b;
  nn::LayerNorm norm;
  nn::PositionalEmbedding positions;
  nn::EncoderLayer attention;

  static WaveEncoder create(ParamSet& params, const std::string& name, std::size_t channels,
                            const ConvSchedule& sched, std::size_t heads, std::size_t ffn_hidden,
                            std::size_t max_positions, std::mt19937_64& rng);

  // Pre-attention features, [T, m], from a [channels, samples] wave. The
  // standardisation statistics cover the outputs of the first
  // `stats_samples` input samples, or all of them when 0.
  Tensor conv_features(const Tensor& wave, std::size_t stats_samples = 0) const;

  // Positions whose window starts inside the first `valid_samples` samples
  // are valid. With `trim`, only the input prefix those positions need is
  // convolved and the result holds the valid rows alone.
  EmbeddingSequence forward(const Tensor& wave, std::size_t valid_samples, bool trim = true) const;
};

// Word-level vectorizer: linear map of the band features to m dims, layer
// norm, positional embedding and one bidirectional attention layer.
struct WordProjector {
  nn::Linear projection;
  nn::LayerNorm norm;
  nn::PositionalEmbedding positions;
  nn::EncoderLayer attention;

  static WordProjector create(ParamSet& params, const std::string& name, std::size_t feature_dim,
                              std::size_t dim, std::size_t heads, std::size_t ffn_hidden,
                              std::size_t max_words, std::mt19937_64& rng);

  // features [n, feature_dim]; rows with mask 0 come out as zeros.
  EmbeddingSequence forward(const Tensor& features, const std::vector<std::uint8_t>& mask) const;
  std::size_t feature_dim() const { return projection.weight.dim(0); }
};

// Stacks a padded feature sequence into [n, dim] plus its mask.
Tensor feature_tensor(const FeatureSequence& seq);

EmbeddingSequence project_word_features(const WordProjector& proj, const FeatureSequence& seq);

// Normalised, padded [channels, target] wave and the count of real samples.
struct PreparedWave {
  Tensor wave;
  std::size_t valid_samples = 0;
};
PreparedWave prepare_wave(const EEGRecording& rec, std::size_t target = 5500);

}  // namespace dewave

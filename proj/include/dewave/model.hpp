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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dewave/codex.hpp"
#include "dewave/corpus.hpp"
#include "dewave/featurizer.hpp"
#include "dewave/seq2text.hpp"
#include "dewave/wave_encoder.hpp"

namespace dewave {

enum class Mode { kWordLevel, kRawWave };
std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view name);  // "word-level" | "raw-wave"

struct ModelConfig {
  Mode mode = Mode::kWordLevel;
  std::size_t channels = 105;
  double fs = 500.0;
  std::size_t dim = 512;
  std::size_t heads = 8;
  std::size_t ffn_hidden = 2048;
  std::size_t codex_layers = 6;
  std::size_t codebook_size = 2048;
  std::size_t decoder_layers = 2;
  std::size_t decoder_heads = 8;
  std::size_t recon_layers = 6;
  std::size_t max_words = kMaxWordTokens;
  std::size_t pad_samples = 5500;
  std::vector<std::size_t> conv_kernels{10, 3, 3, 3, 2};
  std::vector<std::size_t> conv_strides{3, 2, 2, 2, 2};
  // Word-level only: adds a linear feature-reconstruction head so the
  // self-supervised stage can run on band features.
  bool word_pretrain = false;

  std::size_t feature_dim() const { return channels * 4 * kStatsPerBand; }
  ConvSchedule schedule() const;
  // Longest vectorizer output: max_words, or the conv length of pad_samples.
  std::size_t max_positions() const;
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// One sample ready for the model: the vectorizer input and the gold tokens.
struct PreparedInput {
  std::string id;
  Tensor input;                // [words, feature_dim] or [channels, pad_samples]
  std::size_t valid_samples = 0;  // raw-wave only
  TokenSequence target;
};

// Featurizes (word-level) or normalises and pads (raw-wave) every sample.
// Runs in parallel up to the configured thread count. Word-level targets are
// clipped to the same max_words as the features.
std::vector<PreparedInput> prepare_inputs(const std::vector<Sample>& samples, const ModelConfig& cfg,
                                          const Vocabulary& vocab);

struct CodexPass {
  EmbeddingSequence x;    // vectorizer output
  EmbeddingSequence z_c;  // codex encoder output
  Quantized q;            // indices and z_q
  EmbeddingSequence st;   // straight-through z_q
};

class DeWaveModel {
 public:
  // Fresh parameters drawn from `seed`.
  DeWaveModel(ModelConfig cfg, Vocabulary vocab, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  // Last completed training stage (0, 1 or 2); -1 for a fresh model.
  int stage() const { return stage_; }
  void set_stage(int s) { stage_ = s; }
  // True once the decoder has had its text-only pretraining.
  bool decoder_pretrained() const { return decoder_pretrained_; }
  void set_decoder_pretrained(bool on) { decoder_pretrained_ = on; }
  std::uint64_t seed() const { return seed_; }

  CodexPass codex_pass(const PreparedInput& in) const;

  const CodexEncoder& codex() const { return codex_; }
  const Codebook& codebook() const { return codebook_; }
  const DecoderLM& decoder() const { return decoder_; }
  const TextEmbedding& text() const { return text_; }
  const ReconDecoder& recon() const;  // raw-wave only
  const nn::Linear& feature_recon() const;  // word-level with word_pretrain
  bool has_recon() const { return recon_.has_value(); }
  bool has_feature_recon() const { return feature_recon_.has_value(); }
  const WaveEncoder& wave_encoder() const;
  const WordProjector& word_projector() const;

  // Parameters plus a "meta/json" tensor holding config, vocabulary, stage,
  // decoder pretraining flag and seed as UTF-8 byte values.
  void save(const std::filesystem::path& path) const;
  static DeWaveModel load(const std::filesystem::path& path);

 private:
  ModelConfig cfg_;
  Vocabulary vocab_;
  std::uint64_t seed_ = 0;
  int stage_ = -1;
  bool decoder_pretrained_ = false;
  ParamSet params_;
  std::optional<WordProjector> words_;
  std::optional<WaveEncoder> wave_;
  CodexEncoder codex_;
  Codebook codebook_;
  DecoderLM decoder_;
  TextEmbedding text_;
  std::optional<ReconDecoder> recon_;
  std::optional<nn::Linear> feature_recon_;
};

}  // namespace dewave

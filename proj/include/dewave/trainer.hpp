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
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dewave/model.hpp"

namespace dewave {

struct TrainConfig {
  double lr_stage0 = 5e-4;
  double lr_stage1 = 5e-4;
  double lr_stage2 = 5e-6;
  std::size_t epochs_stage0 = 35;
  std::size_t epochs_stage1 = 35;
  std::size_t epochs_stage2 = 30;
  // Stage 0 multiplies its rate by lr_decay after this many epochs.
  std::size_t lr_decay_epoch = 20;
  double lr_decay = 0.1;
  double beta_stage0 = 0.25;
  double beta_stage12 = 0.2;
  double tau = 0.1;
  double alpha = 1.0;
  // Text-only decoder pretraining on random sentences over the vocabulary:
  // memory rows are the decoder's source embeddings plus Gaussian noise of
  // standard deviation lm_noise.
  std::size_t epochs_lm = 20;
  double lr_lm = 5e-3;
  double lm_noise = 0.1;
  std::size_t lm_sentences = 512;
  std::size_t lm_min_words = 3;
  std::size_t lm_max_words = 12;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

// Scalar loss plus the values of its parts.
struct LossParts {
  Tensor total;
  double nll = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
  double wave_mse = 0.0;
  double contrast = 0.0;
  std::size_t correct = 0;  // teacher-forced argmax hits
  std::size_t counted = 0;  // non-PAD target positions
  std::vector<int> indices;
};

// Average-pools the rows of `seq` into n contiguous bins of near-equal width
// (bin i covers rows [i*T/n, (i+1)*T/n), at least one row).
Tensor pool_rows(const Tensor& seq, std::size_t n);

// Stage number recorded for text-only decoder pretraining epochs.
inline constexpr int kLmStage = -1;

// Softmax cross-entropy over rows of s / tau with the diagonal as targets.
Tensor contrastive_from_similarity(const Tensor& s, double tau);

// z_q is pooled to the length of z_t before s = pooled(z_q) z_t^T.
Tensor loss_contrast(const EmbeddingSequence& z_q, const EmbeddingSequence& z_t, double tau);

// nll of the decoder over its own source embedding of the target text, with
// Gaussian noise drawn from `rng` added to the memory.
LossParts loss_lm(const DeWaveModel& model, const PreparedInput& in, double noise, std::mt19937_64& rng);
// nll(decoder over straight-through z_q) + codebook term + commitment term.
LossParts loss_stage12(const DeWaveModel& model, const PreparedInput& in, double beta);
// Reconstruction MSE + codebook term + commitment term (raw-wave), or the
// feature-reconstruction MSE in word-level mode with the pretrain head.
LossParts loss_wave(const DeWaveModel& model, const PreparedInput& in, double beta);
// loss_wave + alpha * loss_contrast(straight-through z_q, z_t).
LossParts loss_stage0(const DeWaveModel& model, const PreparedInput& in, double beta, double tau, double alpha);

struct EpochRecord {
  int stage = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double total = 0.0;
  double nll = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
  double wave_mse = 0.0;
  double contrast = 0.0;
  double token_accuracy = 0.0;
  double utilization = 0.0;
  double perplexity = 0.0;
  double wall_seconds = 0.0;  // kept out of the serialized report
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  // One JSON object per line, per epoch.
  std::string to_jsonl() const;
  void append_to(const std::filesystem::path& path) const;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Random sentences of lm_min_words..lm_max_words content tokens drawn
// uniformly from the vocabulary, deterministic under cfg.seed.
std::vector<PreparedInput> lm_sentences(const Vocabulary& vocab, const TrainConfig& cfg);
// Text-only pretraining of the decoder, standing in for a pretrained language
// model: it learns to reproduce lm_sentences() from their noisy source
// embeddings, so it never sees the EEG corpus text. Only decoder parameters
// change, and the model is marked as having a pretrained decoder. Leaves the
// stage counter alone.
TrainReport pretrain_decoder(DeWaveModel& model, const TrainConfig& cfg, const EpochCallback& on_epoch = {});
// Self-supervised stage: updates vectorizer, codex encoder, codebook, the
// reconstruction head and the text table under loss_stage0. Requires raw-wave
// mode, or word-level mode with the pretrain head.
TrainReport pretrain_stage0(DeWaveModel& model, const std::vector<PreparedInput>& data, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {});
// Codex stage: decoder frozen; vectorizer, codex encoder and codebook updated
// under loss_stage12.
TrainReport train_stage1(DeWaveModel& model, const std::vector<PreparedInput>& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});
// Fine-tuning stage: vectorizer, codex encoder, codebook and decoder updated.
// Throws StateError unless the model finished stage 1.
TrainReport train_stage2(DeWaveModel& model, const std::vector<PreparedInput>& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch = {});

}  // namespace dewave

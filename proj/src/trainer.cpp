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

#include "dewave/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"

#include "dewave/errors.hpp"
#include "dewave/ops.hpp"

namespace dewave {

void TrainConfig::validate() const {
  if (!(lr_stage0 > 0) || !(lr_stage1 > 0) || !(lr_stage2 > 0)) throw ConfigError("train: learning rates must be positive");
  if (!(tau > 0)) throw ConfigError("train.tau must be positive");
  if (!(alpha >= 0)) throw ConfigError("train.alpha must be non-negative");
  if (!(beta_stage0 > 0) || !(beta_stage12 > 0)) throw ConfigError("train: beta must be positive");
  if (!(lr_decay > 0)) throw ConfigError("train.lr_decay must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(lr_lm > 0)) throw ConfigError("train.lr_lm must be positive");
  if (!(lm_noise >= 0)) throw ConfigError("train.lm_noise must be non-negative");
  if (lm_sentences == 0) throw ConfigError("train.lm_sentences must be positive");
  if (lm_min_words == 0 || lm_max_words < lm_min_words) throw ConfigError("train: need 1 <= lm_min_words <= lm_max_words");
}

Tensor pool_rows(const Tensor& seq, std::size_t n) {
  const std::size_t t = seq.rows();
  if (n == 0 || t == 0) throw InputError("pool_rows: empty sequence or zero bins");
  if (n == t) return seq;
  std::vector<double> p(n * t, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = std::min(i * t / n, t - 1);
    const std::size_t hi = std::max(lo + 1, (i + 1) * t / n);
    for (std::size_t j = lo; j < hi; ++j) p[i * t + j] = 1.0 / static_cast<double>(hi - lo);
  }
  return ops::matmul(Tensor::from({n, t}, std::move(p)), seq);
}

Tensor contrastive_from_similarity(const Tensor& s, double tau) {
  if (s.rank() != 2 || s.rows() != s.cols()) throw ShapeError("contrastive loss: similarity must be square, got " + shape_str(s.shape()));
  if (s.rows() == 0) throw InputError("contrastive loss: n = 0");
  if (!(tau > 0)) throw ConfigError("contrastive loss: tau must be positive");
  std::vector<int> diag(s.rows());
  std::iota(diag.begin(), diag.end(), 0);
  return ops::cross_entropy(ops::scale(s, 1.0 / tau), diag);
}

Tensor loss_contrast(const EmbeddingSequence& z_q, const EmbeddingSequence& z_t, double tau) {
  if (z_q.length() == 0 || z_t.length() == 0) throw InputError("loss_contrast: empty sequence");
  const EmbeddingSequence q = z_q.trimmed(), t = z_t.trimmed();
  return contrastive_from_similarity(ops::matmul_nt(pool_rows(q.values, t.length()), t.values), tau);
}

namespace {

void add_vq(LossParts& out, const CodexPass& pass, double beta, std::vector<Tensor>& terms) {
  const VqTerms vq = vq_terms(pass.z_c, pass.q.z_q, beta);
  out.codebook = vq.codebook.item();
  out.commitment = vq.commitment.item();
  terms.push_back(vq.codebook);
  terms.push_back(vq.commitment);
  out.indices = pass.q.indices;
}

Tensor sum_terms(const std::vector<Tensor>& terms) {
  Tensor total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = ops::add(total, terms[i]);
  return total;
}

Tensor wave_term(const DeWaveModel& model, const PreparedInput& in, const CodexPass& pass) {
  if (model.config().mode == Mode::kRawWave) return reconstruction_mse(model.recon().reconstruct(pass.st), in.input);
  return ops::mean_squared_error(model.feature_recon()(pass.st.values), in.input);
}

void count_hits(LossParts& out, const TeacherForced& tf, const std::vector<int>& target) {
  const std::size_t v = tf.logits.cols();
  const auto l = tf.logits.values();
  for (std::size_t r = 0; r < tf.logits.rows(); ++r) {
    const int gold = target[r + 1];
    if (gold == Vocabulary::kPad) continue;
    const auto row = l.subspan(r * v, v);
    const int pred = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    out.correct += pred == gold;
    ++out.counted;
  }
}

}  // namespace

LossParts loss_lm(const DeWaveModel& model, const PreparedInput& in, double noise, std::mt19937_64& rng) {
  EmbeddingSequence memory = model.decoder().source_memory(in.target.ids);
  if (noise > 0) {
    std::normal_distribution<double> normal(0.0, noise);
    std::vector<double> n(memory.values.numel());
    for (auto& x : n) x = normal(rng);
    memory.values = ops::add(memory.values, Tensor::from(memory.values.shape(), std::move(n)));
  }
  const TeacherForced tf = model.decoder().teacher_forced(memory, in.target.ids);
  LossParts out;
  out.nll = tf.nll.item();
  out.total = tf.nll;
  count_hits(out, tf, in.target.ids);
  return out;
}

LossParts loss_stage12(const DeWaveModel& model, const PreparedInput& in, double beta) {
  const CodexPass pass = model.codex_pass(in);
  const TeacherForced tf = model.decoder().teacher_forced(pass.st, in.target.ids);
  LossParts out;
  out.nll = tf.nll.item();
  std::vector<Tensor> terms{tf.nll};
  add_vq(out, pass, beta, terms);
  out.total = sum_terms(terms);
  count_hits(out, tf, in.target.ids);
  return out;
}

LossParts loss_wave(const DeWaveModel& model, const PreparedInput& in, double beta) {
  const CodexPass pass = model.codex_pass(in);
  const Tensor mse = wave_term(model, in, pass);
  LossParts out;
  out.wave_mse = mse.item();
  std::vector<Tensor> terms{mse};
  add_vq(out, pass, beta, terms);
  out.total = sum_terms(terms);
  return out;
}

LossParts loss_stage0(const DeWaveModel& model, const PreparedInput& in, double beta, double tau, double alpha) {
  const CodexPass pass = model.codex_pass(in);
  const Tensor mse = wave_term(model, in, pass);
  LossParts out;
  out.wave_mse = mse.item();
  std::vector<Tensor> terms{mse};
  add_vq(out, pass, beta, terms);
  if (alpha > 0) {
    const Tensor c = loss_contrast(pass.st, model.text().embed(in.target.ids), tau);
    out.contrast = c.item();
    terms.push_back(ops::scale(c, alpha));
  }
  out.total = sum_terms(terms);
  return out;
}

std::string TrainReport::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    const nlohmann::ordered_json j = {{"stage", e.stage},
                                      {"epoch", e.epoch},
                                      {"lr", e.lr},
                                      {"total", e.total},
                                      {"nll", e.nll},
                                      {"codebook", e.codebook},
                                      {"commitment", e.commitment},
                                      {"wave_mse", e.wave_mse},
                                      {"contrast", e.contrast},
                                      {"token_accuracy", e.token_accuracy},
                                      {"utilization", e.utilization},
                                      {"perplexity", e.perplexity}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void TrainReport::append_to(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::app | std::ios::binary);
  if (!f) throw DataError(path.string() + ": cannot open report for writing");
  f << to_jsonl();
  if (!f) throw DataError(path.string() + ": write failed");
}

namespace {

using LossFn = std::function<LossParts(const DeWaveModel&, const PreparedInput&)>;

TrainReport run_stage(DeWaveModel& model, const std::vector<PreparedInput>& data, const TrainConfig& cfg, int stage,
                      const std::function<bool(const std::string&)>& trainable, const LossFn& loss,
                      std::size_t epochs, const std::function<double(std::size_t)>& lr_at,
                      const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.empty()) throw InputError("training: no samples");
  ParamSet& all = model.params();
  for (auto& [name, t] : all) t.set_requires_grad(trainable(name));
  ParamSet group = all.subset(trainable);
  all.clear_grads();

  TrainReport report;
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{cfg.seed & 0xffffffffu, cfg.seed >> 32, static_cast<std::uint64_t>(stage),
                      static_cast<std::uint64_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    const double lr = lr_at(epoch);
    EpochRecord rec;
    rec.stage = stage;
    rec.epoch = epoch;
    rec.lr = lr;
    std::size_t correct = 0, counted = 0;
    std::vector<int> indices;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      for (std::size_t i = b; i < end; ++i) {
        LossParts parts = loss(model, data[order[i]]);
        if (!std::isfinite(parts.total.item())) {
          throw NumericError("stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) + ": loss on " +
                             data[order[i]].id + " is not finite");
        }
        parts.total.backward();
        rec.total += parts.total.item();
        rec.nll += parts.nll;
        rec.codebook += parts.codebook;
        rec.commitment += parts.commitment;
        rec.wave_mse += parts.wave_mse;
        rec.contrast += parts.contrast;
        correct += parts.correct;
        counted += parts.counted;
        indices.insert(indices.end(), parts.indices.begin(), parts.indices.end());
      }
      sgd_step(group, lr / static_cast<double>(end - b));
    }
    const double n = static_cast<double>(data.size());
    rec.total /= n;
    rec.nll /= n;
    rec.codebook /= n;
    rec.commitment /= n;
    rec.wave_mse /= n;
    rec.contrast /= n;
    rec.token_accuracy = counted ? static_cast<double>(correct) / static_cast<double>(counted) : 0.0;
    if (!indices.empty()) {
      const CodebookStats stats = codebook_stats(indices, model.codebook().k());
      rec.utilization = stats.utilization;
      rec.perplexity = stats.perplexity;
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  for (auto& [name, t] : all) t.set_requires_grad(true);
  all.clear_grads();
  return report;
}

bool is_encoder_side(const std::string& name) {
  return name.starts_with("vectorizer.") || name.starts_with("codex.") || name == "codebook";
}

}  // namespace

TrainReport pretrain_stage0(DeWaveModel& model, const std::vector<PreparedInput>& data, const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
  if (model.config().mode == Mode::kWordLevel && !model.has_feature_recon()) {
    throw StateError("pretrain: word-level mode needs model.word_pretrain");
  }
  auto trainable = [](const std::string& n) {
    return is_encoder_side(n) || n.starts_with("recon.") || n.starts_with("feature_recon.") || n == "text";
  };
  auto loss = [&](const DeWaveModel& m, const PreparedInput& in) {
    return loss_stage0(m, in, cfg.beta_stage0, cfg.tau, cfg.alpha);
  };
  auto lr = [&](std::size_t epoch) { return epoch > cfg.lr_decay_epoch ? cfg.lr_stage0 * cfg.lr_decay : cfg.lr_stage0; };
  TrainReport report = run_stage(model, data, cfg, 0, trainable, loss, cfg.epochs_stage0, lr, on_epoch);
  model.set_stage(0);
  return report;
}

std::vector<PreparedInput> lm_sentences(const Vocabulary& vocab, const TrainConfig& cfg) {
  if (vocab.size() <= static_cast<std::size_t>(Vocabulary::kNumSpecial)) {
    throw ConfigError("decoder pretraining: the vocabulary has no content tokens");
  }
  std::seed_seq seq{cfg.seed & 0xffffffffu, cfg.seed >> 32, std::uint64_t{0x5445}};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> len(cfg.lm_min_words, cfg.lm_max_words);
  std::uniform_int_distribution<int> token(Vocabulary::kNumSpecial, static_cast<int>(vocab.size()) - 1);
  std::vector<PreparedInput> out(cfg.lm_sentences);
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& ids = out[i].target.ids;
    ids.push_back(Vocabulary::kBos);
    for (std::size_t n = len(rng); n > 0; --n) {
      ids.push_back(token(rng));
      out[i].target.words.push_back(vocab.token(ids.back()));
    }
    ids.push_back(Vocabulary::kEos);
    out[i].id = "lm" + std::to_string(i);
  }
  return out;
}

TrainReport pretrain_decoder(DeWaveModel& model, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (cfg.lm_max_words > model.config().max_words) {
    throw ConfigError("train.lm_max_words exceeds model.max_words");
  }
  const std::vector<PreparedInput> text = lm_sentences(model.vocab(), cfg);
  std::seed_seq seq{cfg.seed & 0xffffffffu, cfg.seed >> 32, std::uint64_t{0x4c4d}};
  std::mt19937_64 rng(seq);
  auto trainable = [](const std::string& n) {
    return n.starts_with("decoder.");
  };
  auto loss = [&](const DeWaveModel& m, const PreparedInput& in) { return loss_lm(m, in, cfg.lm_noise, rng); };
  auto lr = [&](std::size_t) { return cfg.lr_lm; };
  TrainReport report = run_stage(model, text, cfg, kLmStage, trainable, loss, cfg.epochs_lm, lr, on_epoch);
  model.set_decoder_pretrained(true);
  return report;
}

TrainReport train_stage1(DeWaveModel& model, const std::vector<PreparedInput>& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
  auto loss = [&](const DeWaveModel& m, const PreparedInput& in) { return loss_stage12(m, in, cfg.beta_stage12); };
  auto lr = [&](std::size_t) { return cfg.lr_stage1; };
  TrainReport report = run_stage(model, data, cfg, 1, is_encoder_side, loss, cfg.epochs_stage1, lr, on_epoch);
  model.set_stage(1);
  return report;
}

TrainReport train_stage2(DeWaveModel& model, const std::vector<PreparedInput>& data, const TrainConfig& cfg,
                         const EpochCallback& on_epoch) {
  if (model.stage() < 1) throw StateError("finetune: the model has not completed stage 1");
  // The source table only feeds text-only pretraining, so it gets no gradient here.
  auto trainable = [](const std::string& n) {
    return is_encoder_side(n) || (n.starts_with("decoder.") && n != "decoder.source");
  };
  auto loss = [&](const DeWaveModel& m, const PreparedInput& in) { return loss_stage12(m, in, cfg.beta_stage12); };
  auto lr = [&](std::size_t) { return cfg.lr_stage2; };
  TrainReport report = run_stage(model, data, cfg, 2, trainable, loss, cfg.epochs_stage2, lr, on_epoch);
  model.set_stage(2);
  return report;
}

}  // namespace dewave

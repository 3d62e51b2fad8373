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

#include "dewave/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "json.hpp"

#include "dewave/errors.hpp"
#include "dewave/parallel.hpp"

namespace dewave {

namespace {

void check_corpus(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs, const char* who) {
  if (hyps.empty()) throw InputError(std::string(who) + ": empty corpus");
  if (hyps.size() != refs.size()) {
    throw InputError(std::string(who) + ": " + std::to_string(hyps.size()) + " hypotheses but " +
                     std::to_string(refs.size()) + " references");
  }
}

std::map<TokenList, std::size_t> ngram_counts(const TokenList& words, std::size_t n) {
  std::map<TokenList, std::size_t> counts;
  for (std::size_t i = 0; i + n <= words.size(); ++i) ++counts[TokenList(words.begin() + i, words.begin() + i + n)];
  return counts;
}

std::size_t clipped_overlap(const std::map<TokenList, std::size_t>& hyp, const std::map<TokenList, std::size_t>& ref) {
  std::size_t o = 0;
  for (const auto& [g, c] : hyp) {
    auto it = ref.find(g);
    if (it != ref.end()) o += std::min(c, it->second);
  }
  return o;
}

TokenList surface(const Vocabulary& vocab, std::span<const int> ids) {
  TokenList out;
  for (int id : ids) {
    if (id == Vocabulary::kEos) break;
    if (id < Vocabulary::kNumSpecial) continue;
    out.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace

double bleu(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs, int n) {
  check_corpus(hyps, refs, "bleu");
  if (n < 1 || n > 4) throw InputError("bleu: N must be in 1..4, got " + std::to_string(n));
  std::size_t c = 0, r = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    c += hyps[i].size();
    r += refs[i].size();
  }
  if (c == 0) return 0.0;
  double log_sum = 0.0;
  for (int order = 1; order <= n; ++order) {
    std::size_t matched = 0, total = 0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      const auto h = ngram_counts(hyps[i], static_cast<std::size_t>(order));
      matched += clipped_overlap(h, ngram_counts(refs[i], static_cast<std::size_t>(order)));
      if (hyps[i].size() >= static_cast<std::size_t>(order)) total += hyps[i].size() - static_cast<std::size_t>(order) + 1;
    }
    if (matched == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum / n);
}

Rouge1 rouge1(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs) {
  check_corpus(hyps, refs, "rouge1");
  Rouge1 mean;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    if (hyps[i].empty() || refs[i].empty()) continue;
    const double o = static_cast<double>(clipped_overlap(ngram_counts(hyps[i], 1), ngram_counts(refs[i], 1)));
    const double rec = o / static_cast<double>(refs[i].size());
    const double prec = o / static_cast<double>(hyps[i].size());
    mean.recall += rec;
    mean.precision += prec;
    mean.f1 += rec + prec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  const double n = static_cast<double>(hyps.size());
  mean.recall /= n;
  mean.precision /= n;
  mean.f1 /= n;
  return mean;
}

EvalResult score(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs) {
  EvalResult r;
  for (int n = 1; n <= 4; ++n) r.bleu[static_cast<std::size_t>(n - 1)] = bleu(hyps, refs, n);
  r.rouge = rouge1(hyps, refs);
  r.sentences = hyps.size();
  return r;
}

Evaluation evaluate_model(const DeWaveModel& model, const std::vector<PreparedInput>& data, bool teacher_forced) {
  if (data.empty()) throw InputError("evaluate: no samples");
  Evaluation ev;
  ev.ids.resize(data.size());
  ev.hypotheses.resize(data.size());
  ev.references.resize(data.size());
  std::vector<std::size_t> correct(data.size(), 0), counted(data.size(), 0);
  const Vocabulary& vocab = model.vocab();
  parallel_for(data.size(), [&](std::size_t i) {
    NoGradGuard no_grad;
    const PreparedInput& in = data[i];
    const CodexPass pass = model.codex_pass(in);
    const auto& gold = in.target.ids;
    const Tensor logits = model.decoder().logits(pass.st, std::span<const int>(gold).first(gold.size() - 1));
    const std::size_t v = logits.cols();
    std::vector<int> argmax;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      const auto row = logits.values().subspan(r * v, v);
      argmax.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
      if (gold[r + 1] == Vocabulary::kPad) continue;
      correct[i] += argmax.back() == gold[r + 1];
      ++counted[i];
    }
    const std::vector<int> hyp = teacher_forced ? argmax : model.decoder().generate(pass.st, model.config().max_words + 1);
    ev.ids[i] = in.id;
    ev.hypotheses[i] = surface(vocab, hyp);
    ev.references[i] = in.target.words;
  });
  ev.result = score(ev.hypotheses, ev.references);
  std::size_t c = 0, n = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    c += correct[i];
    n += counted[i];
  }
  ev.result.token_accuracy = n ? static_cast<double>(c) / static_cast<double>(n) : 0.0;
  return ev;
}

Evaluation evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
                               Split split, bool teacher_forced, const std::vector<std::string>& subjects) {
  const DeWaveModel model = DeWaveModel::load(checkpoint);
  const auto samples = filter_split(load_dataset(dataset), split, subjects);
  if (samples.empty()) throw DataError(dataset.string() + ": no samples in split " + std::string(split_name(split)));
  for (const auto& s : samples) {
    if (s.recording.channels != model.config().channels) {
      throw StateError("checkpoint expects " + std::to_string(model.config().channels) + " channels but sample " +
                       s.id + " has " + std::to_string(s.recording.channels));
    }
    if (model.config().mode == Mode::kWordLevel && s.fixations.empty()) {
      throw StateError("word-level checkpoint but sample " + s.id + " has no fixations");
    }
  }
  return evaluate_model(model, prepare_inputs(samples, model.config(), model.vocab()), teacher_forced);
}

std::string result_json(const EvalResult& r) {
  const nlohmann::ordered_json j = {{"bleu1", r.bleu[0]},
                                    {"bleu2", r.bleu[1]},
                                    {"bleu3", r.bleu[2]},
                                    {"bleu4", r.bleu[3]},
                                    {"rouge1_recall", r.rouge.recall},
                                    {"rouge1_precision", r.rouge.precision},
                                    {"rouge1_f1", r.rouge.f1},
                                    {"token_accuracy", r.token_accuracy},
                                    {"sentences", r.sentences}};
  return j.dump(2) + "\n";
}

std::string result_table(const EvalResult& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "metric              value(%%)\n"
                "BLEU-1              %8.2f\n"
                "BLEU-2              %8.2f\n"
                "BLEU-3              %8.2f\n"
                "BLEU-4              %8.2f\n"
                "ROUGE-1 R           %8.2f\n"
                "ROUGE-1 P           %8.2f\n"
                "ROUGE-1 F           %8.2f\n"
                "token accuracy      %8.2f\n"
                "sentences           %8zu\n",
                100 * r.bleu[0], 100 * r.bleu[1], 100 * r.bleu[2], 100 * r.bleu[3], 100 * r.rouge.recall,
                100 * r.rouge.precision, 100 * r.rouge.f1, 100 * r.token_accuracy, r.sentences);
  return buf;
}

}  // namespace dewave

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

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "dewave/model.hpp"

namespace dewave {

using TokenList = std::vector<std::string>;

// Cumulative corpus BLEU-N: clipped n-gram precisions of orders 1..N
// combined by a uniform geometric mean, times the brevity penalty. No
// smoothing, so any zero precision gives 0. Throws InputError for an empty
// corpus, mismatched list lengths, or N outside 1..4.
double bleu(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs, int n);

struct Rouge1 {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

// Mean over sentences of clipped unigram recall, precision and F1. An empty
// hypothesis scores zero.
Rouge1 rouge1(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs);

struct EvalResult {
  std::array<double, 4> bleu{};
  Rouge1 rouge;
  std::size_t sentences = 0;
  double token_accuracy = 0.0;  // teacher-forced argmax accuracy
};

struct Evaluation {
  EvalResult result;
  std::vector<std::string> ids;
  std::vector<TokenList> hypotheses;
  std::vector<TokenList> references;
};

EvalResult score(const std::vector<TokenList>& hyps, const std::vector<TokenList>& refs);

// Teacher-forced hypotheses take the argmax at every position given the gold
// prefix; free-running ones come from greedy generation. Generation stops at
// EOS and special tokens are dropped from hypotheses.
Evaluation evaluate_model(const DeWaveModel& model, const std::vector<PreparedInput>& data, bool teacher_forced);

// Loads a checkpoint and scores it on one split of a dataset directory,
// optionally restricted to some subjects. Throws StateError when the dataset
// does not fit the checkpoint's mode or montage.
Evaluation evaluate_checkpoint(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
                               Split split, bool teacher_forced, const std::vector<std::string>& subjects = {});

std::string result_json(const EvalResult& r);
std::string result_table(const EvalResult& r);

}  // namespace dewave

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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dewave/codex.hpp"
#include "dewave/errors.hpp"
#include "dewave/ops.hpp"
#include "dewave/params.hpp"
#include "dewave/seq2text.hpp"

namespace dewave {
namespace {

constexpr std::size_t kDim = 8;
constexpr std::size_t kHeads = 2;
constexpr std::size_t kVocab = 50;

EmbeddingSequence random_sequence(std::size_t t, std::size_t m, std::mt19937_64& rng) {
  return EmbeddingSequence::full(Tensor::from({t, m}, uniform_values(t * m, 1.0, rng)));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

class CodexEncoderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(31);
    enc = CodexEncoder::create(params, "codex", kDim, kHeads, 2, 16, 20, rng);
  }
  ParamSet params;
  CodexEncoder enc;
};

TEST_F(CodexEncoderTest, LengthOneSequence) {
  std::mt19937_64 rng(32);
  const EmbeddingSequence out = enc.encode(random_sequence(1, kDim, rng));
  EXPECT_EQ(out.length(), 1u);
  EXPECT_EQ(out.dim(), kDim);
}

TEST_F(CodexEncoderTest, PermutingInputsChangesOutputs) {
  std::mt19937_64 rng(33);
  const EmbeddingSequence x = random_sequence(4, kDim, rng);
  std::vector<double> swapped(x.values.values().begin(), x.values.values().end());
  std::swap_ranges(swapped.begin(), swapped.begin() + kDim, swapped.begin() + kDim);
  const EmbeddingSequence y = EmbeddingSequence::full(Tensor::from({4, kDim}, swapped));
  const Tensor a = enc.encode(x).values, b = enc.encode(y).values;
  // Without positional information row 0 of one output would equal row 1 of the other.
  double d = 0.0;
  for (std::size_t c = 0; c < kDim; ++c) d += std::abs(a.at(0, c) - b.at(1, c));
  EXPECT_GT(d, 1e-6);
}

TEST_F(CodexEncoderTest, MaskedRowsAreZeroAndDoNotLeak) {
  std::mt19937_64 rng(34);
  EmbeddingSequence x = random_sequence(5, kDim, rng);
  x.mask = {1, 1, 1, 0, 0};
  const Tensor a = enc.encode(x).values;
  EmbeddingSequence y = x;
  std::vector<double> v(x.values.values().begin(), x.values.values().end());
  for (std::size_t i = 3 * kDim; i < v.size(); ++i) v[i] = 7.0;
  y.values = Tensor::from({5, kDim}, v);
  const Tensor b = enc.encode(y).values;
  EXPECT_LT(max_abs_diff(a, b), 1e-12);
  for (std::size_t c = 0; c < kDim; ++c) EXPECT_EQ(a.at(4, c), 0.0);
}

TEST_F(CodexEncoderTest, WrongDimIsShapeError) {
  std::mt19937_64 rng(35);
  EXPECT_THROW(enc.encode(random_sequence(3, kDim + 1, rng)), ShapeError);
}

TEST_F(CodexEncoderTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(36);
  const EmbeddingSequence x = random_sequence(3, kDim, rng);
  const Tensor w = Tensor::from({3, kDim}, uniform_values(3 * kDim, 1.0, rng));
  const auto f = [&] { return ops::sum(ops::mul(enc.encode(x).values, w)); };
  GradCheckOptions opt;
  opt.min_coordinates = 200;
  EXPECT_LT(grad_check(f, params, opt).max_relative_error, 1e-4);
}

class DecoderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(41);
    dec = DecoderLM::create(params, "decoder", kVocab, kDim, kHeads, 2, 16, 12, 20, rng);
  }
  ParamSet params;
  DecoderLM dec;
};

TEST_F(DecoderTest, LogitsShape) {
  std::mt19937_64 rng(42);
  const std::vector<int> inputs{1, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
  const Tensor l = dec.logits(random_sequence(6, kDim, rng), inputs);
  EXPECT_EQ(l.shape(), (Shape{11, kVocab}));
}

TEST_F(DecoderTest, UniformLogitsGiveLogVocab) {
  for (auto& v : dec.output.weight.mutable_values()) v = 0.0;
  for (auto& v : dec.output.bias.mutable_values()) v = 0.0;
  std::mt19937_64 rng(43);
  const std::vector<int> target{1, 9, 20, 33, 2};
  const TeacherForced tf = dec.teacher_forced(random_sequence(4, kDim, rng), target);
  EXPECT_NEAR(tf.nll.item(), std::log(static_cast<double>(kVocab)), 1e-12);
}

TEST_F(DecoderTest, CausalMaskHidesLaterTokens) {
  std::mt19937_64 rng(44);
  const EmbeddingSequence mem = random_sequence(5, kDim, rng);
  const std::vector<int> a{1, 10, 11, 12, 13};
  const std::vector<int> b{1, 10, 11, 40, 41};
  const Tensor la = dec.logits(mem, a), lb = dec.logits(mem, b);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < kVocab; ++c) EXPECT_NEAR(la.at(r, c), lb.at(r, c), 1e-12);
  double d = 0.0;
  for (std::size_t c = 0; c < kVocab; ++c) d += std::abs(la.at(3, c) - lb.at(3, c));
  EXPECT_GT(d, 1e-9);
}

TEST_F(DecoderTest, MemoryInfluencesLogits) {
  std::mt19937_64 rng(45);
  const std::vector<int> in{1, 10};
  EXPECT_GT(max_abs_diff(dec.logits(random_sequence(5, kDim, rng), in), dec.logits(random_sequence(5, kDim, rng), in)),
            1e-9);
}

TEST_F(DecoderTest, TeacherForcedRejectsBadTargets) {
  std::mt19937_64 rng(46);
  const EmbeddingSequence mem = random_sequence(3, kDim, rng);
  const std::vector<int> one{1};
  const std::vector<int> no_bos{5, 6, 2};
  EXPECT_THROW(dec.teacher_forced(mem, one), InputError);
  EXPECT_THROW(dec.teacher_forced(mem, no_bos), InputError);
  EXPECT_THROW(dec.logits(random_sequence(3, kDim + 2, rng), one), ShapeError);
}

TEST_F(DecoderTest, GenerateRespectsCapAndIsDeterministic) {
  std::mt19937_64 rng(47);
  const EmbeddingSequence mem = random_sequence(4, kDim, rng);
  EXPECT_EQ(dec.generate(mem, 1).size(), 1u);
  const auto a = dec.generate(mem, 10);
  EXPECT_LE(a.size(), 10u);
  EXPECT_EQ(a, dec.generate(mem, 10));
  for (std::size_t i = 0; i + 1 < a.size(); ++i) EXPECT_NE(a[i], Vocabulary::kEos);
}

TEST_F(DecoderTest, GenerateMatchesStepwiseArgmax) {
  std::mt19937_64 rng(48);
  const EmbeddingSequence mem = random_sequence(4, kDim, rng);
  const auto out = dec.generate(mem, 6);
  std::vector<int> prefix{Vocabulary::kBos};
  for (int tok : out) {
    const Tensor l = dec.logits(mem, prefix);
    const auto row = l.values().subspan((l.rows() - 1) * kVocab, kVocab);
    EXPECT_EQ(tok, static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
    prefix.push_back(tok);
  }
}

TEST_F(DecoderTest, SourceMemorySkipsSpecialTokens) {
  const std::vector<int> ids{1, 7, 9, 2, 0};
  const EmbeddingSequence m = dec.source_memory(ids);
  ASSERT_EQ(m.length(), 2u);
  for (std::size_t c = 0; c < kDim; ++c) {
    EXPECT_EQ(m.values.at(0, c), dec.source_table.at(7, c));
    EXPECT_EQ(m.values.at(1, c), dec.source_table.at(9, c));
  }
  const std::vector<int> only_special{1, 2};
  const std::vector<int> unknown{1, 50};
  EXPECT_THROW(dec.source_memory(only_special), InputError);
  EXPECT_THROW(dec.source_memory(unknown), RangeError);
}

TEST_F(DecoderTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(49);
  const EmbeddingSequence mem = random_sequence(3, kDim, rng);
  const std::vector<int> target{1, 12, 30, 2};
  const auto f = [&] { return dec.teacher_forced(mem, target).nll; };
  GradCheckOptions opt;
  opt.min_coordinates = 300;
  EXPECT_LT(grad_check(f, params, opt).max_relative_error, 1e-4);
}

class ReconTest : public ::testing::Test {
 protected:
  static constexpr std::size_t kChannels = 5;
  void SetUp() override {
    std::mt19937_64 rng(51);
    recon = ReconDecoder::create(params, "recon", kDim, kChannels, kHeads, 1, 16, 114, rng);
  }
  ParamSet params;
  ReconDecoder recon;
};

TEST_F(ReconTest, OutputLengthComposesTransposeSchedule) {
  // 1 -> 3 -> 7 -> 21 -> 43
  EXPECT_EQ(recon.output_length(1), 43u);
  // 114 -> 229 -> 459 -> 1377 -> 2755
  EXPECT_EQ(recon.output_length(114), 2755u);
  std::mt19937_64 rng(52);
  const Tensor out = recon.reconstruct(random_sequence(6, kDim, rng));
  EXPECT_EQ(out.shape(), (Shape{kChannels, recon.output_length(6)}));
  EXPECT_EQ(recon.channels(), kChannels);
}

TEST_F(ReconTest, DeterministicAndDifferentiable) {
  std::mt19937_64 rng(53);
  const EmbeddingSequence z = random_sequence(3, kDim, rng);
  EXPECT_EQ(max_abs_diff(recon.reconstruct(z), recon.reconstruct(z)), 0.0);
  const Tensor wave = Tensor::from({kChannels, 150}, uniform_values(kChannels * 150, 1.0, rng));
  const auto f = [&] { return reconstruction_mse(recon.reconstruct(z), wave); };
  GradCheckOptions opt;
  opt.min_coordinates = 300;
  EXPECT_LT(grad_check(f, params, opt).max_relative_error, 1e-4);
}

TEST(ReconstructionMseTest, ClipsToShorterLengthAndSumsChannels) {
  const Tensor est = Tensor::from({2, 3}, {1, 2, 3, 0, 0, 9});
  const Tensor wave = Tensor::from({2, 2}, {0, 2, 1, 0});
  // Per-sample squared error summed over channels: (1 + 1, 0 + 0), mean 1.
  EXPECT_DOUBLE_EQ(reconstruction_mse(est, wave).item(), 1.0);
  EXPECT_DOUBLE_EQ(reconstruction_mse(wave, est).item(), 1.0);
  EXPECT_EQ(reconstruction_mse(wave, wave).item(), 0.0);
  EXPECT_THROW(reconstruction_mse(est, Tensor::from({3, 2}, {0, 0, 0, 0, 0, 0})), ShapeError);
}

// Around the current point the straight-through loss has the same gradient as
// a surrogate in which every stop-gradient operand is replaced by its current
// value as a constant: the assignments, the offset z_q - z_c, z_c inside the
// codebook term and z_q inside the commitment term. The surrogate's gradient
// is checked against finite differences and the real path must reproduce it.
TEST(EndToEndTest, ReconstructThroughQuantizerIsDifferentiable) {
  std::mt19937_64 rng(61);
  ParamSet params;
  const CodexEncoder enc = CodexEncoder::create(params, "codex", kDim, kHeads, 1, 16, 8, rng);
  const Codebook cb = Codebook::create(params, "codebook", 8, kDim, rng);
  const ReconDecoder recon = ReconDecoder::create(params, "recon", kDim, 3, kHeads, 1, 16, 8, rng);
  const EmbeddingSequence x = random_sequence(3, kDim, rng);
  const Tensor wave = Tensor::from({3, 60}, uniform_values(180, 1.0, rng));

  const auto real = [&] {
    const EmbeddingSequence zc = enc.encode(x);
    const Quantized q = quantize(zc, cb);
    const VqTerms vq = vq_terms(zc, q.z_q, 0.25);
    return ops::add(reconstruction_mse(recon.reconstruct(straight_through(zc, q.z_q)), wave),
                    ops::add(vq.codebook, vq.commitment));
  };

  std::vector<int> indices;
  Tensor zc0, zq0;
  {
    NoGradGuard no_grad;
    const EmbeddingSequence zc = enc.encode(x);
    const Quantized q = quantize(zc, cb);
    indices = q.indices;
    zc0 = zc.values.detached_copy();
    zq0 = q.z_q.values.detached_copy();
  }
  const auto sq = [](const Tensor& a, const Tensor& b) {
    const Tensor d = ops::sub(a, b);
    return ops::scale(ops::sum(ops::mul(d, d)), 1.0 / static_cast<double>(a.rows()));
  };
  const auto surrogate = [&] {
    const Tensor zc = enc.encode(x).values;
    const Tensor zq = ops::embedding_lookup(cb.entries, indices);
    const Tensor st = ops::add(zc, ops::sub(zq0, zc0));
    return ops::add(reconstruction_mse(recon.reconstruct(EmbeddingSequence::full(st)), wave),
                    ops::add(sq(zc0, zq), ops::scale(sq(zc, zq0), 0.25)));
  };

  params.clear_grads();
  real().backward();
  std::vector<std::vector<double>> real_grads;
  for (const auto& [name, t] : params) real_grads.emplace_back(t.grad().begin(), t.grad().end());
  params.clear_grads();
  surrogate().backward();
  std::size_t p = 0;
  for (const auto& [name, t] : params) {
    ASSERT_EQ(real_grads[p].size(), t.grad().size()) << name;
    for (std::size_t i = 0; i < t.grad().size(); ++i) EXPECT_NEAR(real_grads[p][i], t.grad()[i], 1e-12) << name;
    ++p;
  }
  params.clear_grads();

  GradCheckOptions opt;
  opt.min_coordinates = 300;
  const GradCheckResult r = grad_check(surrogate, params, opt);
  EXPECT_LT(r.max_relative_error, 1e-3) << r.worst_parameter;
}

TEST(TextEmbeddingTest, RowsForContentTokens) {
  std::mt19937_64 rng(71);
  ParamSet params;
  const TextEmbedding t = TextEmbedding::create(params, "text", kVocab, kDim, rng);
  const std::vector<int> ids{1, 4, 3, 2};
  const EmbeddingSequence e = t.embed(ids);
  ASSERT_EQ(e.length(), 2u);
  // UNK is an ordinary content row.
  for (std::size_t c = 0; c < kDim; ++c) EXPECT_EQ(e.values.at(1, c), t.table.at(3, c));
  for (double v : t.table.values()) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(static_cast<double>(kDim)));
  const std::vector<int> bad{1, -1};
  EXPECT_THROW(t.embed(bad), RangeError);
}

}  // namespace
}  // namespace dewave

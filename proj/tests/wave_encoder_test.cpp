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

#include "dewave/errors.hpp"
#include "dewave/ops.hpp"
#include "dewave/params.hpp"
#include "dewave/wave_encoder.hpp"

namespace dewave {
namespace {

Tensor random_wave(std::size_t channels, std::size_t samples, std::mt19937_64& rng) {
  return Tensor::from({channels, samples}, uniform_values(channels * samples, 1.0, rng));
}

ConvSchedule narrow_schedule(std::size_t width) {
  ConvSchedule s;
  s.width = width;
  return s;
}

TEST(ReceptiveFieldTest, DefaultScheduleAt500Hz) {
  const ReceptiveField rf = receptive_field(ConvSchedule{}, 500.0);
  EXPECT_EQ(rf.rf_samples, 76u);
  EXPECT_EQ(rf.hop_samples, 48u);
  EXPECT_DOUBLE_EQ(rf.rf_ms, 152.0);
  EXPECT_DOUBLE_EQ(rf.hop_ms, 96.0);
}

TEST(ReceptiveFieldTest, SingleAndIdentityLayers) {
  ConvSchedule one;
  one.kernels = {10};
  one.strides = {3};
  EXPECT_EQ(receptive_field(one, 500.0).rf_samples, 10u);
  EXPECT_EQ(receptive_field(one, 500.0).hop_samples, 3u);

  ConvSchedule id;
  id.kernels = {1};
  id.strides = {1};
  EXPECT_EQ(receptive_field(id, 500.0).rf_samples, 1u);
  EXPECT_EQ(receptive_field(id, 500.0).hop_samples, 1u);
  EXPECT_EQ(conv_output_length(id, 37), 37u);
}

TEST(ConvLengthTest, PaddedInputGives114Positions) {
  EXPECT_EQ(conv_layer_lengths(ConvSchedule{}, 5500), (std::vector<std::size_t>{1831, 915, 457, 228, 114}));
  EXPECT_EQ(conv_output_length(ConvSchedule{}, 5500), 114u);
}

TEST(ConvLengthTest, ShortInputs) {
  EXPECT_EQ(conv_output_length(ConvSchedule{}, 76), 1u);
  EXPECT_THROW(conv_output_length(ConvSchedule{}, 75), InputError);
  EXPECT_THROW(conv_output_length(ConvSchedule{}, 60), InputError);
}

TEST(ConvLengthTest, MatchesWindowCountOnRandomLengths) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> len(76, 20000);
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = len(rng);
    // Count windows of 76 samples at hop 48 that fit inside n samples.
    std::size_t windows = 0;
    while (windows * 48 + 76 <= n) ++windows;
    EXPECT_EQ(conv_output_length(ConvSchedule{}, n), windows) << "n=" << n;
  }
}

TEST(ConvScheduleTest, RejectsBadSchedules) {
  ConvSchedule s;
  s.strides.pop_back();
  EXPECT_THROW(s.validate(), ConfigError);
  ConvSchedule empty;
  empty.kernels.clear();
  empty.strides.clear();
  EXPECT_THROW(empty.validate(), ConfigError);
  ConvSchedule narrow;
  narrow.kernels = {2};
  narrow.strides = {3};
  EXPECT_THROW(narrow.validate(), ConfigError);
}

class WaveEncoderTest : public ::testing::Test {
 protected:
  static constexpr std::size_t kChannels = 5;
  static constexpr std::size_t kDim = 8;

  void SetUp() override {
    std::mt19937_64 rng(3);
    enc = WaveEncoder::create(params, "wave", kChannels, narrow_schedule(kDim), 2, 16, 114, rng);
  }

  ParamSet params;
  WaveEncoder enc;
};

TEST_F(WaveEncoderTest, PaddedWaveGives114ByDim) {
  std::mt19937_64 rng(4);
  const EmbeddingSequence out = enc.forward(random_wave(kChannels, 5500, rng), 5500);
  EXPECT_EQ(out.length(), 114u);
  EXPECT_EQ(out.dim(), kDim);
  EXPECT_TRUE(out.all_valid());
}

TEST_F(WaveEncoderTest, SamplesPastTheStatisticsSpanOnlyAffectLaterRows) {
  std::mt19937_64 rng(5);
  const std::size_t span = 76 + 48 * 3;
  Tensor wave = random_wave(kChannels, span + 48 * 4, rng);
  const Tensor a = enc.conv_features(wave, span);
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t s = span; s < wave.cols(); ++s) wave.mutable_values()[c * wave.cols() + s] += 5.0;
  const Tensor b = enc.conv_features(wave, span);
  ASSERT_EQ(a.rows(), 8u);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t c = 0; c < kDim; ++c) EXPECT_NEAR(a.at(t, c), b.at(t, c), 1e-12) << t;
  double diff = 0.0;
  for (std::size_t c = 0; c < kDim; ++c) diff += std::abs(a.at(7, c) - b.at(7, c));
  EXPECT_GT(diff, 1e-6);
}

TEST_F(WaveEncoderTest, FeaturesVaryOverTime) {
  std::mt19937_64 rng(15);
  const Tensor f = enc.conv_features(random_wave(kChannels, 76 + 48 * 9, rng));
  double spread = 0.0;
  for (std::size_t c = 0; c < kDim; ++c) spread += std::abs(f.at(0, c) - f.at(9, c));
  EXPECT_GT(spread, 0.1);
}

TEST_F(WaveEncoderTest, TrimmedForwardEqualsMaskedForward) {
  std::mt19937_64 rng(6);
  Tensor wave = random_wave(kChannels, 1000, rng);
  const std::size_t valid_samples = 400;
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t s = valid_samples; s < 1000; ++s) wave.mutable_values()[c * 1000 + s] = 0.0;
  const EmbeddingSequence masked = enc.forward(wave, valid_samples, false);
  const EmbeddingSequence trimmed = enc.forward(wave, valid_samples, true);
  const std::size_t expected_valid = (valid_samples + 47) / 48;
  EXPECT_EQ(masked.valid(), expected_valid);
  ASSERT_EQ(trimmed.length(), expected_valid);
  for (std::size_t t = 0; t < masked.length(); ++t) {
    for (std::size_t c = 0; c < kDim; ++c) {
      if (t < expected_valid) {
        EXPECT_NEAR(masked.values.at(t, c), trimmed.values.at(t, c), 1e-10);
      } else {
        EXPECT_EQ(masked.values.at(t, c), 0.0);
      }
    }
  }
}

TEST_F(WaveEncoderTest, RejectsWrongChannelCount) {
  std::mt19937_64 rng(7);
  EXPECT_THROW(enc.forward(random_wave(kChannels + 1, 500, rng), 500), ShapeError);
}

TEST_F(WaveEncoderTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(8);
  const Tensor wave = random_wave(kChannels, 76 + 48 * 3, rng);
  const Tensor weights = Tensor::from({4, kDim}, uniform_values(4 * kDim, 1.0, rng));
  const auto f = [&] { return ops::sum(ops::mul(enc.forward(wave, wave.cols()).values, weights)); };
  GradCheckOptions opt;
  opt.min_coordinates = 200;
  EXPECT_LT(grad_check(f, params, opt).max_relative_error, 1e-4);
}

class WordProjectorTest : public ::testing::Test {
 protected:
  static constexpr std::size_t kDim = 8;

  void SetUp() override {
    std::mt19937_64 rng(9);
    proj = WordProjector::create(params, "words", 840, kDim, 2, 16, kMaxWordTokens, rng);
  }

  ParamSet params;
  WordProjector proj;
};

TEST_F(WordProjectorTest, MapsPaddedFeaturesToModelDim) {
  std::mt19937_64 rng(10);
  std::vector<std::vector<double>> rows(12);
  for (auto& r : rows) r = uniform_values(840, 1.0, rng);
  const FeatureSequence seq = feature_sequence_from_rows(rows, 840);
  const EmbeddingSequence out = project_word_features(proj, seq);
  EXPECT_EQ(out.length(), kMaxWordTokens);
  EXPECT_EQ(out.dim(), kDim);
  EXPECT_EQ(out.valid(), 12u);
  for (std::size_t t = 12; t < kMaxWordTokens; ++t)
    for (std::size_t c = 0; c < kDim; ++c) EXPECT_EQ(out.values.at(t, c), 0.0);
}

TEST_F(WordProjectorTest, PaddingDoesNotLeakIntoValidRows) {
  std::mt19937_64 rng(11);
  std::vector<std::vector<double>> rows(5);
  for (auto& r : rows) r = uniform_values(840, 1.0, rng);
  FeatureSequence seq = feature_sequence_from_rows(rows, 840);
  const EmbeddingSequence a = project_word_features(proj, seq);
  for (std::size_t t = 5; t < seq.features.size(); ++t) seq.features[t].values.assign(840, 3.0);
  const EmbeddingSequence b = project_word_features(proj, seq);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c = 0; c < kDim; ++c) EXPECT_NEAR(a.values.at(t, c), b.values.at(t, c), 1e-12);
}

TEST_F(WordProjectorTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(12);
  const Tensor features = Tensor::from({4, 840}, uniform_values(4 * 840, 1.0, rng));
  const std::vector<std::uint8_t> mask{1, 1, 1, 0};
  const Tensor weights = Tensor::from({4, kDim}, uniform_values(4 * kDim, 1.0, rng));
  const auto f = [&] { return ops::sum(ops::mul(proj.forward(features, mask).values, weights)); };
  GradCheckOptions opt;
  opt.min_coordinates = 200;
  EXPECT_LT(grad_check(f, params, opt).max_relative_error, 1e-4);
}

TEST(PrepareWaveTest, NormalisesThenPads) {
  EEGRecording rec;
  rec.channels = 2;
  rec.samples = 3;
  rec.data = {1, 2, 3, 5, 5, 5};
  const PreparedWave p = prepare_wave(rec, 6);
  EXPECT_EQ(p.valid_samples, 3u);
  ASSERT_EQ(p.wave.shape(), (Shape{2, 6}));
  // Min-max over the whole recording: min 1, max 5.
  const std::vector<double> expected{0, 0.25, 0.5, 0, 0, 0, 1, 1, 1, 0, 0, 0};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(p.wave.values()[i], expected[i], 1e-7) << i;

  const PreparedWave clipped = prepare_wave(rec, 2);
  EXPECT_EQ(clipped.valid_samples, 2u);
  EXPECT_EQ(clipped.wave.cols(), 2u);
}

}  // namespace
}  // namespace dewave

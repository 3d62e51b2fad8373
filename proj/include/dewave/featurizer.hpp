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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dewave/corpus.hpp"

namespace dewave {

struct BandSpec {
  std::string name;
  double low = 0.0;
  // +infinity means "up to Nyquist".
  double high = std::numeric_limits<double>::infinity();
};

// Theta 5-7, Alpha 8-13, Beta 12-30, Gamma 30-Nyquist.
std::vector<BandSpec> default_bands();

inline constexpr std::size_t kStatsPerBand = 2;  // mean power, max power
inline constexpr std::size_t kMaxWordTokens = 56;

struct WordFeature {
  std::vector<double> values;  // channel-major, then band, then statistic
  std::size_t word_index = 0;
};

// Length of the zero-padded transform: at least the fragment length and at
// least one second of samples, so every band holds at least one bin.
std::size_t spectrum_length(std::size_t duration, double fs);

// Mean and max of the in-band power |X_k|^2 / n^2 of each channel's discrete
// Fourier spectrum. A bin on an edge shared by two bands belongs to the lower
// band. Throws InputError for fragments shorter than 8 samples, ConfigError
// when fs cannot resolve the band edges, and NumericError for non-finite
// input.
WordFeature band_power_features(const EEGRecording& fragment, double fs,
                                std::span<const BandSpec> bands);
WordFeature band_power_features(const EEGRecording& fragment);

struct FeatureSequence {
  std::vector<WordFeature> features;  // always max_words entries
  std::vector<std::uint8_t> mask;     // 1 for real words, 0 for padding
  std::size_t valid() const;
  std::size_t dim() const { return features.empty() ? 0 : features.front().values.size(); }
};

// One feature per word in text order, clipped or zero-padded to max_words.
FeatureSequence featurize_sample(const Sample& s, std::size_t max_words = kMaxWordTokens,
                                 std::span<const BandSpec> bands = {});

// Builds a padded sequence from externally supplied rows (one per word).
FeatureSequence feature_sequence_from_rows(const std::vector<std::vector<double>>& rows,
                                           std::size_t dim, std::size_t max_words = kMaxWordTokens);

// float32 LE matrix with a u32 rows, u32 cols header.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
};
void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_feature_matrix(const std::filesystem::path& path);

}  // namespace dewave

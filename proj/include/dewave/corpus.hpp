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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dewave {

// Multichannel wave stored channel-major (row c holds channel c).
struct EEGRecording {
  std::size_t channels = 0;
  std::size_t samples = 0;
  double fs = 500.0;
  std::vector<float> data;
  std::string subject;

  float at(std::size_t c, std::size_t t) const { return data[c * samples + t]; }
  float& at(std::size_t c, std::size_t t) { return data[c * samples + t]; }
  // Throws DataError when the invariants do not hold.
  void validate() const;
  bool operator==(const EEGRecording&) const = default;
};

struct FixationSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::size_t word_index = 0;
  bool operator==(const FixationSpan&) const = default;
};

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split s);
// Throws DataError for anything but "train", "dev", "test".
Split parse_split(std::string_view name);

// One EEG-text pair. `words` keeps the surface tokens; IDs come from a
// Vocabulary so the same dataset can be encoded against different tables.
struct Sample {
  std::string id;
  EEGRecording recording;
  std::vector<FixationSpan> fixations;  // empty in raw-wave only data
  std::vector<std::string> words;
  Split split = Split::kTrain;

  void validate() const;
  bool operator==(const Sample&) const = default;
};

// Lowercases and splits on whitespace; punctuation characters become tokens
// of their own.
std::vector<std::string> tokenize(std::string_view text);

struct TokenSequence {
  std::vector<int> ids;             // BOS ... EOS
  std::vector<std::string> words;   // surface tokens without specials
};

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kNumSpecial = 4;

  Vocabulary();
  // Sorted unique tokens of the training split follow the special tokens.
  static Vocabulary build(const std::vector<Sample>& samples);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  int id(std::string_view token) const;  // kUnk when absent
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // BOS + ids + EOS; at most max_words surface tokens are kept.
  TokenSequence encode(const std::vector<std::string>& words,
                       std::size_t max_words = SIZE_MAX) const;
  // Drops PAD/BOS/EOS; stops at the first EOS.
  std::vector<std::string> decode(const std::vector<int>& ids) const;
  static bool is_special(int id) { return id == kPad || id == kBos || id == kEos; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;  // surface tokens only
};

// Per-recording min-max scaling to [0, 1]; constant input maps to zeros.
EEGRecording normalize_wave(const EEGRecording& rec);
// Right-pads with zeros or clips at the end to exactly `target` samples.
EEGRecording pad_or_clip(const EEGRecording& rec, std::size_t target = 5500);
// One fragment per word in word order; repeated fixations of a word are
// concatenated in span order. Throws RangeError for spans outside the
// recording and MissingWordError when a word has no fixation.
std::vector<EEGRecording> slice_by_fixations(const Sample& s);

struct SynthConfig {
  std::size_t vocab_size = 50;
  std::size_t sentences = 32;
  std::size_t min_words = 3;
  std::size_t max_words = 8;
  std::size_t channels = 105;
  double fs = 500.0;
  double noise = 0.1;
  std::size_t min_word_samples = 100;
  std::size_t max_word_samples = 150;
  std::size_t subjects = 1;
};

// Deterministic synthetic corpus: every vocabulary word owns a fixed
// per-channel oscillation template of fixed duration; a sentence is the
// concatenation of its words' templates plus Gaussian noise. Throws
// ConfigError for vocab_size < 5 or sentences < 1.
std::vector<Sample> synth_corpus(const SynthConfig& cfg, std::uint64_t seed);
// The word list synth_corpus draws from.
std::vector<std::string> synth_words(std::size_t vocab_size);

// Directory layout: manifest.json plus one binary wave file per sample.
void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir);
std::vector<Sample> load_dataset(const std::filesystem::path& dir);

// Wave file: "DWEEG\0\0\0", u32 channels, u32 samples, float32 LE data.
void write_wave_file(const EEGRecording& rec, const std::filesystem::path& path);
EEGRecording read_wave_file(const std::filesystem::path& path);

std::vector<Sample> filter_split(const std::vector<Sample>& samples, Split split,
                                 const std::vector<std::string>& subjects = {});

}  // namespace dewave

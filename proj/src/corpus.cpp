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

#include "dewave/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "json.hpp"

#include "dewave/binary_io.hpp"
#include "dewave/errors.hpp"

namespace dewave {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr char kWaveMagic[8] = {'D', 'W', 'E', 'E', 'G', '\0', '\0', '\0'};
}  // namespace

void EEGRecording::validate() const {
  if (channels < 1) throw DataError("EEGRecording: channels must be >= 1");
  if (samples < 1) throw DataError("EEGRecording: samples must be >= 1");
  if (!(fs > 0.0)) throw DataError("EEGRecording: sampling rate must be positive");
  if (data.size() != channels * samples) {
    throw DataError("EEGRecording: data has " + std::to_string(data.size()) + " values, expected " +
                    std::to_string(channels) + "x" + std::to_string(samples));
  }
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw DataError("unknown split '" + std::string(name) + "'");
}

void Sample::validate() const {
  recording.validate();
  if (words.empty()) throw DataError("sample " + id + ": empty token list");
  for (const auto& f : fixations) {
    if (f.start >= f.end || f.end > recording.samples) {
      throw DataError("sample " + id + ": fixation [" + std::to_string(f.start) + ", " +
                      std::to_string(f.end) + ") outside recording of " +
                      std::to_string(recording.samples) + " samples");
    }
    if (f.word_index >= words.size()) {
      throw DataError("sample " + id + ": fixation word_index " + std::to_string(f.word_index) +
                      " >= token count " + std::to_string(words.size()));
    }
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isspace(uc)) {
      flush();
    } else if (std::ispunct(uc)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() : tokens_{"<pad>", "<bos>", "<eos>", "<unk>"} {}

Vocabulary Vocabulary::build(const std::vector<Sample>& samples) {
  std::set<std::string> uniq;
  for (const auto& s : samples) {
    if (s.split != Split::kTrain) continue;
    for (const auto& w : s.words) uniq.insert(w);
  }
  return from_tokens(std::vector<std::string>(uniq.begin(), uniq.end()));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  for (auto& t : tokens) {
    if (v.index_.count(t)) throw DataError("Vocabulary: duplicate token '" + t + "'");
    v.index_.emplace(t, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(std::move(t));
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw RangeError("Vocabulary: id " + std::to_string(id) + " outside vocabulary of " +
                     std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenSequence Vocabulary::encode(const std::vector<std::string>& words, std::size_t max_words) const {
  TokenSequence seq;
  seq.ids.push_back(kBos);
  for (std::size_t i = 0; i < words.size() && i < max_words; ++i) {
    seq.ids.push_back(id(words[i]));
    seq.words.push_back(words[i]);
  }
  seq.ids.push_back(kEos);
  return seq;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kEos) break;
    if (is_special(id)) continue;
    out.push_back(token(id));
  }
  return out;
}

EEGRecording normalize_wave(const EEGRecording& rec) {
  EEGRecording out = rec;
  if (rec.data.empty()) return out;
  auto [lo_it, hi_it] = std::minmax_element(rec.data.begin(), rec.data.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(out.data.begin(), out.data.end(), 0.0f);
    return out;
  }
  const double range = hi - lo;
  for (auto& v : out.data) v = static_cast<float>((static_cast<double>(v) - lo) / range);
  return out;
}

EEGRecording pad_or_clip(const EEGRecording& rec, std::size_t target) {
  if (target < 1) throw ConfigError("pad_or_clip: target must be >= 1");
  EEGRecording out;
  out.channels = rec.channels;
  out.samples = target;
  out.fs = rec.fs;
  out.subject = rec.subject;
  out.data.assign(rec.channels * target, 0.0f);
  const std::size_t keep = std::min(target, rec.samples);
  for (std::size_t c = 0; c < rec.channels; ++c)
    std::copy_n(rec.data.begin() + static_cast<std::ptrdiff_t>(c * rec.samples), keep,
                out.data.begin() + static_cast<std::ptrdiff_t>(c * target));
  return out;
}

std::vector<EEGRecording> slice_by_fixations(const Sample& s) {
  const auto& rec = s.recording;
  if (s.fixations.empty()) throw InputError("slice_by_fixations: sample " + s.id + " has no fixations");
  std::size_t words = 0;
  for (const auto& f : s.fixations) {
    if (f.start >= f.end || f.end > rec.samples) {
      throw RangeError("slice_by_fixations: span [" + std::to_string(f.start) + ", " +
                       std::to_string(f.end) + ") outside recording of " + std::to_string(rec.samples) +
                       " samples in sample " + s.id);
    }
    words = std::max(words, f.word_index + 1);
  }
  words = std::max(words, s.words.size());
  std::vector<std::vector<const FixationSpan*>> by_word(words);
  for (const auto& f : s.fixations) by_word[f.word_index].push_back(&f);

  std::vector<std::size_t> missing;
  for (std::size_t w = 0; w < words; ++w)
    if (by_word[w].empty()) missing.push_back(w);
  if (!missing.empty()) {
    std::string list;
    for (auto w : missing) list += (list.empty() ? "" : ", ") + std::to_string(w);
    throw MissingWordError("slice_by_fixations: sample " + s.id + " has no fixation for word(s) " + list,
                           missing);
  }

  std::vector<EEGRecording> out;
  out.reserve(words);
  for (std::size_t w = 0; w < words; ++w) {
    std::size_t duration = 0;
    for (const auto* f : by_word[w]) duration += f->end - f->start;
    EEGRecording frag;
    frag.channels = rec.channels;
    frag.samples = duration;
    frag.fs = rec.fs;
    frag.subject = rec.subject;
    frag.data.resize(rec.channels * duration);
    for (std::size_t c = 0; c < rec.channels; ++c) {
      std::size_t t = 0;
      for (const auto* f : by_word[w]) {
        for (std::size_t i = f->start; i < f->end; ++i) frag.at(c, t++) = rec.at(c, i);
      }
    }
    out.push_back(std::move(frag));
  }
  return out;
}

std::vector<std::string> synth_words(std::size_t vocab_size) {
  static const char* kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ba", "de",
                                     "fu", "go", "hi", "ja", "ke", "ma", "no", "pi", "re", "zu"};
  constexpr std::size_t kBase = std::size(kSyllables);
  std::vector<std::string> words;
  words.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    std::string w;
    std::size_t v = i;
    for (int d = 0; d < 3; ++d) {
      w = std::string(kSyllables[v % kBase]) + w;
      v /= kBase;
    }
    if (v > 0) w = std::to_string(v) + w;
    words.push_back(std::move(w));
  }
  return words;
}

std::vector<Sample> synth_corpus(const SynthConfig& cfg, std::uint64_t seed) {
  if (cfg.vocab_size < 5) throw ConfigError("synth: vocab_size must be >= 5");
  if (cfg.sentences < 1) throw ConfigError("synth: sentences must be >= 1");
  if (cfg.min_words < 1 || cfg.max_words < cfg.min_words) throw ConfigError("synth: invalid word count range");
  if (cfg.channels < 1) throw ConfigError("synth: channels must be >= 1");
  if (!(cfg.fs > 0.0)) throw ConfigError("synth: fs must be positive");
  if (cfg.min_word_samples < 1 || cfg.max_word_samples < cfg.min_word_samples)
    throw ConfigError("synth: invalid word duration range");
  if (cfg.subjects < 1) throw ConfigError("synth: subjects must be >= 1");
  if (cfg.noise < 0.0) throw ConfigError("synth: noise must be >= 0");

  std::mt19937_64 rng(seed);
  const auto words = synth_words(cfg.vocab_size);

  // Per-word templates: frequency, phase and amplitude for every channel.
  struct Template {
    std::size_t duration;
    std::vector<double> freq, phase, amp;
  };
  const double nyquist = cfg.fs / 2.0;
  const double f_hi = std::min(45.0, 0.8 * nyquist);
  std::uniform_real_distribution<double> freq_dist(4.0, std::max(4.5, f_hi));
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp_dist(0.5, 1.5);
  std::uniform_int_distribution<std::size_t> dur_dist(cfg.min_word_samples, cfg.max_word_samples);
  std::vector<Template> templates(cfg.vocab_size);
  for (auto& t : templates) {
    t.duration = dur_dist(rng);
    t.freq.resize(cfg.channels);
    t.phase.resize(cfg.channels);
    t.amp.resize(cfg.channels);
    for (std::size_t c = 0; c < cfg.channels; ++c) {
      t.freq[c] = freq_dist(rng);
      t.phase[c] = phase_dist(rng);
      t.amp[c] = amp_dist(rng);
    }
  }

  // Sentence contents.
  std::uniform_int_distribution<std::size_t> len_dist(cfg.min_words, cfg.max_words);
  std::uniform_int_distribution<std::size_t> word_dist(0, cfg.vocab_size - 1);
  std::vector<std::vector<std::size_t>> sentences(cfg.sentences);
  for (auto& s : sentences) {
    s.resize(len_dist(rng));
    for (auto& w : s) w = word_dist(rng);
  }

  // 80/10/10 assignment by sentence.
  std::vector<std::size_t> order(cfg.sentences);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<double>(cfg.sentences);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * n));
  const auto n_dev = std::min(cfg.sentences - n_train, static_cast<std::size_t>(std::llround(0.1 * n)));
  std::vector<Split> split(cfg.sentences, Split::kTest);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i < n_train) split[order[i]] = Split::kTrain;
    else if (i < n_train + n_dev) split[order[i]] = Split::kDev;
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Sample> out;
  out.reserve(cfg.sentences);
  for (std::size_t i = 0; i < cfg.sentences; ++i) {
    const auto& sent = sentences[i];
    Sample s;
    char id[32];
    std::snprintf(id, sizeof(id), "s%04zu", i);
    s.id = id;
    s.split = split[i];
    const std::size_t subject = i % cfg.subjects;
    char subj[32];
    std::snprintf(subj, sizeof(subj), "S%02zu", subject + 1);
    const double gain = 1.0 + 0.1 * static_cast<double>(subject);

    std::size_t total = 0;
    for (auto w : sent) total += templates[w].duration;
    EEGRecording& rec = s.recording;
    rec.channels = cfg.channels;
    rec.samples = total;
    rec.fs = cfg.fs;
    rec.subject = subj;
    rec.data.assign(cfg.channels * total, 0.0f);

    std::size_t offset = 0;
    for (std::size_t wi = 0; wi < sent.size(); ++wi) {
      const auto& tpl = templates[sent[wi]];
      s.words.push_back(words[sent[wi]]);
      s.fixations.push_back({offset, offset + tpl.duration, wi});
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        const double w = 2.0 * std::numbers::pi * tpl.freq[c] / cfg.fs;
        for (std::size_t t = 0; t < tpl.duration; ++t) {
          const double clean = tpl.amp[c] * std::sin(w * static_cast<double>(t) + tpl.phase[c]);
          rec.at(c, offset + t) = static_cast<float>(gain * clean);
        }
      }
      offset += tpl.duration;
    }
    if (cfg.noise > 0.0) {
      for (auto& v : rec.data) v = static_cast<float>(v + cfg.noise * noise(rng));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_wave_file(const EEGRecording& rec, const fs::path& path) {
  rec.validate();
  BinaryWriter w;
  w.bytes(kWaveMagic, sizeof(kWaveMagic));
  w.u32(static_cast<std::uint32_t>(rec.channels));
  w.u32(static_cast<std::uint32_t>(rec.samples));
  for (float v : rec.data) w.f32(v);
  w.write_file(path);
}

EEGRecording read_wave_file(const fs::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kWaveMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + ": bad magic, not a wave file");
  }
  EEGRecording rec;
  rec.channels = r.u32();
  rec.samples = r.u32();
  if (rec.channels == 0 || rec.samples == 0) throw DataError(path.string() + ": zero channels or samples");
  const std::size_t n = rec.channels * rec.samples;
  if (r.remaining() != n * 4) {
    throw DataError(path.string() + ": dimension mismatch, header says " + std::to_string(rec.channels) +
                    "x" + std::to_string(rec.samples) + " but file holds " + std::to_string(r.remaining()) +
                    " data bytes");
  }
  rec.data.resize(n);
  for (auto& v : rec.data) v = r.f32();
  return rec;
}

void save_dataset(const std::vector<Sample>& samples, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "waves", ec);
  if (ec) throw DataError(dir.string() + ": cannot create dataset directory: " + ec.message());
  json records = json::array();
  double fs_value = samples.empty() ? 500.0 : samples.front().recording.fs;
  for (const auto& s : samples) {
    s.validate();
    if (s.recording.fs != fs_value) throw DataError("save_dataset: mixed sampling rates are not supported");
    const std::string wave = "waves/" + s.id + ".bin";
    write_wave_file(s.recording, dir / wave);
    json fix = json::array();
    for (const auto& f : s.fixations) fix.push_back({f.start, f.end, f.word_index});
    records.push_back({{"id", s.id},
                       {"subject", s.recording.subject},
                       {"split", split_name(s.split)},
                       {"tokens", s.words},
                       {"wave", wave},
                       {"fixations", std::move(fix)}});
  }
  json manifest = {{"fs", fs_value}, {"records", std::move(records)}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw DataError((dir / "manifest.json").string() + ": cannot open for writing");
  out << manifest.dump(1) << '\n';
}

std::vector<Sample> load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw DataError(manifest_path.string() + ": cannot open");
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  std::vector<Sample> out;
  try {
    const double fs_value = manifest.value("fs", 500.0);
    std::set<std::string> ids;
    for (const auto& r : manifest.at("records")) {
      Sample s;
      s.id = r.at("id").get<std::string>();
      if (!ids.insert(s.id).second) throw DataError("duplicate record id " + s.id);
      s.split = parse_split(r.at("split").get<std::string>());
      s.words = r.at("tokens").get<std::vector<std::string>>();
      const fs::path wave = dir / r.at("wave").get<std::string>();
      s.recording = read_wave_file(wave);
      s.recording.fs = fs_value;
      s.recording.subject = r.at("subject").get<std::string>();
      for (const auto& f : r.at("fixations")) {
        if (!f.is_array() || f.size() != 3) throw DataError("record " + s.id + ": fixation must be [start,end,word_index]");
        s.fixations.push_back({f[0].get<std::size_t>(), f[1].get<std::size_t>(), f[2].get<std::size_t>()});
      }
      s.validate();
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  return out;
}

std::vector<Sample> filter_split(const std::vector<Sample>& samples, Split split,
                                 const std::vector<std::string>& subjects) {
  std::vector<Sample> out;
  for (const auto& s : samples) {
    if (s.split != split) continue;
    if (!subjects.empty() &&
        std::find(subjects.begin(), subjects.end(), s.recording.subject) == subjects.end())
      continue;
    out.push_back(s);
  }
  return out;
}

}  // namespace dewave

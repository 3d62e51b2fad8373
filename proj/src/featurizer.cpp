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

#include "dewave/featurizer.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "dewave/binary_io.hpp"
#include "dewave/errors.hpp"

namespace dewave {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are cached per transform length.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan plan_for(std::size_t n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(n, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [n, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  std::mutex mu_;
  std::map<std::size_t, fftw_plan> plans_;
};

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

std::vector<BandSpec> default_bands() {
  return {{"theta", 5.0, 7.0},
          {"alpha", 8.0, 13.0},
          {"beta", 12.0, 30.0},
          {"gamma", 30.0, std::numeric_limits<double>::infinity()}};
}

std::size_t spectrum_length(std::size_t duration, double fs) {
  return std::max(duration, static_cast<std::size_t>(std::ceil(fs)));
}

WordFeature band_power_features(const EEGRecording& fragment, double fs, std::span<const BandSpec> bands) {
  const std::size_t channels = fragment.channels, n = fragment.samples;
  if (n < 8) throw InputError("band_power_features: fragment of " + std::to_string(n) + " samples (< 8)");
  if (fragment.data.size() != channels * n) throw ShapeError("band_power_features: data does not match channels x samples");
  if (bands.empty()) throw ConfigError("band_power_features: no bands");
  double max_edge = 0.0;
  for (const auto& b : bands) {
    if (!(b.low < b.high)) throw ConfigError("band_power_features: band " + b.name + " has low >= high");
    max_edge = std::max(max_edge, std::isfinite(b.high) ? b.high : b.low);
  }
  if (!(fs > 2.0 * max_edge)) {
    throw ConfigError("band_power_features: fs " + std::to_string(fs) + " Hz cannot resolve band edge " +
                      std::to_string(max_edge) + " Hz");
  }
  for (float v : fragment.data)
    if (!std::isfinite(v)) throw NumericError("band_power_features: non-finite input");

  const std::size_t nfft = spectrum_length(n, fs);
  const std::size_t bins = nfft / 2 + 1;
  const double nyquist = fs / 2.0;

  // Bin -> band (first matching band, i.e. the lower one on shared edges).
  std::vector<int> band_of(bins, -1);
  for (std::size_t k = 0; k < bins; ++k) {
    const double f = static_cast<double>(k) * fs / static_cast<double>(nfft);
    for (std::size_t b = 0; b < bands.size(); ++b) {
      const double hi = std::isfinite(bands[b].high) ? bands[b].high : nyquist;
      if (f >= bands[b].low && f <= hi) {
        band_of[k] = static_cast<int>(b);
        break;
      }
    }
  }

  fftw_plan plan = PlanCache::instance().plan_for(nfft);
  std::unique_ptr<double, FftwDeleter> in(fftw_alloc_real(nfft));
  std::unique_ptr<fftw_complex, FftwDeleter> out(fftw_alloc_complex(bins));

  WordFeature feat;
  feat.values.assign(channels * bands.size() * kStatsPerBand, 0.0);
  const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<double> sum(bands.size()), mx(bands.size());
  std::vector<std::size_t> count(bands.size());
  for (std::size_t c = 0; c < channels; ++c) {
    double* buf = in.get();
    for (std::size_t t = 0; t < n; ++t) buf[t] = fragment.data[c * n + t];
    std::fill(buf + n, buf + nfft, 0.0);
    fftw_execute_dft_r2c(plan, buf, out.get());
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(mx.begin(), mx.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t k = 0; k < bins; ++k) {
      if (band_of[k] < 0) continue;
      const auto b = static_cast<std::size_t>(band_of[k]);
      const double re = out.get()[k][0], im = out.get()[k][1];
      const double p = (re * re + im * im) * norm;
      sum[b] += p;
      mx[b] = std::max(mx[b], p);
      ++count[b];
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
      const std::size_t base = (c * bands.size() + b) * kStatsPerBand;
      feat.values[base] = count[b] ? sum[b] / static_cast<double>(count[b]) : 0.0;
      feat.values[base + 1] = mx[b];
    }
  }
  return feat;
}

WordFeature band_power_features(const EEGRecording& fragment) {
  const auto bands = default_bands();
  return band_power_features(fragment, fragment.fs, bands);
}

std::size_t FeatureSequence::valid() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

FeatureSequence featurize_sample(const Sample& s, std::size_t max_words, std::span<const BandSpec> bands) {
  std::vector<BandSpec> fallback;
  if (bands.empty()) {
    fallback = default_bands();
    bands = fallback;
  }
  const auto fragments = slice_by_fixations(s);
  const std::size_t dim = s.recording.channels * bands.size() * kStatsPerBand;
  FeatureSequence seq;
  seq.features.resize(max_words);
  seq.mask.assign(max_words, 0);
  for (std::size_t w = 0; w < max_words; ++w) {
    seq.features[w].word_index = w;
    if (w < fragments.size()) {
      seq.features[w] = band_power_features(fragments[w], s.recording.fs, bands);
      seq.features[w].word_index = w;
      seq.mask[w] = 1;
    } else {
      seq.features[w].values.assign(dim, 0.0);
    }
  }
  return seq;
}

FeatureSequence feature_sequence_from_rows(const std::vector<std::vector<double>>& rows, std::size_t dim,
                                           std::size_t max_words) {
  FeatureSequence seq;
  seq.features.resize(max_words);
  seq.mask.assign(max_words, 0);
  for (std::size_t w = 0; w < max_words; ++w) {
    seq.features[w].word_index = w;
    if (w < rows.size()) {
      if (rows[w].size() != dim) throw ShapeError("feature row has " + std::to_string(rows[w].size()) +
                                                  " values, expected " + std::to_string(dim));
      seq.features[w].values = rows[w];
      seq.mask[w] = 1;
    } else {
      seq.features[w].values.assign(dim, 0.0);
    }
  }
  return seq;
}

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  if (m.data.size() != m.rows * m.cols) throw ShapeError("write_feature_matrix: data does not match rows x cols");
  BinaryWriter w;
  w.u32(static_cast<std::uint32_t>(m.rows));
  w.u32(static_cast<std::uint32_t>(m.cols));
  for (float v : m.data) w.f32(v);
  w.write_file(path);
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  FeatureMatrix m;
  m.rows = r.u32();
  m.cols = r.u32();
  if (r.remaining() != m.rows * m.cols * 4) {
    throw DataError(path.string() + ": header says " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                    " but file holds " + std::to_string(r.remaining()) + " data bytes");
  }
  m.data.resize(m.rows * m.cols);
  for (auto& v : m.data) v = r.f32();
  return m;
}

}  // namespace dewave

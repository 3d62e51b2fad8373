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

#include "dewave/wave_encoder.hpp"

#include <algorithm>
#include <cmath>

#include "dewave/errors.hpp"
#include "dewave/ops.hpp"

namespace dewave {

std::size_t EmbeddingSequence::valid() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

EmbeddingSequence EmbeddingSequence::trimmed() const {
  const std::size_t n = valid();
  for (std::size_t i = 0; i < n; ++i)
    if (!mask[i]) throw ShapeError("EmbeddingSequence::trimmed: masked row " + std::to_string(i) + " precedes valid rows");
  if (n == length()) return *this;
  return {ops::slice_rows(values, 0, n), std::vector<std::uint8_t>(n, 1)};
}

EmbeddingSequence EmbeddingSequence::full(Tensor values) {
  const std::size_t n = values.rows();
  return {std::move(values), std::vector<std::uint8_t>(n, 1)};
}

void ConvSchedule::validate() const {
  if (kernels.empty()) throw ConfigError("conv schedule: no layers");
  if (kernels.size() != strides.size()) {
    throw ConfigError("conv schedule: " + std::to_string(kernels.size()) + " kernels but " +
                      std::to_string(strides.size()) + " strides");
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (strides[i] < 1 || kernels[i] < strides[i]) {
      throw ConfigError("conv schedule: layer " + std::to_string(i) + " needs kernel >= stride >= 1");
    }
  }
  if (width == 0) throw ConfigError("conv schedule: width must be positive");
}

ReceptiveField receptive_field(const ConvSchedule& sched, double fs) {
  sched.validate();
  if (!(fs > 0)) throw ConfigError("receptive_field: fs must be positive");
  std::size_t rf = 1, hop = 1;
  for (std::size_t i = sched.kernels.size(); i-- > 0;) rf = (rf - 1) * sched.strides[i] + sched.kernels[i];
  for (auto s : sched.strides) hop *= s;
  return {rf, hop, 1000.0 * static_cast<double>(rf) / fs, 1000.0 * static_cast<double>(hop) / fs};
}

std::vector<std::size_t> conv_layer_lengths(const ConvSchedule& sched, std::size_t samples) {
  sched.validate();
  std::vector<std::size_t> lengths;
  std::size_t len = samples;
  for (std::size_t i = 0; i < sched.kernels.size(); ++i) {
    if (len < sched.kernels[i]) {
      const auto rf = receptive_field(sched, 1.0).rf_samples;
      throw InputError("conv stack: input of " + std::to_string(samples) + " samples is shorter than the " +
                       std::to_string(rf) + "-sample receptive field");
    }
    len = (len - sched.kernels[i]) / sched.strides[i] + 1;
    lengths.push_back(len);
  }
  return lengths;
}

std::size_t conv_output_length(const ConvSchedule& sched, std::size_t samples) {
  return conv_layer_lengths(sched, samples).back();
}

WaveEncoder WaveEncoder::create(ParamSet& params, const std::string& name, std::size_t channels,
                                const ConvSchedule& sched, std::size_t heads, std::size_t ffn_hidden,
                                std::size_t max_positions, std::mt19937_64& rng) {
  sched.validate();
  const std::size_t m = sched.width;
  WaveEncoder e;
  e.schedule = sched;
  const double fb = 1.0 / std::sqrt(static_cast<double>(channels));
  e.fusion_w = params.add(name + ".fusion.weight",
                          Tensor::parameter({m, channels, 1}, uniform_values(m * channels, fb, rng)));
  e.fusion_b = params.add(name + ".fusion.bias", Tensor::parameter({m}, uniform_values(m, fb, rng)));
  // He-uniform weights and zero biases keep the signal's scale through the
  // GELU stack.
  for (std::size_t i = 0; i < sched.kernels.size(); ++i) {
    const std::size_t k = sched.kernels[i];
    const double bound = std::sqrt(6.0 / static_cast<double>(m * k));
    const std::string base = name + ".conv" + std::to_string(i);
    e.conv_w.push_back(params.add(base + ".weight", Tensor::parameter({m, m, k}, uniform_values(m * m * k, bound, rng))));
    e.conv_b.push_back(params.add(base + ".bias", Tensor::parameter({m}, std::vector<double>(m, 0.0))));
  }
  e.norm = nn::LayerNorm::create(params, name + ".norm", m);
  e.positions = nn::PositionalEmbedding::create(params, name + ".positions", max_positions, m, rng);
  e.attention = nn::EncoderLayer::create(params, name + ".attention", m, heads, ffn_hidden, rng);
  return e;
}

Tensor WaveEncoder::conv_features(const Tensor& wave, std::size_t stats_samples) const {
  if (wave.rank() != 2 || wave.dim(0) != fusion_w.dim(1)) {
    throw ShapeError("wave encoder: expected [" + std::to_string(fusion_w.dim(1)) + " x samples] input, got " +
                     shape_str(wave.shape()));
  }
  conv_layer_lengths(schedule, wave.dim(1));
  const std::size_t span = stats_samples == 0 ? wave.dim(1) : std::min(stats_samples, wave.dim(1));
  const std::size_t stats_cols = conv_layer_lengths(schedule, span).front();
  Tensor h = ops::conv1d(wave, fusion_w, fusion_b, 1);
  for (std::size_t i = 0; i < conv_w.size(); ++i) {
    h = ops::conv1d(h, conv_w[i], conv_b[i], schedule.strides[i]);
    if (i == 0) h = ops::standardize_rows(h, stats_cols);
    h = ops::gelu(h);
  }
  return ops::transpose(h);
}

EmbeddingSequence WaveEncoder::forward(const Tensor& wave, std::size_t valid_samples, bool trim) const {
  const auto rf = receptive_field(schedule, 1.0);
  const std::size_t total = conv_output_length(schedule, wave.cols());
  const std::size_t valid = std::min(total, (valid_samples + rf.hop_samples - 1) / rf.hop_samples);
  if (valid == 0) throw InputError("wave encoder: recording has no valid samples");

  const std::size_t need = (valid - 1) * rf.hop_samples + rf.rf_samples;
  if (trim) {
    const Tensor input = need < wave.cols() ? ops::slice_cols(wave, 0, need) : wave;
    Tensor x = conv_features(input);
    if (x.rows() > valid) x = ops::slice_rows(x, 0, valid);
    x = positions(norm(x));
    return EmbeddingSequence::full(attention(x, Tensor()));
  }

  std::vector<std::uint8_t> mask(total, 0);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(valid), 1);
  Tensor x = positions(norm(conv_features(wave, need)));
  x = attention(x, nn::attention_bias(total, mask, false));
  return {nn::mask_rows(x, mask), mask};
}

WordProjector WordProjector::create(ParamSet& params, const std::string& name, std::size_t feature_dim,
                                    std::size_t dim, std::size_t heads, std::size_t ffn_hidden,
                                    std::size_t max_words, std::mt19937_64& rng) {
  WordProjector p;
  p.projection = nn::Linear::create(params, name + ".projection", feature_dim, dim, rng);
  p.norm = nn::LayerNorm::create(params, name + ".norm", dim);
  p.positions = nn::PositionalEmbedding::create(params, name + ".positions", max_words, dim, rng);
  p.attention = nn::EncoderLayer::create(params, name + ".attention", dim, heads, ffn_hidden, rng);
  return p;
}

EmbeddingSequence WordProjector::forward(const Tensor& features, const std::vector<std::uint8_t>& mask) const {
  if (features.rank() != 2 || features.cols() != feature_dim()) {
    throw ShapeError("word projector: expected [n x " + std::to_string(feature_dim()) + "] features, got " +
                     shape_str(features.shape()));
  }
  if (mask.size() != features.rows()) throw ShapeError("word projector: mask length does not match feature rows");
  Tensor x = positions(norm(projection(features)));
  x = attention(x, nn::attention_bias(x.rows(), mask, false));
  return {nn::mask_rows(x, mask), mask};
}

Tensor feature_tensor(const FeatureSequence& seq) {
  const std::size_t n = seq.features.size(), d = seq.dim();
  std::vector<double> v;
  v.reserve(n * d);
  for (const auto& f : seq.features) {
    if (f.values.size() != d) throw ShapeError("feature_tensor: ragged feature rows");
    v.insert(v.end(), f.values.begin(), f.values.end());
  }
  return Tensor::from({n, d}, std::move(v));
}

EmbeddingSequence project_word_features(const WordProjector& proj, const FeatureSequence& seq) {
  return proj.forward(feature_tensor(seq), seq.mask);
}

PreparedWave prepare_wave(const EEGRecording& rec, std::size_t target) {
  const EEGRecording padded = pad_or_clip(normalize_wave(rec), target);
  std::vector<double> v(padded.data.begin(), padded.data.end());
  return {Tensor::from({padded.channels, padded.samples}, std::move(v)), std::min(rec.samples, target)};
}

}  // namespace dewave

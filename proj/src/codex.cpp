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

#include "dewave/codex.hpp"

#include <cmath>
#include <limits>

#include "dewave/errors.hpp"
#include "dewave/featurizer.hpp"
#include "dewave/ops.hpp"

namespace dewave {

namespace {

void require_same(const char* op, const EmbeddingSequence& a, const EmbeddingSequence& b) {
  if (a.values.shape() != b.values.shape() || a.mask != b.mask) {
    throw ShapeError(std::string(op) + ": sequences " + shape_str(a.values.shape()) + " and " +
                     shape_str(b.values.shape()) + " do not align");
  }
}

// Mean over valid rows of the row-wise squared norm of `diff`.
Tensor masked_mean_sq(const Tensor& diff, const std::vector<std::uint8_t>& mask, std::size_t valid) {
  const Tensor sq = nn::mask_rows(ops::mul(diff, diff), mask);
  return ops::scale(ops::sum(sq), 1.0 / static_cast<double>(valid));
}

}  // namespace

Codebook Codebook::create(ParamSet& params, const std::string& name, std::size_t k, std::size_t m,
                          std::mt19937_64& rng) {
  if (k < 2 || m < 1) throw ConfigError("codebook: need k >= 2 and m >= 1");
  const double bound = 1.0 / std::sqrt(static_cast<double>(m));
  Codebook cb;
  cb.entries = params.add(name, Tensor::parameter({k, m}, uniform_values(k * m, bound, rng)));
  return cb;
}

int nearest_entry(std::span<const double> row, const Tensor& entries) {
  const std::size_t k = entries.dim(0), m = entries.dim(1);
  const auto e = entries.values();
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    double d = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double diff = row[c] - e[j * m + c];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

Quantized quantize(const EmbeddingSequence& z_c, const Codebook& cb) {
  if (z_c.dim() != cb.m()) {
    throw ShapeError("quantize: sequence dim " + std::to_string(z_c.dim()) + " but codebook dim " +
                     std::to_string(cb.m()));
  }
  const std::size_t t = z_c.length(), m = cb.m();
  Quantized q;
  q.indices.assign(t, -1);
  std::vector<int> lookup(t, 0);
  const auto v = z_c.values.values();
  for (std::size_t i = 0; i < t; ++i) {
    if (!z_c.mask[i]) continue;
    q.indices[i] = nearest_entry(v.subspan(i * m, m), cb.entries);
    lookup[i] = q.indices[i];
  }
  q.z_q = {nn::mask_rows(ops::embedding_lookup(cb.entries, lookup), z_c.mask), z_c.mask};
  return q;
}

VqTerms vq_terms(const EmbeddingSequence& z_c, const EmbeddingSequence& z_q, double beta) {
  require_same("vq_terms", z_c, z_q);
  if (!(beta > 0)) throw ConfigError("vq_terms: beta must be positive");
  const std::size_t valid = z_c.valid();
  if (valid == 0) throw InputError("vq_terms: no valid positions");
  VqTerms out;
  out.codebook = masked_mean_sq(ops::sub(ops::stop_gradient(z_c.values), z_q.values), z_c.mask, valid);
  out.commitment =
      ops::scale(masked_mean_sq(ops::sub(z_c.values, ops::stop_gradient(z_q.values)), z_c.mask, valid), beta);
  return out;
}

EmbeddingSequence straight_through(const EmbeddingSequence& z_c, const EmbeddingSequence& z_q) {
  require_same("straight_through", z_c, z_q);
  return {ops::add(z_c.values, ops::stop_gradient(ops::sub(z_q.values, z_c.values))), z_c.mask};
}

CodebookStats codebook_stats(std::span<const int> indices, std::size_t k) {
  CodebookStats s;
  s.histogram.assign(k, 0);
  std::size_t total = 0;
  for (int i : indices) {
    if (i == -1) continue;
    if (i < -1 || static_cast<std::size_t>(i) >= k) {
      throw RangeError("codebook_stats: index " + std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
    }
    ++s.histogram[static_cast<std::size_t>(i)];
    ++total;
  }
  std::size_t used = 0;
  double entropy = 0.0;
  for (auto c : s.histogram) {
    if (c == 0) continue;
    ++used;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    entropy -= p * std::log(p);
  }
  s.utilization = static_cast<double>(used) / static_cast<double>(k);
  s.perplexity = total == 0 ? 0.0 : std::exp(entropy);
  return s;
}

void write_codebook_dump(const Codebook& cb, const std::filesystem::path& path) {
  FeatureMatrix m;
  m.rows = cb.k();
  m.cols = cb.m();
  m.data.assign(cb.entries.values().begin(), cb.entries.values().end());
  write_feature_matrix(m, path);
}

}  // namespace dewave

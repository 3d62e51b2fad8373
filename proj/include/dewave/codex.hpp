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

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dewave/params.hpp"
#include "dewave/wave_encoder.hpp"

namespace dewave {

struct Codebook {
  Tensor entries;  // [k, m]

  // Entries drawn from U(-1/sqrt(m), 1/sqrt(m)).
  static Codebook create(ParamSet& params, const std::string& name, std::size_t k, std::size_t m,
                         std::mt19937_64& rng);
  std::size_t k() const { return entries.dim(0); }
  std::size_t m() const { return entries.dim(1); }
};

// Index of the entry nearest to `row` in squared Euclidean distance; ties go
// to the lowest index.
int nearest_entry(std::span<const double> row, const Tensor& entries);

struct Quantized {
  std::vector<int> indices;  // -1 at masked positions
  EmbeddingSequence z_q;
};

Quantized quantize(const EmbeddingSequence& z_c, const Codebook& cb);

struct VqTerms {
  Tensor codebook;    // mean over valid rows of |sg(z_c) - z_q|^2
  Tensor commitment;  // beta * mean over valid rows of |z_c - sg(z_q)|^2
};

VqTerms vq_terms(const EmbeddingSequence& z_c, const EmbeddingSequence& z_q, double beta);

// Forward value z_q, gradient passed to z_c unchanged.
EmbeddingSequence straight_through(const EmbeddingSequence& z_c, const EmbeddingSequence& z_q);

struct CodebookStats {
  std::vector<std::size_t> histogram;
  double utilization = 0.0;
  double perplexity = 0.0;
};

// Masked positions (-1) are skipped. Throws RangeError for an index outside
// [-1, k).
CodebookStats codebook_stats(std::span<const int> indices, std::size_t k);

// u32 k, u32 m, then k*m float32 little-endian values.
void write_codebook_dump(const Codebook& cb, const std::filesystem::path& path);

}  // namespace dewave

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

#include <cstddef>
#include <span>
#include <vector>

#include "dewave/tensor.hpp"

// Differentiable primitives. Matrices are row-major; sequences are laid out
// as (positions x features) and signals as (channels x time).
namespace dewave::ops {

Tensor matmul(const Tensor& a, const Tensor& b);     // [n,k] x [k,m]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [n,k] x [m,k]^T
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);
// x[n,m] + bias[m] broadcast over rows.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
// x[c,l] + bias[c] broadcast over columns.
Tensor add_col_bias(const Tensor& x, const Tensor& bias);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);

// Row-wise softmax over the last dimension.
Tensor softmax(const Tensor& x);
// Row-wise layer normalization with affine gamma/beta of length cols.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// Standardises each row of a 2-D x with the mean and variance of its first
// `prefix` entries; entries past the prefix are shifted and scaled the same
// way. No affine parameters.
Tensor standardize_rows(const Tensor& x, std::size_t prefix, double eps = 1e-5);

// Valid 1-D convolution: x[c_in, l], w[c_out, c_in, k], b[c_out]
// -> [c_out, floor((l - k) / stride) + 1].
Tensor conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
              std::size_t stride);
// Transposed convolution: x[c_in, l], w[c_in, c_out, k], b[c_out]
// -> [c_out, (l - 1) * stride + k].
Tensor transpose_conv1d(const Tensor& x, const Tensor& w, const Tensor& b,
                        std::size_t stride);

// Rows of table[v, d] selected by ids -> [ids.size(), d].
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);

// Scalar losses.
Tensor mean_squared_error(const Tensor& a, const Tensor& b);
// Mean cross-entropy of logits[n, v] against class targets; positions whose
// target equals ignore_index do not contribute. All positions ignored -> 0.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets,
                     int ignore_index = -1);

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Forward identity, zero gradient.
Tensor stop_gradient(const Tensor& x);

}  // namespace dewave::ops

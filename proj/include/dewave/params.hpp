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
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dewave/tensor.hpp"

namespace dewave {

// Named trainable tensors in insertion order. Handles are shared, so a subset
// view updates the same storage as the set it was taken from.
class ParamSet {
 public:
  // Throws StateError on a duplicate name.
  Tensor& add(std::string name, Tensor t);
  bool contains(std::string_view name) const;
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t numel() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  ParamSet subset(const std::function<bool(const std::string&)>& keep) const;
  ParamSet with_prefix(std::string_view prefix) const;

  void set_requires_grad(bool on);
  void clear_grads();
  // Deep copy of values, detached from the originals.
  ParamSet clone() const;
  // Copies values from `other` for every name present in both; shapes must
  // agree. Returns the number of tensors copied.
  std::size_t assign_from(const ParamSet& other);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// Plain SGD: p <- p - lr * grad(p), then the gradient is cleared. Throws
// StateError naming the first parameter without a gradient.
void sgd_step(ParamSet& params, double lr);

struct GradCheckOptions {
  double eps = 1e-5;
  // Coordinates checked when the set is larger; smaller sets are checked
  // exhaustively.
  std::size_t min_coordinates = 50;
  // Denominator floor for the relative error so vanishing gradients are
  // compared absolutely.
  double denominator_floor = 1e-5;
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_parameter;
};

// Compares analytic gradients of the scalar produced by `f` with central
// differences over a random subsample of coordinates. `f` is re-evaluated for
// each perturbation and must be deterministic. Throws NumericError when f is
// not finite.
GradCheckResult grad_check(const std::function<Tensor()>& f, ParamSet& params,
                           const GradCheckOptions& options = {});

// Deterministic fan-in initialisation helpers.
std::vector<double> uniform_values(std::size_t n, double bound, std::mt19937_64& rng);

// Checkpoint: "DWCKPT1\0", u32 count, then per tensor u32 name length, name
// bytes, u32 rank, u32 dims..., float32 LE values.
void save_params(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_params(const std::filesystem::path& path);

}  // namespace dewave

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

#include "dewave/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "dewave/binary_io.hpp"
#include "dewave/errors.hpp"

namespace dewave {

namespace {
constexpr char kCheckpointMagic[8] = {'D', 'W', 'C', 'K', 'P', 'T', '1', '\0'};
}  // namespace

Tensor& ParamSet::add(std::string name, Tensor t) {
  if (contains(name)) throw StateError("ParamSet: duplicate parameter '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(t));
  return entries_.back().second;
}

bool ParamSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

Tensor& ParamSet::get(std::string_view name) {
  for (auto& e : entries_)
    if (e.first == name) return e.second;
  throw StateError("ParamSet: no parameter named '" + std::string(name) + "'");
}

const Tensor& ParamSet::get(std::string_view name) const {
  for (const auto& e : entries_)
    if (e.first == name) return e.second;
  throw StateError("ParamSet: no parameter named '" + std::string(name) + "'");
}

std::size_t ParamSet::numel() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

ParamSet ParamSet::subset(const std::function<bool(const std::string&)>& keep) const {
  ParamSet out;
  for (const auto& e : entries_)
    if (keep(e.first)) out.entries_.push_back(e);
  return out;
}

ParamSet ParamSet::with_prefix(std::string_view prefix) const {
  return subset([&](const std::string& n) { return n.starts_with(prefix); });
}

void ParamSet::set_requires_grad(bool on) {
  for (auto& e : entries_) e.second.set_requires_grad(on);
}

void ParamSet::clear_grads() {
  for (auto& e : entries_) e.second.clear_grad();
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& [name, t] : entries_) {
    Tensor c = t.detached_copy();
    c.set_requires_grad(t.requires_grad());
    out.entries_.emplace_back(name, std::move(c));
  }
  return out;
}

std::size_t ParamSet::assign_from(const ParamSet& other) {
  std::size_t copied = 0;
  for (auto& [name, t] : entries_) {
    if (!other.contains(name)) continue;
    const Tensor& src = other.get(name);
    if (src.shape() != t.shape()) {
      throw StateError("ParamSet: shape mismatch for '" + name + "': " + shape_str(t.shape()) +
                       " vs " + shape_str(src.shape()));
    }
    std::copy(src.values().begin(), src.values().end(), t.mutable_values().begin());
    ++copied;
  }
  return copied;
}

void sgd_step(ParamSet& params, double lr) {
  for (auto& [name, t] : params) {
    if (!t.has_grad()) throw StateError("sgd_step: parameter '" + name + "' has no gradient");
  }
  for (auto& [name, t] : params) {
    auto v = t.mutable_values();
    auto g = t.grad();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
    t.clear_grad();
  }
}

std::vector<double> uniform_values(std::size_t n, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

GradCheckResult grad_check(const std::function<Tensor()>& f, ParamSet& params,
                           const GradCheckOptions& options) {
  auto eval = [&]() {
    NoGradGuard guard;
    const double v = f().item();
    if (!std::isfinite(v)) throw NumericError("grad_check: objective is not finite");
    return v;
  };

  params.clear_grads();
  Tensor loss = f();
  if (!std::isfinite(loss.item())) throw NumericError("grad_check: objective is not finite");
  loss.backward();

  // (parameter index, coordinate) pairs
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::vector<std::pair<std::string, Tensor>> list(params.begin(), params.end());
  for (std::size_t p = 0; p < list.size(); ++p)
    for (std::size_t i = 0; i < list[p].second.numel(); ++i) coords.emplace_back(p, i);
  if (coords.size() > options.min_coordinates) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.min_coordinates);
  }

  GradCheckResult result;
  result.coordinates = coords.size();
  for (auto [p, i] : coords) {
    Tensor& t = list[p].second;
    const double analytic = t.has_grad() ? t.grad()[i] : 0.0;
    double& x = t.mutable_values()[i];
    const double saved = x;
    x = saved + options.eps;
    const double up = eval();
    x = saved - options.eps;
    const double down = eval();
    x = saved;
    const double numeric = (up - down) / (2.0 * options.eps);
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), options.denominator_floor});
    const double err = std::abs(analytic - numeric) / denom;
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_parameter = list[p].first + "[" + std::to_string(i) + "]";
    }
  }
  params.clear_grads();
  return result;
}

void save_params(const ParamSet& params, const std::filesystem::path& path) {
  BinaryWriter w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.values()) w.f32(static_cast<float>(v));
  }
  w.write_file(path);
}

ParamSet load_params(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError(path.string() + ": not a checkpoint (bad magic)");
  }
  const std::uint32_t count = r.u32();
  ParamSet out;
  for (std::uint32_t n = 0; n < count; ++n) {
    const std::uint32_t len = r.u32();
    std::string name(len, '\0');
    r.bytes(name.data(), len);
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw DataError(path.string() + ": tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = r.f32();
    out.add(std::move(name), Tensor::parameter(std::move(shape), std::move(values)));
  }
  if (!r.at_end()) throw DataError(path.string() + ": trailing bytes after last tensor");
  return out;
}

}  // namespace dewave

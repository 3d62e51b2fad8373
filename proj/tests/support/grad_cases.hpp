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

// Shared gradient-check fixtures for the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dewave/codex.hpp"
#include "dewave/model.hpp"
#include "dewave/nn.hpp"
#include "dewave/ops.hpp"
#include "dewave/params.hpp"
#include "dewave/trainer.hpp"

namespace dewave::testing {

inline Tensor random_param(Shape shape, std::mt19937_64& rng, double bound = 1.0) {
  auto n = shape_numel(shape);
  return Tensor::parameter(std::move(shape), uniform_values(n, bound, rng));
}

inline Tensor random_const(Shape shape, std::mt19937_64& rng) {
  auto n = shape_numel(shape);
  return Tensor::from(std::move(shape), uniform_values(n, 1.0, rng));
}

// Contracts an arbitrary-shaped result to a scalar with fixed random weights
// so every output coordinate carries a distinct gradient.
inline Tensor probe(const Tensor& y, const Tensor& weights) {
  return ops::sum(ops::mul(ops::reshape(y, weights.shape()), weights));
}

inline std::size_t rand_dim(std::mt19937_64& rng, std::size_t lo = 1, std::size_t hi = 8) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct GradCase {
  const char* name;
  ParamSet params;
  std::function<Tensor()> build;  // returns the op output (not yet reduced)
};

// One case per differentiable primitive, with shapes drawn from `rng`.
inline std::vector<GradCase> primitive_grad_cases(std::mt19937_64& rng) {
  const std::size_t n = rand_dim(rng), k = rand_dim(rng), m = rand_dim(rng);
  std::vector<GradCase> cases;

  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, k}, rng));
    Tensor b = p.add("b", random_param({k, m}, rng));
    cases.push_back(GradCase{"matmul", p, [a, b] { return ops::matmul(a, b); }});
  }
  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, k}, rng));
    Tensor b = p.add("b", random_param({m, k}, rng));
    cases.push_back(GradCase{"matmul_nt", p, [a, b] { return ops::matmul_nt(a, b); }});
  }
  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, m}, rng));
    cases.push_back(GradCase{"transpose", p, [a] { return ops::transpose(a); }});
  }
  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, m}, rng));
    Tensor b = p.add("b", random_param({n, m}, rng));
    cases.push_back(GradCase{"add", p, [a, b] { return ops::add(a, b); }});
    cases.push_back(GradCase{"sub", p, [a, b] { return ops::sub(a, b); }});
    cases.push_back(GradCase{"mul", p, [a, b] { return ops::mul(a, b); }});
    cases.push_back(GradCase{"scale", p, [a] { return ops::scale(a, -1.7); }});
    cases.push_back(GradCase{"mse", p, [a, b] { return ops::mean_squared_error(a, b); }});
  }
  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, m}, rng));
    Tensor rb = p.add("rb", random_param({m}, rng));
    Tensor cb = p.add("cb", random_param({n}, rng));
    cases.push_back(GradCase{"add_row_bias", p.subset([](auto& s) { return s != "cb"; }),
                     [a, rb] { return ops::add_row_bias(a, rb); }});
    cases.push_back(GradCase{"add_col_bias", p.subset([](auto& s) { return s != "rb"; }),
                     [a, cb] { return ops::add_col_bias(a, cb); }});
  }
  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, m}, rng, 2.0));
    cases.push_back(GradCase{"relu", p, [a] { return ops::relu(a); }});
    cases.push_back(GradCase{"gelu", p, [a] { return ops::gelu(a); }});
    cases.push_back(GradCase{"softmax", p, [a] { return ops::softmax(a); }});
    cases.push_back(GradCase{"sum", p, [a] { return ops::sum(a); }});
    cases.push_back(GradCase{"mean", p, [a] { return ops::mean(a); }});
    cases.push_back(GradCase{"slice_rows", p, [a, n] { return ops::slice_rows(a, n / 2, n); }});
    cases.push_back(GradCase{"slice_cols", p, [a, m] { return ops::slice_cols(a, 0, (m + 1) / 2); }});
    cases.push_back(GradCase{"reshape", p, [a, n, m] { return ops::reshape(a, {m * n}); }});
  }
  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, m + 1}, rng));
    Tensor g = p.add("g", random_param({m + 1}, rng));
    Tensor b = p.add("b", random_param({m + 1}, rng));
    cases.push_back(GradCase{"layer_norm", p, [a, g, b] { return ops::layer_norm(a, g, b); }});
  }
  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, m + 3}, rng));
    const std::size_t prefix = 2 + m / 2;
    cases.push_back(GradCase{"standardize_rows", p, [a, prefix] { return ops::standardize_rows(a, prefix); }});
  }
  {
    ParamSet p;
    Tensor a = p.add("a", random_param({n, m}, rng));
    Tensor b = p.add("b", random_param({k, m}, rng));
    cases.push_back(GradCase{"concat_rows", p, [a, b] { return ops::concat_rows({a, b, a}); }});
    Tensor c = p.add("c", random_param({n, k}, rng));
    cases.push_back(GradCase{"concat_cols", p.subset([](auto& s) { return s != "b"; }),
                     [a, c] { return ops::concat_cols({a, c}); }});
  }
  {
    ParamSet p;
    Tensor table = p.add("table", random_param({k + 1, m}, rng));
    std::vector<int> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(static_cast<int>(rng() % (k + 1)));
    ids.push_back(ids.front());
    cases.push_back(GradCase{"embedding_lookup", p, [table, ids] { return ops::embedding_lookup(table, ids); }});
  }
  {
    ParamSet p;
    Tensor logits = p.add("logits", random_param({n, m + 1}, rng, 3.0));
    std::vector<int> targets;
    for (std::size_t i = 0; i < n; ++i) targets.push_back(static_cast<int>(rng() % (m + 1)));
    targets[0] = -1;
    cases.push_back(GradCase{"cross_entropy", p, [logits, targets] { return ops::cross_entropy(logits, targets, -1); }});
  }
  {
    const std::size_t cin = rand_dim(rng), cout = rand_dim(rng), kk = rand_dim(rng, 1, 5),
                      stride = rand_dim(rng, 1, kk);
    const std::size_t len = kk + rand_dim(rng, 0, 8);
    ParamSet p;
    Tensor x = p.add("x", random_param({cin, len}, rng));
    Tensor w = p.add("w", random_param({cout, cin, kk}, rng));
    Tensor b = p.add("b", random_param({cout}, rng));
    cases.push_back(GradCase{"conv1d", p, [x, w, b, stride] { return ops::conv1d(x, w, b, stride); }});
  }
  {
    const std::size_t cin = rand_dim(rng), cout = rand_dim(rng), kk = rand_dim(rng, 1, 5),
                      stride = rand_dim(rng, 1, 4), len = rand_dim(rng);
    ParamSet p;
    Tensor x = p.add("x", random_param({cin, len}, rng));
    Tensor w = p.add("w", random_param({cin, cout, kk}, rng));
    Tensor b = p.add("b", random_param({cout}, rng));
    cases.push_back(GradCase{"transpose_conv1d", p, [x, w, b, stride] { return ops::transpose_conv1d(x, w, b, stride); }});
  }

  return cases;
}

// Max relative error of one primitive case, probed with random weights.
inline double primitive_grad_error(GradCase& c, std::mt19937_64& rng, std::uint64_t seed, std::string* worst = nullptr) {
  const Tensor sample_out = c.build();
  const Tensor weights = random_const(sample_out.shape(), rng);
  const auto f = [&] { return probe(c.build(), weights); };
  GradCheckOptions opt;
  opt.seed = seed;
  const GradCheckResult r = grad_check(f, c.params, opt);
  if (worst) *worst = r.worst_parameter;
  return r.max_relative_error;
}

// Gradient check of a raw-wave straight-through loss. Around the current
// point the real loss has the same gradient as a surrogate in which every
// stop-gradient operand is a constant equal to its current value: the code
// assignments, the offset z_q - z_c, z_c inside the codebook term and z_q
// inside the commitment term. `real_vs_surrogate` is the largest gap between
// the two analytic gradients; `surrogate_fd` is the surrogate's finite
// difference error.
struct PipelineGradResult {
  double real_vs_surrogate = 0.0;
  double surrogate_fd = 0.0;
  std::string worst;
};

enum class PipelineLoss { kCodex, kReconstruction, kContrast, kStageZero };

inline PipelineGradResult pipeline_grad_check(DeWaveModel& model, const PreparedInput& in, PipelineLoss which,
                                              const TrainConfig& tc, std::size_t coordinates) {
  const double beta = which == PipelineLoss::kCodex ? tc.beta_stage12 : tc.beta_stage0;
  std::vector<int> lookup;
  Tensor zc0, zq0;
  {
    NoGradGuard no_grad;
    const CodexPass p = model.codex_pass(in);
    for (int i : p.q.indices) lookup.push_back(std::max(i, 0));
    zc0 = p.z_c.values.detached_copy();
    zq0 = p.q.z_q.values.detached_copy();
  }
  const auto real = [&]() -> Tensor {
    switch (which) {
      case PipelineLoss::kCodex:
        return loss_stage12(model, in, beta).total;
      case PipelineLoss::kReconstruction:
        return loss_wave(model, in, beta).total;
      case PipelineLoss::kContrast:
        return loss_contrast(model.codex_pass(in).st, model.text().embed(in.target.ids), tc.tau);
      case PipelineLoss::kStageZero:
        break;
    }
    return loss_stage0(model, in, beta, tc.tau, tc.alpha).total;
  };
  const auto surrogate = [&]() -> Tensor {
    const EmbeddingSequence zc = model.codex().encode(model.wave_encoder().forward(in.input, in.valid_samples, true));
    const EmbeddingSequence zq{nn::mask_rows(ops::embedding_lookup(model.codebook().entries, lookup), zc.mask),
                               zc.mask};
    const EmbeddingSequence st{ops::add(zc.values, ops::sub(zq0, zc0)), zc.mask};
    const Tensor vq = ops::add(vq_terms(EmbeddingSequence{zc0, zc.mask}, zq, beta).codebook,
                               vq_terms(zc, EmbeddingSequence{zq0, zc.mask}, beta).commitment);
    const auto contrast = [&] { return loss_contrast(st, model.text().embed(in.target.ids), tc.tau); };
    switch (which) {
      case PipelineLoss::kCodex:
        return ops::add(model.decoder().teacher_forced(st, in.target.ids).nll, vq);
      case PipelineLoss::kReconstruction:
        return ops::add(reconstruction_mse(model.recon().reconstruct(st), in.input), vq);
      case PipelineLoss::kContrast:
        return contrast();
      case PipelineLoss::kStageZero:
        break;
    }
    return ops::add(ops::add(reconstruction_mse(model.recon().reconstruct(st), in.input), vq),
                    ops::scale(contrast(), tc.alpha));
  };

  ParamSet& params = model.params();
  const auto gradients = [&](const std::function<Tensor()>& f) {
    params.clear_grads();
    f().backward();
    std::vector<double> g;
    for (const auto& [name, t] : params) {
      if (t.has_grad()) g.insert(g.end(), t.grad().begin(), t.grad().end());
      else g.insert(g.end(), t.numel(), 0.0);
    }
    params.clear_grads();
    return g;
  };
  PipelineGradResult r;
  const std::vector<double> a = gradients(real), b = gradients(surrogate);
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.real_vs_surrogate = std::max(r.real_vs_surrogate, std::abs(a[i] - b[i]) / std::max({std::abs(a[i]), std::abs(b[i]), 1e-5}));
  }
  GradCheckOptions opt;
  opt.min_coordinates = coordinates;
  const GradCheckResult fd = grad_check(surrogate, params, opt);
  r.surrogate_fd = fd.max_relative_error;
  r.worst = fd.worst_parameter;
  return r;
}

}  // namespace dewave::testing

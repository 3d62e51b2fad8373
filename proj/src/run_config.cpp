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

#include "dewave/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

#include "dewave/errors.hpp"

namespace dewave {

namespace {

using json = nlohmann::json;
using Setter = std::function<void(const json&)>;

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

Setter set_size(std::size_t& field) {
  return [&field](const json& v) {
    if (!v.is_number_unsigned()) throw ConfigError("expected a non-negative integer");
    field = v.get<std::size_t>();
  };
}

Setter set_number(double& field) {
  return [&field](const json& v) {
    if (!v.is_number()) throw ConfigError("expected a number");
    field = v.get<double>();
  };
}

Setter set_path(std::filesystem::path& field) {
  return [&field](const json& v) { field = v.get<std::string>(); };
}

void apply(const json& obj, const std::map<std::string, Setter>& keys, const std::string& prefix,
           const std::string& source) {
  if (!obj.is_object()) throw ConfigError(source + ": '" + prefix + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(source + ": unknown key '" + full + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(source + ": bad value for '" + full + "': " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": bad value for '" + full + "': " + e.what());
    }
  }
}

std::map<std::string, Setter> synth_keys(SynthConfig& s) {
  return {{"vocab_size", set_size(s.vocab_size)},
          {"sentences", set_size(s.sentences)},
          {"min_words", set_size(s.min_words)},
          {"max_words", set_size(s.max_words)},
          {"channels", set_size(s.channels)},
          {"fs", set_number(s.fs)},
          {"noise", set_number(s.noise)},
          {"min_word_samples", set_size(s.min_word_samples)},
          {"max_word_samples", set_size(s.max_word_samples)},
          {"subjects", set_size(s.subjects)}};
}

std::map<std::string, Setter> model_keys(ModelConfig& m) {
  return {{"mode", [&m](const json& v) { m.mode = parse_mode(v.get<std::string>()); }},
          {"channels", set_size(m.channels)},
          {"fs", set_number(m.fs)},
          {"dim", set_size(m.dim)},
          {"heads", set_size(m.heads)},
          {"ffn_hidden", set_size(m.ffn_hidden)},
          {"codex_layers", set_size(m.codex_layers)},
          {"codebook_size", set_size(m.codebook_size)},
          {"decoder_layers", set_size(m.decoder_layers)},
          {"decoder_heads", set_size(m.decoder_heads)},
          {"recon_layers", set_size(m.recon_layers)},
          {"max_words", set_size(m.max_words)},
          {"pad_samples", set_size(m.pad_samples)},
          {"conv_kernels", set(m.conv_kernels)},
          {"conv_strides", set(m.conv_strides)},
          {"word_pretrain", set(m.word_pretrain)}};
}

std::map<std::string, Setter> train_keys(TrainConfig& t) {
  return {{"lr_stage0", set_number(t.lr_stage0)},
          {"lr_stage1", set_number(t.lr_stage1)},
          {"lr_stage2", set_number(t.lr_stage2)},
          {"epochs_stage0", set_size(t.epochs_stage0)},
          {"epochs_stage1", set_size(t.epochs_stage1)},
          {"epochs_stage2", set_size(t.epochs_stage2)},
          {"lr_decay_epoch", set_size(t.lr_decay_epoch)},
          {"lr_decay", set_number(t.lr_decay)},
          {"beta_stage0", set_number(t.beta_stage0)},
          {"beta_stage12", set_number(t.beta_stage12)},
          {"tau", set_number(t.tau)},
          {"alpha", set_number(t.alpha)},
          {"epochs_lm", set_size(t.epochs_lm)},
          {"lr_lm", set_number(t.lr_lm)},
          {"lm_noise", set_number(t.lm_noise)},
          {"lm_sentences", set_size(t.lm_sentences)},
          {"lm_min_words", set_size(t.lm_min_words)},
          {"lm_max_words", set_size(t.lm_max_words)},
          {"batch_size", set_size(t.batch_size)}};
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": not valid JSON: " + e.what());
  }
  RunConfig rc;
  const std::map<std::string, Setter> top = {
      {"seed", [&rc](const json& v) {
         if (!v.is_number_unsigned()) throw ConfigError("expected a non-negative integer");
         rc.seed = v.get<std::uint64_t>();
       }},
      {"dataset", set_path(rc.dataset)},
      {"checkpoint", set_path(rc.checkpoint)},
      {"report", set_path(rc.report)},
      {"train_subjects", set(rc.train_subjects)},
      {"test_subjects", set(rc.test_subjects)},
      {"synth_all_train", set(rc.synth_all_train)},
      {"synth", [&](const json& v) { apply(v, synth_keys(rc.synth), "synth", source); }},
      {"model", [&](const json& v) { apply(v, model_keys(rc.model), "model", source); }},
      {"train", [&](const json& v) { apply(v, train_keys(rc.train), "train", source); }}};
  if (!doc.is_object()) throw ConfigError(source + ": top level must be an object");
  for (const auto& [key, value] : doc.items()) {
    const auto it = top.find(key);
    if (it == top.end()) throw ConfigError(source + ": unknown key '" + key + "'");
    // Sections report their own full key names.
    if (key == "synth" || key == "model" || key == "train") {
      it->second(value);
      continue;
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError(source + ": bad value for '" + key + "': " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(source + ": bad value for '" + key + "': " + e.what());
    }
  }
  rc.train.seed = rc.seed;
  try {
    rc.model.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  try {
    rc.train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.string());
}

}  // namespace dewave

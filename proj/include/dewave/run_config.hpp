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
#include <string>
#include <string_view>
#include <vector>

#include "dewave/corpus.hpp"
#include "dewave/model.hpp"
#include "dewave/trainer.hpp"

namespace dewave {

// Everything one CLI run needs, read from a single JSON document. Sections
// "synth", "model" and "train" mirror SynthConfig, ModelConfig and
// TrainConfig field by field; omitted keys keep their defaults.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path dataset;
  std::filesystem::path checkpoint;
  std::filesystem::path report;
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  SynthConfig synth;
  // Puts every synthesized sentence in the train split.
  bool synth_all_train = false;
  ModelConfig model;
  TrainConfig train;
};

// Throws ConfigError naming the offending key for unknown keys, wrong value
// types and invalid values. `source` prefixes the messages.
RunConfig parse_run_config(std::string_view text, const std::string& source = "config");
// Throws ConfigError when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace dewave

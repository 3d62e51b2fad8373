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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dewave/codex.hpp"
#include "dewave/corpus.hpp"
#include "dewave/errors.hpp"
#include "dewave/featurizer.hpp"
#include "dewave/metrics.hpp"
#include "dewave/model.hpp"
#include "dewave/run_config.hpp"
#include "dewave/trainer.hpp"

namespace fs = std::filesystem;

namespace dewave {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitState = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return kExitConfig;
    case ErrorKind::kState:
      return kExitState;
    default:
      return kExitData;
  }
}

void require_dataset(const fs::path& dir, const std::string& key) {
  if (dir.empty()) throw ConfigError(key + " is not set");
  if (!fs::is_regular_file(dir / "manifest.json")) {
    throw DataError(dir.string() + ": no manifest.json (from " + key + ")");
  }
}

void require_output(const fs::path& path, const std::string& key) {
  if (path.empty()) throw ConfigError(key + " is not set");
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw ConfigError(key + ": directory " + parent.string() + " does not exist");
}

DeWaveModel load_checkpoint(const std::optional<std::string>& from, const char* command) {
  if (!from) throw StateError(std::string(command) + " needs a checkpoint (--from)");
  if (!fs::is_regular_file(*from)) throw StateError(*from + ": checkpoint not found");
  return DeWaveModel::load(*from);
}

std::vector<Sample> split_samples(const fs::path& dir, Split split, const std::vector<std::string>& subjects) {
  std::vector<Sample> out = filter_split(load_dataset(dir), split, subjects);
  if (out.empty()) throw DataError(dir.string() + ": no samples in split " + std::string(split_name(split)));
  return out;
}

void check_fits(const DeWaveModel& model, const std::vector<Sample>& samples) {
  for (const auto& s : samples) {
    if (s.recording.channels != model.config().channels) {
      throw DataError("sample " + s.id + " has " + std::to_string(s.recording.channels) + " channels but the model expects " +
                      std::to_string(model.config().channels));
    }
    if (model.config().mode == Mode::kWordLevel && s.fixations.empty()) {
      throw DataError("word-level model but sample " + s.id + " has no fixations");
    }
  }
}

void print_epoch(const EpochRecord& r) {
  const char* stage = r.stage == kLmStage ? "lm" : r.stage == 0 ? "stage0" : r.stage == 1 ? "stage1" : "stage2";
  std::printf("%-6s epoch %3zu  loss %.5f  nll %.4f  wave %.5f  contrast %.4f  acc %.3f  util %.3f\n", stage, r.epoch,
              r.total, r.nll, r.wave_mse, r.contrast, r.token_accuracy, r.utilization);
  std::fflush(stdout);
}

void write_report(const RunConfig& rc, const TrainReport& report) {
  if (!rc.report.empty()) report.append_to(rc.report);
}

// Training commands share their setup: config, dataset, model.
struct TrainSetup {
  RunConfig rc;
  std::vector<PreparedInput> data;
  std::optional<DeWaveModel> model;
};

TrainSetup setup_training(const std::string& config, const std::optional<std::string>& from, bool need_from,
                          const char* command) {
  TrainSetup s;
  s.rc = load_run_config(config);
  require_dataset(s.rc.dataset, "dataset");
  require_output(s.rc.checkpoint, "checkpoint");
  if (!s.rc.report.empty()) require_output(s.rc.report, "report");
  if (need_from || from) {
    s.model.emplace(load_checkpoint(from, command));
  }
  const auto samples = split_samples(s.rc.dataset, Split::kTrain, s.rc.train_subjects);
  if (!s.model) s.model.emplace(s.rc.model, Vocabulary::build(samples), s.rc.seed);
  check_fits(*s.model, samples);
  s.data = prepare_inputs(samples, s.model->config(), s.model->vocab());
  return s;
}

int cmd_synth(const std::string& config, const fs::path& out) {
  const RunConfig rc = load_run_config(config);
  require_output(out, "--out");
  std::vector<Sample> samples = synth_corpus(rc.synth, rc.seed);
  if (rc.synth_all_train)
    for (auto& s : samples) s.split = Split::kTrain;
  save_dataset(samples, out);
  std::printf("wrote %zu samples to %s\n", samples.size(), out.string().c_str());
  return kExitOk;
}

int cmd_featurize(const fs::path& data, const fs::path& out) {
  require_dataset(data, "--data");
  require_output(out, "--out");
  const std::vector<Sample> samples = load_dataset(data);
  FeatureMatrix m;
  for (const auto& s : samples) {
    if (s.fixations.empty()) throw DataError("sample " + s.id + " has no fixations to featurize");
    const FeatureSequence seq = featurize_sample(s, s.words.size());
    m.cols = seq.dim();
    for (std::size_t w = 0; w < seq.features.size(); ++w) {
      if (!seq.mask[w]) continue;
      for (double v : seq.features[w].values) m.data.push_back(static_cast<float>(v));
      ++m.rows;
    }
  }
  write_feature_matrix(m, out);
  std::printf("wrote %zu x %zu features to %s\n", m.rows, m.cols, out.string().c_str());
  return kExitOk;
}

int cmd_pretrain(const std::string& config, const std::optional<std::string>& from) {
  TrainSetup s = setup_training(config, from, false, "pretrain");
  const ModelConfig& mc = s.model->config();
  if (mc.mode == Mode::kWordLevel && !mc.word_pretrain) {
    throw ConfigError("model.mode: pretrain needs raw-wave mode or model.word_pretrain");
  }
  write_report(s.rc, pretrain_stage0(*s.model, s.data, s.rc.train, print_epoch));
  s.model->save(s.rc.checkpoint);
  std::printf("saved stage-0 checkpoint %s\n", s.rc.checkpoint.string().c_str());
  return kExitOk;
}

int cmd_train(const std::string& config, const std::optional<std::string>& from) {
  TrainSetup s = setup_training(config, from, false, "train");
  if (!s.model->decoder_pretrained() && s.rc.train.epochs_lm > 0) {
    write_report(s.rc, pretrain_decoder(*s.model, s.rc.train, print_epoch));
  }
  write_report(s.rc, train_stage1(*s.model, s.data, s.rc.train, print_epoch));
  s.model->save(s.rc.checkpoint);
  std::printf("saved stage-1 checkpoint %s\n", s.rc.checkpoint.string().c_str());
  return kExitOk;
}

int cmd_finetune(const std::string& config, const std::optional<std::string>& from) {
  TrainSetup s = setup_training(config, from, true, "finetune");
  write_report(s.rc, train_stage2(*s.model, s.data, s.rc.train, print_epoch));
  s.model->save(s.rc.checkpoint);
  std::printf("saved stage-2 checkpoint %s\n", s.rc.checkpoint.string().c_str());
  return kExitOk;
}

std::string join(const TokenList& words) {
  std::string line;
  for (const auto& w : words) {
    if (!line.empty()) line += ' ';
    line += w;
  }
  return line;
}

int cmd_translate(const std::optional<std::string>& from, const fs::path& data, const std::string& split,
                  const std::optional<std::string>& out, const std::vector<std::string>& subjects) {
  const Split sp = parse_split(split);
  require_dataset(data, "--data");
  if (out) require_output(*out, "--out");
  const DeWaveModel model = load_checkpoint(from, "translate");
  const auto samples = split_samples(data, sp, subjects);
  check_fits(model, samples);
  const Evaluation ev = evaluate_model(model, prepare_inputs(samples, model.config(), model.vocab()), false);
  std::string text;
  for (const auto& h : ev.hypotheses) text += join(h) + "\n";
  if (out) {
    std::ofstream f(*out, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(*out + ": cannot open for writing");
    f << text;
  } else {
    std::cout << text;
  }
  return kExitOk;
}

int cmd_evaluate(const std::optional<std::string>& from, const fs::path& data, const std::string& split,
                 bool teacher_forced, const std::optional<std::string>& json_out,
                 const std::vector<std::string>& subjects) {
  const Split sp = parse_split(split);
  require_dataset(data, "--data");
  if (json_out) require_output(*json_out, "--json");
  const DeWaveModel model = load_checkpoint(from, "evaluate");
  const auto samples = split_samples(data, sp, subjects);
  check_fits(model, samples);
  const Evaluation ev = evaluate_model(model, prepare_inputs(samples, model.config(), model.vocab()), teacher_forced);
  const std::string j = result_json(ev.result);
  if (json_out) {
    std::ofstream f(*json_out, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(*json_out + ": cannot open for writing");
    f << j;
  }
  std::cout << j << result_table(ev.result);
  return kExitOk;
}

int cmd_dump_codebook(const std::optional<std::string>& from, const fs::path& out) {
  require_output(out, "--out");
  const DeWaveModel model = load_checkpoint(from, "dump-codebook");
  write_codebook_dump(model.codebook(), out);
  std::printf("wrote %zu x %zu codebook to %s\n", model.codebook().k(), model.codebook().m(), out.string().c_str());
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"EEG-to-text translation with a discrete codex"};
  app.require_subcommand(1);

  std::string config, split = "test";
  std::string out, data;
  std::optional<std::string> from, out_opt, json_out;
  std::vector<std::string> subjects;
  bool teacher_forced = false;

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("--config", config, "Run config (JSON)")->required();
  synth->add_option("--out", out, "Dataset directory")->required();

  auto* featurize = app.add_subcommand("featurize", "Export word-level band features");
  featurize->add_option("--data", data, "Dataset directory")->required();
  featurize->add_option("--out", out, "Feature matrix file")->required();

  const auto training = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--config", config, "Run config (JSON)")->required();
    c->add_option("--from", from, "Checkpoint to continue from");
    return c;
  };
  auto* pretrain = training("pretrain", "Self-supervised stage 0");
  auto* train = training("train", "Codex stage 1 with the decoder frozen");
  auto* finetune = training("finetune", "Stage 2 fine-tuning of all parts");

  const auto reading = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--from", from, "Checkpoint");
    c->add_option("--data", data, "Dataset directory")->required();
    c->add_option("--split", split, "train, dev or test")->capture_default_str();
    c->add_option("--subjects", subjects, "Restrict to these subjects");
    return c;
  };
  auto* translate = reading("translate", "Greedy translation, one sentence per line");
  translate->add_option("--out", out_opt, "Predictions file (default: standard output)");
  auto* evaluate = reading("evaluate", "BLEU-1..4, ROUGE-1 and token accuracy");
  evaluate->add_flag("--teacher-forced", teacher_forced, "Score teacher-forced argmax tokens");
  evaluate->add_option("--json", json_out, "Also write the JSON result here");

  auto* dump = app.add_subcommand("dump-codebook", "Write the codebook as float32");
  dump->add_option("--from", from, "Checkpoint");
  dump->add_option("--out", out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth->parsed()) return cmd_synth(config, out);
    if (featurize->parsed()) return cmd_featurize(data, out);
    if (pretrain->parsed()) return cmd_pretrain(config, from);
    if (train->parsed()) return cmd_train(config, from);
    if (finetune->parsed()) return cmd_finetune(config, from);
    if (translate->parsed()) return cmd_translate(from, data, split, out_opt, subjects);
    if (evaluate->parsed()) return cmd_evaluate(from, data, split, teacher_forced, json_out, subjects);
    if (dump->parsed()) return cmd_dump_codebook(from, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}

}  // namespace
}  // namespace dewave

int main(int argc, char** argv) { return dewave::run(argc, argv); }

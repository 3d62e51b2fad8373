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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dewave/errors.hpp"
#include "dewave/run_config.hpp"

namespace dewave {
namespace {

namespace fs = std::filesystem;

TEST(RunConfigTest, DefaultsAndOverrides) {
  const RunConfig rc = parse_run_config(R"({"seed": 9, "model": {"dim": 16, "heads": 4}, "train": {"tau": 0.5}})");
  EXPECT_EQ(rc.seed, 9u);
  EXPECT_EQ(rc.train.seed, 9u);
  EXPECT_EQ(rc.model.dim, 16u);
  EXPECT_EQ(rc.model.codebook_size, 2048u);
  EXPECT_DOUBLE_EQ(rc.train.tau, 0.5);
  EXPECT_DOUBLE_EQ(rc.train.lr_stage2, 5e-6);
}

TEST(RunConfigTest, UnknownKeysAreNamed) {
  try {
    parse_run_config(R"({"train": {"learning_rate": 1}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("train.learning_rate"), std::string::npos) << e.what();
  }
  try {
    parse_run_config(R"({"epochs": 3})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'epochs'"), std::string::npos) << e.what();
  }
}

TEST(RunConfigTest, BadValuesAreNamed) {
  try {
    parse_run_config(R"({"model": {"dim": -4}})");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("model.dim"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_run_config(R"({"model": {"mode": "spectral"}})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"seed": "one"})"), ConfigError);
  EXPECT_THROW(parse_run_config(R"({"train": {"tau": 0}})"), ConfigError);
  EXPECT_THROW(parse_run_config("{not json"), ConfigError);
  EXPECT_THROW(parse_run_config("[1, 2]"), ConfigError);
  EXPECT_THROW(load_run_config("/nonexistent/config.json"), ConfigError);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("dewave_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(DEWAVE_CLI) + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path write_config(const std::string& name, const std::string& body) const {
    const fs::path p = dir / name;
    std::ofstream(p) << body;
    return p;
  }

  std::string tiny_config(const std::string& tag) const {
    const std::string base = (dir / tag).string();
    return R"({"seed": 3, "dataset": ")" + (dir / "data").string() + R"(", "checkpoint": ")" + base +
           R"(.ckpt", "report": ")" + base + R"(.jsonl", "synth_all_train": true,
      "synth": {"vocab_size": 10, "sentences": 4, "max_words": 4, "channels": 6},
      "model": {"mode": "raw-wave", "channels": 6, "dim": 8, "heads": 2, "decoder_heads": 2, "ffn_hidden": 16,
                "codex_layers": 1, "decoder_layers": 1, "recon_layers": 1, "codebook_size": 8, "pad_samples": 800},
      "train": {"epochs_lm": 2, "lm_sentences": 8, "epochs_stage0": 2, "epochs_stage1": 2, "epochs_stage2": 2}})";
  }

  fs::path dir;
};

TEST_F(CliTest, HappyPathIsDeterministic) {
  const fs::path cfg = write_config("a.json", tiny_config("a"));
  ASSERT_EQ(run("synth --config " + cfg.string() + " --out " + (dir / "data").string()), 0) << read(dir / "stderr.txt");
  const std::string manifest = read(dir / "data" / "manifest.json");

  for (const std::string tag : {"a", "b"}) {
    const fs::path c = write_config(tag + ".json", tiny_config(tag));
    const std::string ckpt = (dir / (tag + ".ckpt")).string();
    ASSERT_EQ(run("pretrain --config " + c.string()), 0) << read(dir / "stderr.txt");
    ASSERT_EQ(run("train --config " + c.string() + " --from " + ckpt), 0) << read(dir / "stderr.txt");
    ASSERT_EQ(run("finetune --config " + c.string() + " --from " + ckpt), 0) << read(dir / "stderr.txt");
    ASSERT_EQ(run("translate --from " + ckpt + " --data " + (dir / "data").string() + " --split train --out " +
                  (dir / (tag + ".txt")).string()),
              0)
        << read(dir / "stderr.txt");
    ASSERT_EQ(run("evaluate --from " + ckpt + " --data " + (dir / "data").string() +
                  " --split train --teacher-forced --json " + (dir / (tag + "_eval.json")).string()),
              0);
    ASSERT_EQ(run("dump-codebook --from " + ckpt + " --out " + (dir / (tag + ".cb")).string()), 0);
  }
  EXPECT_EQ(read(dir / "a.ckpt"), read(dir / "b.ckpt"));
  EXPECT_EQ(read(dir / "a.jsonl"), read(dir / "b.jsonl"));
  EXPECT_EQ(read(dir / "a.txt"), read(dir / "b.txt"));
  EXPECT_EQ(read(dir / "a_eval.json"), read(dir / "b_eval.json"));
  EXPECT_EQ(read(dir / "a.cb"), read(dir / "b.cb"));
  EXPECT_EQ(read(dir / "data" / "manifest.json"), manifest);
  EXPECT_EQ(fs::file_size(dir / "a.cb"), 8u + 8u * 8u * 4u);
  EXPECT_FALSE(read(dir / "a.txt").empty());
}

TEST_F(CliTest, ExitCodes) {
  const fs::path cfg = write_config("a.json", tiny_config("a"));
  EXPECT_EQ(run("finetune --config " + cfg.string()), 3);  // dataset missing is checked first
  ASSERT_EQ(run("synth --config " + cfg.string() + " --out " + (dir / "data").string()), 0);
  EXPECT_EQ(run("finetune --config " + cfg.string()), 4);
  EXPECT_NE(read(dir / "stderr.txt").find("--from"), std::string::npos);

  const fs::path bad = write_config("bad.json", R"({"train": {"epoch": 3}})");
  EXPECT_EQ(run("train --config " + bad.string()), 2);
  EXPECT_NE(read(dir / "stderr.txt").find("train.epoch"), std::string::npos);

  EXPECT_EQ(run("evaluate --from " + (dir / "missing.ckpt").string() + " --data " + (dir / "data").string()), 4);
  EXPECT_EQ(run("translate --data " + (dir / "nowhere").string()), 3);
  EXPECT_EQ(run("bogus-command"), 2);

  const fs::path word = write_config(
      "word.json", R"({"dataset": ")" + (dir / "data").string() + R"(", "checkpoint": ")" + (dir / "w.ckpt").string() +
                       R"(", "model": {"mode": "word-level", "channels": 6, "dim": 8, "heads": 2, "decoder_heads": 2}})");
  EXPECT_EQ(run("pretrain --config " + word.string()), 2);
}

TEST_F(CliTest, FeaturizeExportsOneRowPerWord) {
  const fs::path cfg = write_config("a.json", tiny_config("a"));
  ASSERT_EQ(run("synth --config " + cfg.string() + " --out " + (dir / "data").string()), 0);
  ASSERT_EQ(run("featurize --data " + (dir / "data").string() + " --out " + (dir / "f.bin").string()), 0)
      << read(dir / "stderr.txt");
  const std::string out = read(dir / "stdout.txt");
  EXPECT_NE(out.find("x 48 features"), std::string::npos) << out;
}

}  // namespace
}  // namespace dewave

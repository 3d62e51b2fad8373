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

#include "dewave/model.hpp"

#include <random>

#include "json.hpp"

#include "dewave/errors.hpp"
#include "dewave/ops.hpp"
#include "dewave/parallel.hpp"

namespace dewave {

using nlohmann::json;

std::string_view mode_name(Mode m) { return m == Mode::kWordLevel ? "word-level" : "raw-wave"; }

Mode parse_mode(std::string_view name) {
  if (name == "word-level") return Mode::kWordLevel;
  if (name == "raw-wave") return Mode::kRawWave;
  throw ConfigError("mode: expected \"word-level\" or \"raw-wave\", got \"" + std::string(name) + "\"");
}

ConvSchedule ModelConfig::schedule() const { return {conv_kernels, conv_strides, dim}; }

std::size_t ModelConfig::max_positions() const {
  return mode == Mode::kWordLevel ? max_words : conv_output_length(schedule(), pad_samples);
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string("model.") + key + " must be positive");
  };
  positive(channels, "channels");
  positive(dim, "dim");
  positive(heads, "heads");
  positive(ffn_hidden, "ffn_hidden");
  positive(decoder_heads, "decoder_heads");
  positive(max_words, "max_words");
  positive(pad_samples, "pad_samples");
  if (!(fs > 0)) throw ConfigError("model.fs must be positive");
  if (dim % heads != 0) throw ConfigError("model.dim must be divisible by model.heads");
  if (dim % decoder_heads != 0) throw ConfigError("model.dim must be divisible by model.decoder_heads");
  if (codebook_size < 2) throw ConfigError("model.codebook_size must be at least 2");
  if (word_pretrain && mode != Mode::kWordLevel) throw ConfigError("model.word_pretrain applies to word-level mode only");
  schedule().validate();
  if (mode == Mode::kRawWave && pad_samples < receptive_field(schedule(), fs).rf_samples) {
    throw ConfigError("model.pad_samples is shorter than the conv stack's receptive field");
  }
}

std::vector<PreparedInput> prepare_inputs(const std::vector<Sample>& samples, const ModelConfig& cfg,
                                          const Vocabulary& vocab) {
  std::vector<PreparedInput> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Sample& s = samples[i];
    if (s.recording.channels != cfg.channels) {
      throw DataError("sample " + s.id + ": " + std::to_string(s.recording.channels) + " channels, model expects " +
                      std::to_string(cfg.channels));
    }
    PreparedInput p;
    p.id = s.id;
    if (cfg.mode == Mode::kWordLevel) {
      const FeatureSequence seq = featurize_sample(s, cfg.max_words);
      FeatureSequence valid;
      valid.features.assign(seq.features.begin(), seq.features.begin() + static_cast<std::ptrdiff_t>(seq.valid()));
      valid.mask.assign(seq.valid(), 1);
      p.input = feature_tensor(valid);
      p.target = vocab.encode(s.words, cfg.max_words);
    } else {
      const PreparedWave w = prepare_wave(s.recording, cfg.pad_samples);
      p.input = w.wave;
      p.valid_samples = w.valid_samples;
      p.target = vocab.encode(s.words, cfg.max_words);
    }
    out[i] = std::move(p);
  });
  return out;
}

DeWaveModel::DeWaveModel(ModelConfig cfg, Vocabulary vocab, std::uint64_t seed)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), seed_(seed) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t m = cfg_.dim, positions = cfg_.max_positions();
  if (cfg_.mode == Mode::kWordLevel) {
    words_ = WordProjector::create(params_, "vectorizer", cfg_.feature_dim(), m, cfg_.heads, cfg_.ffn_hidden,
                                   cfg_.max_words, rng);
  } else {
    wave_ = WaveEncoder::create(params_, "vectorizer", cfg_.channels, cfg_.schedule(), cfg_.heads, cfg_.ffn_hidden,
                                positions, rng);
  }
  codex_ = CodexEncoder::create(params_, "codex", m, cfg_.heads, cfg_.codex_layers, cfg_.ffn_hidden, positions, rng);
  codebook_ = Codebook::create(params_, "codebook", cfg_.codebook_size, m, rng);
  decoder_ = DecoderLM::create(params_, "decoder", vocab_.size(), m, cfg_.decoder_heads, cfg_.decoder_layers,
                               cfg_.ffn_hidden, cfg_.max_words + 2, positions, rng);
  text_ = TextEmbedding::create(params_, "text", vocab_.size(), m, rng);
  if (cfg_.mode == Mode::kRawWave) {
    recon_ = ReconDecoder::create(params_, "recon", m, cfg_.channels, cfg_.heads, cfg_.recon_layers, cfg_.ffn_hidden,
                                  positions, rng);
  }
  if (cfg_.word_pretrain) feature_recon_ = nn::Linear::create(params_, "feature_recon", m, cfg_.feature_dim(), rng);
}

CodexPass DeWaveModel::codex_pass(const PreparedInput& in) const {
  CodexPass p;
  if (cfg_.mode == Mode::kWordLevel) {
    p.x = words_->forward(in.input, std::vector<std::uint8_t>(in.input.rows(), 1));
  } else {
    p.x = wave_->forward(in.input, in.valid_samples, true);
  }
  p.z_c = codex_.encode(p.x);
  p.q = quantize(p.z_c, codebook_);
  p.st = straight_through(p.z_c, p.q.z_q);
  return p;
}

const ReconDecoder& DeWaveModel::recon() const {
  if (!recon_) throw UnsupportedError("reconstruct: the word-level path has no wave decoder");
  return *recon_;
}

const nn::Linear& DeWaveModel::feature_recon() const {
  if (!feature_recon_) throw StateError("feature reconstruction head is disabled (model.word_pretrain)");
  return *feature_recon_;
}

const WaveEncoder& DeWaveModel::wave_encoder() const {
  if (!wave_) throw StateError("model is not in raw-wave mode");
  return *wave_;
}

const WordProjector& DeWaveModel::word_projector() const {
  if (!words_) throw StateError("model is not in word-level mode");
  return *words_;
}

namespace {

json config_json(const ModelConfig& c) {
  return {{"mode", mode_name(c.mode)},
          {"channels", c.channels},
          {"fs", c.fs},
          {"dim", c.dim},
          {"heads", c.heads},
          {"ffn_hidden", c.ffn_hidden},
          {"codex_layers", c.codex_layers},
          {"codebook_size", c.codebook_size},
          {"decoder_layers", c.decoder_layers},
          {"decoder_heads", c.decoder_heads},
          {"recon_layers", c.recon_layers},
          {"max_words", c.max_words},
          {"pad_samples", c.pad_samples},
          {"conv_kernels", c.conv_kernels},
          {"conv_strides", c.conv_strides},
          {"word_pretrain", c.word_pretrain}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.mode = parse_mode(j.at("mode").get<std::string>());
  c.channels = j.at("channels").get<std::size_t>();
  c.fs = j.at("fs").get<double>();
  c.dim = j.at("dim").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ffn_hidden = j.at("ffn_hidden").get<std::size_t>();
  c.codex_layers = j.at("codex_layers").get<std::size_t>();
  c.codebook_size = j.at("codebook_size").get<std::size_t>();
  c.decoder_layers = j.at("decoder_layers").get<std::size_t>();
  c.decoder_heads = j.at("decoder_heads").get<std::size_t>();
  c.recon_layers = j.at("recon_layers").get<std::size_t>();
  c.max_words = j.at("max_words").get<std::size_t>();
  c.pad_samples = j.at("pad_samples").get<std::size_t>();
  c.conv_kernels = j.at("conv_kernels").get<std::vector<std::size_t>>();
  c.conv_strides = j.at("conv_strides").get<std::vector<std::size_t>>();
  c.word_pretrain = j.at("word_pretrain").get<bool>();
  return c;
}

constexpr const char* kMetaName = "meta/json";

}  // namespace

void DeWaveModel::save(const std::filesystem::path& path) const {
  const json meta = {{"config", config_json(cfg_)},
                     {"vocab", std::vector<std::string>(vocab_.tokens().begin() + Vocabulary::kNumSpecial,
                                                        vocab_.tokens().end())},
                     {"stage", stage_},
                     {"decoder_pretrained", decoder_pretrained_},
                     {"seed", std::to_string(seed_)}};
  const std::string text = meta.dump();
  std::vector<double> bytes(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) bytes[i] = static_cast<unsigned char>(text[i]);
  const Shape shape{bytes.size()};
  ParamSet out;
  out.add(kMetaName, Tensor::from(shape, std::move(bytes)));
  for (const auto& [name, t] : params_) out.add(name, t);
  save_params(out, path);
}

DeWaveModel DeWaveModel::load(const std::filesystem::path& path) {
  ParamSet stored = load_params(path);
  if (!stored.contains(kMetaName)) throw DataError(path.string() + ": checkpoint has no " + kMetaName + " record");
  std::string text;
  for (double v : stored.get(kMetaName).values()) text.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  json meta;
  ModelConfig cfg;
  std::vector<std::string> tokens;
  int stage = -1;
  bool decoder_pretrained = false;
  std::uint64_t seed = 0;
  try {
    meta = json::parse(text);
    cfg = config_from_json(meta.at("config"));
    tokens = meta.at("vocab").get<std::vector<std::string>>();
    stage = meta.at("stage").get<int>();
    decoder_pretrained = meta.at("decoder_pretrained").get<bool>();
    seed = std::stoull(meta.at("seed").get<std::string>());
  } catch (const std::exception& e) {
    throw DataError(path.string() + ": bad checkpoint metadata: " + e.what());
  }
  DeWaveModel model(cfg, Vocabulary::from_tokens(tokens), seed);
  if (stored.size() != model.params_.size() + 1) {
    throw DataError(path.string() + ": holds " + std::to_string(stored.size() - 1) + " tensors, model has " +
                    std::to_string(model.params_.size()));
  }
  try {
    if (model.params_.assign_from(stored) != model.params_.size()) {
      throw DataError(path.string() + ": tensor names do not match the model");
    }
  } catch (const StateError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  model.stage_ = stage;
  model.decoder_pretrained_ = decoder_pretrained;
  return model;
}

}  // namespace dewave

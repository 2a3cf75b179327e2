// pausekit/models.hpp

// Copyright 2026 Pausekit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// The four pause-insertion architectures.
//
// Baseline:      subword embeddings -> [BiLSTMP -> splice]x2 -> sigmoid.
// Baseline(spk): speaker vector added after the first splicing window
//                through a learned linear resize.
// RPI:           encoder -> +speaker vector -> BiLSTM x2 -> sigmoid.
// CPI:           shared encoder + speaker, two independent BiLSTM branches
//                (RP and PIP), each with a probability head and a 4-way
//                category head.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pausekit/corpus.hpp"
#include "pausekit/nn/layers.hpp"
#include "pausekit/textnorm.hpp"

namespace pausekit {

enum class Arch { Baseline, BaselineSpk, RPI, CPI };

enum class EncoderKind { StaticEmbedding, Transformer };

inline const char* arch_name(Arch a) {
  switch (a) {
    case Arch::Baseline: return "baseline";
    case Arch::BaselineSpk: return "baseline-spk";
    case Arch::RPI: return "rpi";
    case Arch::CPI: return "cpi";
  }
  return "?";
}

inline Arch arch_from_name(const std::string& s) {
  if (s == "baseline") return Arch::Baseline;
  if (s == "baseline-spk") return Arch::BaselineSpk;
  if (s == "rpi") return Arch::RPI;
  if (s == "cpi") return Arch::CPI;
  throw ConfigError("unknown architecture: " + s);
}

struct ModelConfig {
  Arch arch = Arch::RPI;
  EncoderKind encoder = EncoderKind::Transformer;
  bool encoder_trainable = true;
  bool use_speaker = true;  // speaker injection into the encoder output
  int subword_emb_dim = 300;
  int bilstmp_hidden = 512;
  int bilstmp_projection = 128;
  int decoder_bilstm_hidden = 512;
  int decoder_layers = 2;
  int baseline_layers = 2;
  int hidden_dim = 768;  // encoder output and speaker embedding dimension
  int splice_w = 7;
  nn::TransformerSpec transformer;
};

inline void validate_config(const ModelConfig& cfg) {
  for (int d : {cfg.subword_emb_dim, cfg.bilstmp_hidden, cfg.bilstmp_projection,
                cfg.decoder_bilstm_hidden, cfg.decoder_layers, cfg.baseline_layers,
                cfg.hidden_dim})
    if (d <= 0) throw ConfigError("model config: all dimensions must be positive");
  if (cfg.splice_w < 0) throw ConfigError("model config: negative splice window");
  if (cfg.arch == Arch::Baseline && cfg.use_speaker)
    throw ConfigError("model config: baseline does not take a speaker; use baseline-spk");
  if (cfg.arch == Arch::BaselineSpk && !cfg.use_speaker)
    throw ConfigError("model config: baseline-spk requires use_speaker");
  bool decoder_arch = cfg.arch == Arch::RPI || cfg.arch == Arch::CPI;
  if (decoder_arch && cfg.encoder == EncoderKind::Transformer &&
      cfg.transformer.model_dim != cfg.hidden_dim)
    throw ConfigError("model config: transformer model_dim must equal hidden_dim");
}

class SpeakerTable {
 public:
  SpeakerTable() = default;
  explicit SpeakerTable(std::vector<std::string> ids) : ids_(std::move(ids)) {
    for (size_t i = 0; i < ids_.size(); ++i)
      if (!index_.emplace(ids_[i], static_cast<int>(i)).second)
        throw ConfigError("duplicate speaker id: " + ids_[i]);
  }

  // Unknown speakers are an explicit error; there is no fallback vector.
  int index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("unknown speaker: " + id);
    return it->second;
  }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }
  size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, int> index_;
};

struct PauseModel {
  ModelConfig config;
  SpeakerTable speakers;
  size_t embed_rows = 0;  // vocabulary size + 1 (last row reserved for masking)
  nn::ParamSet params;
};

namespace detail {

inline nn::LstmSpec baseline_layer_spec(const ModelConfig& cfg, int layer) {
  nn::LstmSpec spec;
  int spliced = (2 * cfg.splice_w + 1) * 2 * cfg.bilstmp_projection;
  spec.input_dim = layer == 0 ? cfg.subword_emb_dim : spliced;
  spec.hidden_dim = cfg.bilstmp_hidden;
  spec.options.peephole = true;
  spec.options.projection_dim = cfg.bilstmp_projection;
  return spec;
}

inline nn::LstmSpec decoder_layer_spec(const ModelConfig& cfg, int layer) {
  nn::LstmSpec spec;
  spec.input_dim = layer == 0 ? cfg.hidden_dim : 2 * cfg.decoder_bilstm_hidden;
  spec.hidden_dim = cfg.decoder_bilstm_hidden;
  return spec;
}

inline int baseline_spliced_dim(const ModelConfig& cfg) {
  return (2 * cfg.splice_w + 1) * 2 * cfg.bilstmp_projection;
}

}  // namespace detail

// Builds a model with freshly initialized parameters. `vocab_size` excludes
// the reserved mask row.
inline PauseModel build_pause_model(const ModelConfig& cfg, size_t vocab_size,
                                    std::vector<std::string> speaker_ids, std::uint64_t seed) {
  validate_config(cfg);
  PauseModel m;
  m.config = cfg;
  m.speakers = SpeakerTable(std::move(speaker_ids));
  m.embed_rows = vocab_size + 1;
  if (cfg.use_speaker && m.speakers.size() == 0)
    throw ConfigError("build_pause_model: speaker-conditioned model needs a speaker roster");
  std::mt19937_64 rng(seed);
  nn::ParamSet& ps = m.params;

  if (cfg.arch == Arch::Baseline || cfg.arch == Arch::BaselineSpk) {
    nn::add_embedding_params(ps, "baseline.embed", m.embed_rows,
                             static_cast<size_t>(cfg.subword_emb_dim), rng);
    for (int l = 0; l < cfg.baseline_layers; ++l)
      nn::add_bilstm_params(ps, "baseline.l" + std::to_string(l),
                            detail::baseline_layer_spec(cfg, l), rng);
    if (cfg.use_speaker) {
      nn::add_linear_params(ps, "baseline.spk_proj", static_cast<size_t>(cfg.hidden_dim),
                            static_cast<size_t>(detail::baseline_spliced_dim(cfg)), rng);
      nn::add_embedding_params(ps, "spk.table", m.speakers.size(),
                               static_cast<size_t>(cfg.hidden_dim), rng);
    }
    nn::add_linear_params(ps, "head.rp.prob",
                          static_cast<size_t>(detail::baseline_spliced_dim(cfg)), 1, rng);
    return m;
  }

  // RPI / CPI
  if (cfg.encoder == EncoderKind::Transformer) {
    nn::add_transformer_params(ps, "encoder", m.embed_rows, cfg.transformer, rng);
  } else {
    nn::add_embedding_params(ps, "encoder.embed", m.embed_rows,
                             static_cast<size_t>(cfg.hidden_dim), rng);
  }
  if (cfg.use_speaker)
    nn::add_embedding_params(ps, "spk.table", m.speakers.size(),
                             static_cast<size_t>(cfg.hidden_dim), rng, /*scale=*/0.5);
  int dec_out = 2 * cfg.decoder_bilstm_hidden;
  for (int l = 0; l < cfg.decoder_layers; ++l)
    nn::add_bilstm_params(ps, "dec.rp.l" + std::to_string(l), detail::decoder_layer_spec(cfg, l),
                          rng);
  nn::add_linear_params(ps, "head.rp.prob", static_cast<size_t>(dec_out), 1, rng);
  if (cfg.arch == Arch::CPI) {
    nn::add_linear_params(ps, "head.rp.cat", static_cast<size_t>(dec_out), 4, rng);
    for (int l = 0; l < cfg.decoder_layers; ++l)
      nn::add_bilstm_params(ps, "dec.pip.l" + std::to_string(l),
                            detail::decoder_layer_spec(cfg, l), rng);
    nn::add_linear_params(ps, "head.pip.prob", static_cast<size_t>(dec_out), 1, rng);
    nn::add_linear_params(ps, "head.pip.cat", static_cast<size_t>(dec_out), 4, rng);
  }
  if (!cfg.encoder_trainable) m.params.set_trainable_prefix("encoder.", false);
  return m;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

struct ModelBatch {
  std::vector<int> token_ids;  // sentence-major stacked
  std::vector<int> lengths;
  std::vector<int> speaker_rows;  // per-row speaker index
  // Stacked labels and masks (empty targets for unlabeled prediction input).
  nn::Tensor p_rp, p_pip, valid;
  std::vector<int> c_rp, c_pip;
  std::vector<uint8_t> rp_eligible, pip_eligible;
};

inline ModelBatch make_model_batch(const PauseModel& model, const Vocabulary& vocab,
                                   const std::vector<const LabeledSentence*>& sentences) {
  if (sentences.empty()) throw DataError("make_model_batch: empty batch");
  size_t total = 0;
  for (const auto* s : sentences) {
    if (s->tokens.empty()) throw DataError("make_model_batch: empty sentence " + s->id);
    total += s->tokens.size();
  }
  ModelBatch b;
  b.token_ids.reserve(total);
  b.p_rp = nn::Tensor::zeros({total});
  b.p_pip = nn::Tensor::zeros({total});
  b.valid = nn::Tensor::full({total}, 1.0);
  b.c_rp.resize(total);
  b.c_pip.resize(total);
  b.rp_eligible.resize(total);
  b.pip_eligible.resize(total);
  size_t i = 0;
  for (const auto* s : sentences) {
    b.lengths.push_back(static_cast<int>(s->tokens.size()));
    int spk = model.config.use_speaker ? model.speakers.index_of(s->speaker) : 0;
    for (size_t t = 0; t < s->tokens.size(); ++t, ++i) {
      b.token_ids.push_back(vocab.id_for(s->tokens[t]));
      b.speaker_rows.push_back(spk);
      b.p_rp[i] = static_cast<double>(s->p_rp[t]);
      b.p_pip[i] = static_cast<double>(s->p_pip[t]);
      b.c_rp[i] = s->c_rp[t];
      b.c_pip[i] = s->c_pip[t];
      b.rp_eligible[i] = s->tokens[t].is_word_final && !s->tokens[t].is_punct ? 1 : 0;
      b.pip_eligible[i] = s->tokens[t].is_punct ? 1 : 0;
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

struct ForwardOutputs {
  nn::Var rp_prob;         // (N x 1) probabilities
  nn::Var rp_cat_logits;   // (N x 4), CPI only
  nn::Var pip_prob;        // CPI only
  nn::Var pip_cat_logits;  // CPI only
};

namespace detail {

inline nn::SeqBatch encode(nn::Graph& g, const PauseModel& model, const ModelBatch& batch) {
  const ModelConfig& cfg = model.config;
  nn::SeqBatch enc;
  if (cfg.encoder == EncoderKind::Transformer) {
    enc = nn::transformer_encode(g, model.params, "encoder", batch.token_ids, batch.lengths,
                                 cfg.transformer);
  } else {
    enc = nn::SeqBatch{nn::embedding(g, model.params, "encoder.embed", batch.token_ids),
                       batch.lengths};
  }
  if (cfg.use_speaker) {
    // Element-wise addition of the speaker vector at every position; the
    // dimensions match by construction.
    nn::Var spk = nn::embedding(g, model.params, "spk.table", batch.speaker_rows);
    enc.data = nn::add(enc.data, spk);
  }
  return enc;
}

inline nn::Var decode_branch(nn::Graph& g, const PauseModel& model, const nn::SeqBatch& enc,
                             const std::string& prefix) {
  nn::SeqBatch h = enc;
  for (int l = 0; l < model.config.decoder_layers; ++l)
    h = nn::bilstm_forward(g, h, model.params, prefix + ".l" + std::to_string(l),
                           detail::decoder_layer_spec(model.config, l));
  return h.data;
}

inline nn::Var baseline_trunk(nn::Graph& g, const PauseModel& model, const ModelBatch& batch) {
  const ModelConfig& cfg = model.config;
  nn::SeqBatch h{nn::embedding(g, model.params, "baseline.embed", batch.token_ids),
                 batch.lengths};
  for (int l = 0; l < cfg.baseline_layers; ++l) {
    h = nn::bilstm_forward(g, h, model.params, "baseline.l" + std::to_string(l),
                           detail::baseline_layer_spec(cfg, l));
    h = nn::splice(g, h, cfg.splice_w);
    if (l == 0 && cfg.use_speaker) {
      nn::Var spk = nn::embedding(g, model.params, "spk.table", batch.speaker_rows);
      h.data = nn::add(h.data, nn::linear(g, spk, model.params, "baseline.spk_proj"));
    }
  }
  return h.data;
}

}  // namespace detail

inline ForwardOutputs forward_model(nn::Graph& g, const PauseModel& model,
                                    const ModelBatch& batch) {
  const ModelConfig& cfg = model.config;
  ForwardOutputs out;
  if (cfg.arch == Arch::Baseline || cfg.arch == Arch::BaselineSpk) {
    nn::Var trunk = detail::baseline_trunk(g, model, batch);
    out.rp_prob = nn::sigmoid(nn::linear(g, trunk, model.params, "head.rp.prob"));
    return out;
  }
  nn::SeqBatch enc = detail::encode(g, model, batch);
  nn::Var rp = detail::decode_branch(g, model, enc, "dec.rp");
  out.rp_prob = nn::sigmoid(nn::linear(g, rp, model.params, "head.rp.prob"));
  if (cfg.arch == Arch::CPI) {
    out.rp_cat_logits = nn::linear(g, rp, model.params, "head.rp.cat");
    nn::Var pip = detail::decode_branch(g, model, enc, "dec.pip");
    out.pip_prob = nn::sigmoid(nn::linear(g, pip, model.params, "head.pip.prob"));
    out.pip_cat_logits = nn::linear(g, pip, model.params, "head.pip.cat");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

// Per-token probabilities and category distributions for one sentence.
struct PredictionOutput {
  std::vector<double> rp_prob;
  std::vector<std::array<double, 4>> rp_cat;   // rows sum to 1; empty unless CPI
  std::vector<double> pip_prob;                // empty unless CPI
  std::vector<std::array<double, 4>> pip_cat;  // empty unless CPI
};

inline std::vector<PredictionOutput> predict_batch(
    const PauseModel& model, const Vocabulary& vocab,
    const std::vector<const LabeledSentence*>& sentences) {
  ModelBatch batch = make_model_batch(model, vocab, sentences);
  nn::Graph g;
  ForwardOutputs fwd = forward_model(g, model, batch);

  nn::Var rp_cat, pip_cat;
  bool cpi = model.config.arch == Arch::CPI;
  if (cpi) {
    rp_cat = nn::softmax_rows(fwd.rp_cat_logits);
    pip_cat = nn::softmax_rows(fwd.pip_cat_logits);
  }
  std::vector<PredictionOutput> outs;
  size_t row = 0;
  for (const auto* s : sentences) {
    PredictionOutput o;
    size_t n = s->tokens.size();
    for (size_t t = 0; t < n; ++t) {
      o.rp_prob.push_back(fwd.rp_prob.value()[row + t]);
      if (cpi) {
        std::array<double, 4> rc{}, pc{};
        for (size_t c = 0; c < 4; ++c) {
          rc[c] = rp_cat.value().at(row + t, c);
          pc[c] = pip_cat.value().at(row + t, c);
        }
        o.rp_cat.push_back(rc);
        o.pip_cat.push_back(pc);
        o.pip_prob.push_back(fwd.pip_prob.value()[row + t]);
      }
    }
    row += n;
    outs.push_back(std::move(o));
  }
  return outs;
}

inline PredictionOutput predict_sentence(const PauseModel& model, const Vocabulary& vocab,
                                         const std::vector<Token>& tokens,
                                         const std::optional<std::string>& speaker) {
  if (tokens.empty()) throw DataError("predict_sentence: empty sentence");
  if (model.config.use_speaker && !speaker)
    throw DataError("predict_sentence: model is speaker-conditioned but no speaker was given");
  LabeledSentence s;
  s.id = "(inference)";
  s.speaker = speaker.value_or("");
  s.tokens = tokens;
  s.p_rp.assign(tokens.size(), 0);
  s.c_rp.assign(tokens.size(), 0);
  s.p_pip.assign(tokens.size(), 0);
  s.c_pip.assign(tokens.size(), 0);
  return predict_batch(model, vocab, {&s}).front();
}

// ---------------------------------------------------------------------------
// Decision rule
// ---------------------------------------------------------------------------

struct Decision {
  bool pause = false;
  PauseKind kind = PauseKind::RP;
  int category = 0;  // 0 = uncategorized (position-only models)
};

// Probability gate first, then the category with the highest probability
// among categories 1-3 (category 0 is ignored at decision time; ties break
// toward the smaller index). RP decisions only on word-final non-punctuation
// tokens, PIP decisions only on punctuation tokens. A threshold of 1
// disables the corresponding head.
inline std::vector<Decision> decide(const PredictionOutput& output,
                                    const std::vector<Token>& tokens, double rp_threshold,
                                    double pip_threshold) {
  if (output.rp_prob.size() != tokens.size())
    throw ConfigError("decide: output length does not match token count");
  for (double th : {rp_threshold, pip_threshold})
    if (!(th >= 0.0) || !(th <= 1.0)) throw ConfigError("decide: thresholds must be in [0, 1]");

  auto argmax_123 = [](const std::array<double, 4>& dist) {
    int best = 1;
    for (int c = 2; c <= 3; ++c)
      if (dist[static_cast<size_t>(c)] > dist[static_cast<size_t>(best)]) best = c;
    return best;
  };

  std::vector<Decision> decisions(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.is_punct) {
      if (output.pip_prob.empty()) continue;
      if (pip_threshold < 1.0 && output.pip_prob[i] >= pip_threshold) {
        decisions[i].pause = true;
        decisions[i].kind = PauseKind::PIP;
        decisions[i].category = output.pip_cat.empty() ? 0 : argmax_123(output.pip_cat[i]);
      }
    } else if (t.is_word_final) {
      if (rp_threshold < 1.0 && output.rp_prob[i] >= rp_threshold) {
        decisions[i].pause = true;
        decisions[i].kind = PauseKind::RP;
        decisions[i].category = output.rp_cat.empty() ? 0 : argmax_123(output.rp_cat[i]);
      }
    }
  }
  return decisions;
}

// ---------------------------------------------------------------------------
// Config sidecar
// ---------------------------------------------------------------------------

inline nlohmann::json config_to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["arch"] = arch_name(cfg.arch);
  j["encoder"] = cfg.encoder == EncoderKind::Transformer ? "transformer" : "static";
  j["encoder_trainable"] = cfg.encoder_trainable;
  j["use_speaker"] = cfg.use_speaker;
  j["subword_emb_dim"] = cfg.subword_emb_dim;
  j["bilstmp_hidden"] = cfg.bilstmp_hidden;
  j["bilstmp_projection"] = cfg.bilstmp_projection;
  j["decoder_bilstm_hidden"] = cfg.decoder_bilstm_hidden;
  j["decoder_layers"] = cfg.decoder_layers;
  j["baseline_layers"] = cfg.baseline_layers;
  j["hidden_dim"] = cfg.hidden_dim;
  j["splice_w"] = cfg.splice_w;
  j["transformer"] = {{"layers", cfg.transformer.layers},
                      {"heads", cfg.transformer.heads},
                      {"model_dim", cfg.transformer.model_dim},
                      {"ff_dim", cfg.transformer.ff_dim},
                      {"positions",
                       cfg.transformer.positions == nn::TransformerSpec::Position::Sinusoidal
                           ? "sinusoidal"
                           : cfg.transformer.positions == nn::TransformerSpec::Position::Learned
                                 ? "learned"
                                 : "none"},
                      {"max_positions", cfg.transformer.max_positions}};
  return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.arch = arch_from_name(j.at("arch").get<std::string>());
  std::string enc = j.at("encoder").get<std::string>();
  if (enc == "transformer")
    cfg.encoder = EncoderKind::Transformer;
  else if (enc == "static")
    cfg.encoder = EncoderKind::StaticEmbedding;
  else
    throw ConfigError("unknown encoder kind: " + enc);
  cfg.encoder_trainable = j.at("encoder_trainable").get<bool>();
  cfg.use_speaker = j.at("use_speaker").get<bool>();
  cfg.subword_emb_dim = j.at("subword_emb_dim").get<int>();
  cfg.bilstmp_hidden = j.at("bilstmp_hidden").get<int>();
  cfg.bilstmp_projection = j.at("bilstmp_projection").get<int>();
  cfg.decoder_bilstm_hidden = j.at("decoder_bilstm_hidden").get<int>();
  cfg.decoder_layers = j.at("decoder_layers").get<int>();
  cfg.baseline_layers = j.at("baseline_layers").get<int>();
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  cfg.splice_w = j.at("splice_w").get<int>();
  const auto& t = j.at("transformer");
  cfg.transformer.layers = t.at("layers").get<int>();
  cfg.transformer.heads = t.at("heads").get<int>();
  cfg.transformer.model_dim = t.at("model_dim").get<int>();
  cfg.transformer.ff_dim = t.at("ff_dim").get<int>();
  cfg.transformer.max_positions = t.at("max_positions").get<int>();
  std::string pos = t.at("positions").get<std::string>();
  cfg.transformer.positions = pos == "sinusoidal"
                                  ? nn::TransformerSpec::Position::Sinusoidal
                                  : pos == "learned" ? nn::TransformerSpec::Position::Learned
                                                     : nn::TransformerSpec::Position::None;
  return cfg;
}

// Everything needed to run a saved model: architecture config, speaker
// roster, vocabulary reference and categorizer thresholds.
struct ModelBundle {
  PauseModel model;
  std::string vocab_ref;
  DurationCategorizer categorizer;
};

inline void save_model(const std::string& checkpoint_path, const std::string& config_path,
                       const PauseModel& model, const std::string& vocab_ref,
                       const DurationCategorizer& categorizer) {
  model.params.save(checkpoint_path);
  nlohmann::json j;
  j["model"] = config_to_json(model.config);
  j["speakers"] = model.speakers.ids();
  j["embed_rows"] = model.embed_rows;
  j["vocab"] = vocab_ref;
  j["thresholds"] = categorizer.thresholds_ms;
  std::ofstream out(config_path);
  if (!out) throw ParseError("cannot open model config for writing: " + config_path);
  out << j.dump(2) << "\n";
}

inline ModelBundle load_model(const std::string& checkpoint_path,
                              const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ParseError("cannot open model config: " + config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed model config " + config_path + ": " + e.what());
  }
  ModelBundle bundle;
  try {
    bundle.model.config = config_from_json(j.at("model"));
    bundle.model.speakers = SpeakerTable(j.at("speakers").get<std::vector<std::string>>());
    bundle.model.embed_rows = j.at("embed_rows").get<size_t>();
    bundle.vocab_ref = j.at("vocab").get<std::string>();
    bundle.categorizer.thresholds_ms = j.at("thresholds").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model config " + config_path + " missing fields: " + e.what());
  }
  validate_config(bundle.model.config);
  bundle.model.params = nn::ParamSet::load(checkpoint_path);

  // The checkpoint must carry exactly the parameters this config implies.
  PauseModel expect = build_pause_model(bundle.model.config, bundle.model.embed_rows - 1,
                                        bundle.model.speakers.ids(), 0);
  for (const auto& name : expect.params.names()) {
    if (!bundle.model.params.has(name))
      throw ConfigError("checkpoint/config mismatch: missing parameter " + name);
    if (!bundle.model.params.at(name).value.same_shape(expect.params.at(name).value))
      throw ConfigError("checkpoint/config mismatch: shape of " + name);
  }
  return bundle;
}

}  // namespace pausekit

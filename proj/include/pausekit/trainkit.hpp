// pausekit/trainkit.hpp

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

// Training loop: Adam with a plateau-driven learning-rate schedule, BCE/WCE
// loss assembly with class weights computed from training-set statistics,
// best-checkpoint selection on the validation F-score, and masked-token
// pre-training for the transformer encoder.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pausekit/evalkit.hpp"
#include "pausekit/models.hpp"

namespace pausekit {

struct TrainConfig {
  int batch_size = 32;        // sentences per mini-batch
  double lr0 = 5e-5;          // initial learning rate
  int plateau_iters = 5000;   // non-improving iterations before an LR drop
  double lr_decay = 0.2;
  long max_iters = 200000;
  int eval_every = 500;       // iterations between validation passes
  std::uint64_t seed = 0;
  double beta_rp = 0.5;
  double beta_pip = 2.0;
};

inline void validate_train_config(const TrainConfig& cfg) {
  if (cfg.batch_size <= 0 || cfg.plateau_iters <= 0 || cfg.eval_every <= 0 ||
      cfg.max_iters < 0 || !(cfg.lr0 > 0.0) || !(cfg.beta_rp > 0.0) || !(cfg.beta_pip > 0.0))
    throw ConfigError("train config: all quantities must be positive");
  if (!(cfg.lr_decay > 0.0 && cfg.lr_decay < 1.0))
    throw ConfigError("train config: lr_decay must be in (0, 1)");
}

// Category weights for the WCE losses. Categories 1-3 weigh
// count(category 0) / count(category k) over the training set; category 0
// weighs 1.0 and RP category 3 is forced to 1.0.
struct ClassWeights {
  std::array<double, 4> rp{1.0, 1.0, 1.0, 1.0};
  std::array<double, 4> pip{1.0, 1.0, 1.0, 1.0};
};

inline ClassWeights compute_class_weights(const CorpusStats& stats) {
  ClassWeights w;
  double rp_zero = static_cast<double>(stats.tokens - stats.rp_total);
  double pip_zero = static_cast<double>(stats.tokens - stats.pip_total);
  for (int k = 1; k <= 3; ++k) {
    if (k <= 2 && stats.rp_counts[k] == 0)
      throw DataError("compute_class_weights: RP category " + std::to_string(k) +
                      " has zero count");
    if (stats.pip_counts[k] == 0)
      throw DataError("compute_class_weights: PIP category " + std::to_string(k) +
                      " has zero count");
    if (k == 3)
      w.rp[3] = 1.0;  // forced due to sparseness
    else
      w.rp[static_cast<size_t>(k)] = rp_zero / static_cast<double>(stats.rp_counts[k]);
    w.pip[static_cast<size_t>(k)] = pip_zero / static_cast<double>(stats.pip_counts[k]);
  }
  return w;
}

// Baseline/RPI: BCE on RP positions. CPI: equal-weight sum of BCE(P-RP),
// WCE(C-RP), BCE(P-PIP) and WCE(C-PIP).
inline nn::Var total_loss(nn::Graph& g, const ForwardOutputs& fwd, const ModelBatch& batch,
                          const ClassWeights& weights, Arch arch) {
  nn::Var loss = nn::bce_loss(fwd.rp_prob, batch.p_rp, batch.valid);
  if (arch != Arch::CPI) return loss;
  std::vector<double> w_rp(weights.rp.begin(), weights.rp.end());
  std::vector<double> w_pip(weights.pip.begin(), weights.pip.end());
  loss = nn::add(loss, nn::wce_loss(fwd.rp_cat_logits, batch.c_rp, w_rp, batch.valid));
  loss = nn::add(loss, nn::bce_loss(fwd.pip_prob, batch.p_pip, batch.valid));
  loss = nn::add(loss, nn::wce_loss(fwd.pip_cat_logits, batch.c_pip, w_pip, batch.valid));
  return loss;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamState {
  std::map<std::string, nn::Tensor> m, v;
  long t = 0;
};

inline void adam_step(nn::ParamSet& params, const std::map<std::string, nn::Tensor>& grads,
                      AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8) {
  ++state.t;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (const auto& [name, grad] : grads) {
    nn::Param& p = params.at(name);
    if (!p.value.same_shape(grad))
      throw ConfigError("adam_step: gradient shape mismatch for " + name);
    auto mi = state.m.find(name);
    if (mi == state.m.end()) {
      state.m.emplace(name, nn::Tensor::zeros(grad.shape()));
      state.v.emplace(name, nn::Tensor::zeros(grad.shape()));
      mi = state.m.find(name);
    }
    nn::Tensor& m = mi->second;
    nn::Tensor& v = state.v.at(name);
    for (size_t i = 0; i < grad.numel(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EvalRecord {
  long iteration = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean loss since the previous evaluation
  double val_metric = 0.0;
  double val_f_rp = 0.0;
  double val_f_pip = 0.0;  // CPI only
};

struct TrainResult {
  nn::ParamSet best_params;
  double best_metric = 0.0;
  long best_iteration = 0;
  std::vector<EvalRecord> log;
};

struct TrainHooks {
  // Test hook replacing the validation metric computation.
  std::function<double(long iteration)> val_metric_override;
};

// Maximum-over-threshold F_{beta} on RP positions; CPI models additionally
// take the F_{beta} over PIP positions and the two are averaged.
inline EvalRecord evaluate_model(const PauseModel& model, const Vocabulary& vocab,
                                 const std::vector<LabeledSentence>& val_set,
                                 const TrainConfig& cfg, int chunk = 64) {
  std::vector<std::vector<double>> rp_probs, pip_probs;
  for (size_t at = 0; at < val_set.size(); at += static_cast<size_t>(chunk)) {
    std::vector<const LabeledSentence*> group;
    for (size_t i = at; i < std::min(val_set.size(), at + static_cast<size_t>(chunk)); ++i)
      group.push_back(&val_set[i]);
    auto preds = predict_batch(model, vocab, group);
    for (auto& p : preds) {
      rp_probs.push_back(std::move(p.rp_prob));
      if (model.config.arch == Arch::CPI) pip_probs.push_back(std::move(p.pip_prob));
    }
  }
  EvalRecord rec;
  rec.val_f_rp = sweep_threshold(rp_probs, val_set, cfg.beta_rp, PauseKind::RP).best_f;
  if (model.config.arch == Arch::CPI) {
    rec.val_f_pip = sweep_threshold(pip_probs, val_set, cfg.beta_pip, PauseKind::PIP).best_f;
    rec.val_metric = 0.5 * (rec.val_f_rp + rec.val_f_pip);
  } else {
    rec.val_metric = rec.val_f_rp;
  }
  return rec;
}

inline TrainResult train(PauseModel& model, const std::vector<LabeledSentence>& train_set,
                         const std::vector<LabeledSentence>& val_set, const Vocabulary& vocab,
                         const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  validate_train_config(cfg);
  if (train_set.empty() || val_set.empty())
    throw DataError("train: training and validation sets must be non-empty");
  if (model.config.use_speaker) {
    for (const auto& s : train_set)
      if (!model.speakers.contains(s.speaker))
        throw DataError("train: speaker " + s.speaker + " not in the model's roster");
    for (const auto& s : val_set)
      if (!model.speakers.contains(s.speaker))
        throw DataError("train: speaker " + s.speaker + " not in the model's roster");
  }

  ClassWeights weights;
  if (model.config.arch == Arch::CPI) weights = compute_class_weights(compute_stats(train_set));

  auto validation_metric = [&](long iteration, EvalRecord& rec) {
    if (hooks.val_metric_override) {
      rec.val_metric = hooks.val_metric_override(iteration);
      rec.val_f_rp = rec.val_metric;
      return;
    }
    EvalRecord m = evaluate_model(model, vocab, val_set, cfg);
    rec.val_metric = m.val_metric;
    rec.val_f_rp = m.val_f_rp;
    rec.val_f_pip = m.val_f_pip;
  };

  TrainResult result;
  double lr = cfg.lr0;

  EvalRecord initial;
  initial.iteration = 0;
  initial.lr = lr;
  validation_metric(0, initial);
  result.log.push_back(initial);
  result.best_metric = initial.val_metric;
  result.best_iteration = 0;
  result.best_params = model.params;

  std::mt19937_64 rng(cfg.seed);
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  size_t cursor = 0;

  AdamState adam;
  long anchor = 0;  // last improvement or LR drop
  double loss_sum = 0.0;
  long loss_count = 0;

  for (long iter = 1; iter <= cfg.max_iters; ++iter) {
    std::vector<const LabeledSentence*> batch;
    for (int i = 0; i < cfg.batch_size && i < static_cast<int>(train_set.size()); ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(&train_set[order[cursor++]]);
    }
    ModelBatch mb = make_model_batch(model, vocab, batch);
    nn::Graph g;
    ForwardOutputs fwd = forward_model(g, model, mb);
    nn::Var loss = total_loss(g, fwd, mb, weights, model.config.arch);
    double loss_value = loss.value().item();
    if (!std::isfinite(loss_value))
      throw InternalError("train: non-finite loss at iteration " + std::to_string(iter));
    g.backward(loss);
    adam_step(model.params, g.gradients(), adam, lr);
    loss_sum += loss_value;
    ++loss_count;

    if (iter % cfg.eval_every == 0) {
      EvalRecord rec;
      rec.iteration = iter;
      rec.lr = lr;
      rec.train_loss = loss_sum / static_cast<double>(loss_count);
      loss_sum = 0.0;
      loss_count = 0;
      validation_metric(iter, rec);
      result.log.push_back(rec);
      if (rec.val_metric > result.best_metric) {
        result.best_metric = rec.val_metric;
        result.best_iteration = iter;
        result.best_params = model.params;
        anchor = iter;
      } else if (iter - anchor >= cfg.plateau_iters) {
        lr *= cfg.lr_decay;
        anchor = iter;
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Masked-token pre-training
// ---------------------------------------------------------------------------

struct MlmResult {
  nn::ParamSet encoder;  // loadable into RPI/CPI models via merge_from
  nn::ParamSet full;     // encoder plus the vocabulary head
  double final_loss = 0.0;
};

// Masks a fraction of the tokens and trains the transformer to recover them.
// The mask id is the reserved embedding row (vocabulary size).
inline MlmResult mlm_pretrain(const std::vector<std::string>& raw_sentences,
                              const Vocabulary& vocab, const nn::TransformerSpec& spec,
                              const TrainConfig& cfg, double mask_rate = 0.15) {
  validate_train_config(cfg);
  if (!(mask_rate > 0.0) || mask_rate > 1.0)
    throw ConfigError("mlm_pretrain: mask rate must be in (0, 1], got " +
                      std::to_string(mask_rate) + " (empty mask set)");
  if (raw_sentences.empty()) throw DataError("mlm_pretrain: no sentences");

  std::vector<std::vector<int>> corpus;
  for (const auto& raw : raw_sentences) {
    std::vector<int> ids;
    for (const auto& t : tokenize_sentence(raw, vocab)) ids.push_back(vocab.id_for(t));
    corpus.push_back(std::move(ids));
  }
  const int mask_id = static_cast<int>(vocab.size());

  std::mt19937_64 rng(cfg.seed);
  nn::ParamSet ps;
  nn::add_transformer_params(ps, "encoder", vocab.size() + 1, spec, rng);
  nn::add_linear_params(ps, "mlm.head", static_cast<size_t>(spec.model_dim), vocab.size(), rng);

  std::vector<double> unit_weights(vocab.size(), 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  AdamState adam;
  double last_loss = 0.0;
  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  size_t cursor = 0;

  for (long iter = 1; iter <= cfg.max_iters; ++iter) {
    std::vector<int> ids;
    std::vector<int> targets;
    std::vector<int> lengths;
    std::vector<size_t> maskable;
    for (int b = 0; b < cfg.batch_size && b < static_cast<int>(corpus.size()); ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const auto& sent = corpus[order[cursor++]];
      lengths.push_back(static_cast<int>(sent.size()));
      for (int id : sent) {
        maskable.push_back(ids.size());
        ids.push_back(id);
        targets.push_back(id);
      }
    }
    nn::Tensor mask = nn::Tensor::zeros({ids.size()});
    long masked = 0;
    for (size_t i : maskable)
      if (coin(rng) < mask_rate) {
        mask[i] = 1.0;
        ids[i] = mask_id;
        ++masked;
      }
    if (masked == 0) {  // guarantee progress on tiny batches
      size_t i = maskable[static_cast<size_t>(rng() % maskable.size())];
      mask[i] = 1.0;
      ids[i] = mask_id;
    }

    nn::Graph g;
    nn::SeqBatch enc = nn::transformer_encode(g, ps, "encoder", ids, lengths, spec);
    nn::Var logits = nn::linear(g, enc.data, ps, "mlm.head");
    nn::Var loss = nn::wce_loss(logits, targets, unit_weights, mask);
    last_loss = loss.value().item();
    if (!std::isfinite(last_loss))
      throw InternalError("mlm_pretrain: non-finite loss at iteration " + std::to_string(iter));
    g.backward(loss);
    adam_step(ps, g.gradients(), adam, cfg.lr0);
  }

  MlmResult result;
  result.encoder = ps.subset("encoder.");
  result.full = std::move(ps);
  result.final_loss = last_loss;
  return result;
}

}  // namespace pausekit

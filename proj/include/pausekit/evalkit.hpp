// pausekit/evalkit.hpp

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

// Evaluation: the unbalanced F-score, last-subword precision/recall
// counting, threshold sweeps, filtered precision-recall curves and category
// confusion matrices.

#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pausekit/corpus.hpp"
#include "pausekit/models.hpp"

namespace pausekit {

// (1 + b^2) P R / (b^2 P + R); P = R = 0 is defined as 0.
inline double f_beta(double precision, double recall, double beta) {
  if (precision < 0.0 || precision > 1.0 || recall < 0.0 || recall > 1.0)
    throw ConfigError("f_beta: precision and recall must be in [0, 1]");
  if (!(beta > 0.0)) throw ConfigError("f_beta: beta must be positive");
  if (precision == 0.0 && recall == 0.0) return 0.0;
  double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

struct PrCounts {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0;  // 0 when no positives were predicted (flagged)
  double recall = 0.0;
  bool precision_defined = true;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool precision_defined = true;
};

struct SweepResult {
  double best_threshold = 0.0;
  double best_f = 0.0;
  PrCounts best_counts;
  std::vector<PrPoint> points;
};

namespace detail {

inline bool eligible(const Token& t, PauseKind kind) {
  // Counting follows the labeling rules: RPs only on the last subword of a
  // word, PIPs only on punctuation tokens.
  return kind == PauseKind::RP ? (t.is_word_final && !t.is_punct) : t.is_punct;
}

inline const std::vector<int>& position_labels(const LabeledSentence& s, PauseKind kind) {
  return kind == PauseKind::RP ? s.p_rp : s.p_pip;
}

}  // namespace detail

// Thresholded precision/recall over eligible positions of the whole eval
// set. `probabilities` holds one per-token vector per sentence.
inline PrCounts position_pr(const std::vector<std::vector<double>>& probabilities,
                            const std::vector<LabeledSentence>& sentences, double threshold,
                            PauseKind kind) {
  if (probabilities.size() != sentences.size())
    throw ConfigError("position_pr: probability/sentence count mismatch");
  PrCounts c;
  long positives = 0;
  for (size_t s = 0; s < sentences.size(); ++s) {
    const auto& probs = probabilities[s];
    const auto& sent = sentences[s];
    if (probs.size() != sent.tokens.size())
      throw ConfigError("position_pr: probability length mismatch in sentence " + sent.id);
    const auto& labels = detail::position_labels(sent, kind);
    for (size_t i = 0; i < probs.size(); ++i) {
      if (!detail::eligible(sent.tokens[i], kind)) continue;
      bool label = labels[i] == 1;
      bool pred = probs[i] >= threshold;
      if (label) ++positives;
      if (pred && label)
        ++c.tp;
      else if (pred && !label)
        ++c.fp;
      else if (!pred && label)
        ++c.fn;
    }
  }
  if (positives == 0)
    throw DataError("position_pr: recall undefined, no positive labels at eligible positions");
  if (c.tp + c.fp == 0) {
    c.precision = 0.0;
    c.precision_defined = false;
  } else {
    c.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  c.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return c;
}

// Sweeps the sorted unique predicted probabilities (capped at 1,000 evenly
// spaced quantiles) and returns the F_beta-optimal point; ties break toward
// higher precision, then toward the higher threshold.
inline SweepResult sweep_threshold(const std::vector<std::vector<double>>& probabilities,
                                   const std::vector<LabeledSentence>& sentences, double beta,
                                   PauseKind kind) {
  std::vector<double> candidates;
  for (size_t s = 0; s < sentences.size(); ++s)
    for (size_t i = 0; i < sentences[s].tokens.size(); ++i)
      if (detail::eligible(sentences[s].tokens[i], kind))
        candidates.push_back(probabilities.at(s).at(i));
  if (candidates.empty()) throw DataError("sweep_threshold: empty prediction set");
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.size() > 1000) {
    std::vector<double> quantiles;
    quantiles.reserve(1000);
    for (int q = 0; q < 1000; ++q) {
      size_t idx = static_cast<size_t>(
          std::llround(static_cast<double>(q) * static_cast<double>(candidates.size() - 1) / 999.0));
      quantiles.push_back(candidates[idx]);
    }
    quantiles.erase(std::unique(quantiles.begin(), quantiles.end()), quantiles.end());
    candidates = std::move(quantiles);
  }

  SweepResult result;
  bool first = true;
  for (double th : candidates) {
    PrCounts c = position_pr(probabilities, sentences, th, kind);
    PrPoint p{th, c.precision, c.recall, c.precision_defined};
    result.points.push_back(p);
    double f = f_beta(c.precision, c.recall, beta);
    bool better = first || f > result.best_f ||
                  (f == result.best_f && (c.precision > result.best_counts.precision ||
                                          (c.precision == result.best_counts.precision &&
                                           th > result.best_threshold)));
    if (better) {
      result.best_f = f;
      result.best_threshold = th;
      result.best_counts = c;
      first = false;
    }
  }
  return result;
}

// Keeps points with both precision and recall above 0.1 (flagged
// undefined-precision points are dropped), sorted by recall.
inline std::vector<PrPoint> pr_curve(const std::vector<PrPoint>& points) {
  std::vector<PrPoint> kept;
  for (const auto& p : points)
    if (p.precision_defined && p.precision > 0.1 && p.recall > 0.1) kept.push_back(p);
  std::stable_sort(kept.begin(), kept.end(),
                   [](const PrPoint& a, const PrPoint& b) { return a.recall < b.recall; });
  return kept;
}

// counts[label-1][prediction-1] over tokens where the label category is
// nonzero and the decision emits a pause of the same kind. Labeled pauses
// the model did not predict at all are excluded.
struct ConfusionMatrix {
  std::array<std::array<long, 3>, 3> counts{};
};

inline ConfusionMatrix category_confusion(const std::vector<std::vector<Decision>>& decisions,
                                          const std::vector<LabeledSentence>& sentences,
                                          PauseKind kind) {
  if (decisions.size() != sentences.size())
    throw ConfigError("category_confusion: decision/sentence count mismatch");
  ConfusionMatrix m;
  for (size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    const auto& dec = decisions[s];
    if (dec.size() != sent.tokens.size())
      throw ConfigError("category_confusion: decision length mismatch in sentence " + sent.id);
    const auto& cats = kind == PauseKind::RP ? sent.c_rp : sent.c_pip;
    for (size_t i = 0; i < dec.size(); ++i) {
      if (cats[i] == 0) continue;
      if (!dec[i].pause || dec[i].kind != kind) continue;
      if (dec[i].category < 1 || dec[i].category > 3)
        throw ConfigError("category_confusion: uncategorized decision cannot be tallied");
      ++m.counts[static_cast<size_t>(cats[i] - 1)][static_cast<size_t>(dec[i].category - 1)];
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Metrics report
// ---------------------------------------------------------------------------

struct TaskReport {
  std::string task;  // "rp" or "pip"
  double beta = 0.0;
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  std::vector<PrPoint> curve;
  bool has_confusion = false;
  ConfusionMatrix confusion;
};

inline nlohmann::json task_report_to_json(const TaskReport& r) {
  nlohmann::json j;
  j["task"] = r.task;
  j["beta"] = r.beta;
  j["threshold"] = r.threshold;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f"] = r.f;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve)
    curve.push_back({{"threshold", p.threshold},
                     {"precision", p.precision},
                     {"recall", p.recall}});
  j["pr_curve"] = std::move(curve);
  if (r.has_confusion) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.confusion.counts) rows.push_back(row);
    j["confusion"] = std::move(rows);
  }
  return j;
}

inline void write_metrics_report(const std::string& path, const std::vector<TaskReport>& tasks) {
  nlohmann::json j;
  j["format"] = "pausekit-metrics";
  j["version"] = 1;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : tasks) arr.push_back(task_report_to_json(t));
  j["tasks"] = std::move(arr);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open metrics report for writing: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace pausekit

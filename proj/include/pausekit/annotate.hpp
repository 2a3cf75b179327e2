// pausekit/annotate.hpp

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

// Text annotation: tokenize, run the model, apply the decision rule and
// insert categorized pause marks (sp1/sp2/sp3; position-only models insert
// an uncategorized "sp") after the corresponding tokens.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pausekit/models.hpp"
#include "pausekit/textnorm.hpp"

namespace pausekit {

struct AnnotatedToken {
  std::string text;
  bool has_pause = false;
  PauseKind kind = PauseKind::RP;
  int category = 0;  // 0 = uncategorized mark "sp"
};

inline std::string pause_mark(const AnnotatedToken& t) {
  if (!t.has_pause) return "";
  return t.category == 0 ? "sp" : "sp" + std::to_string(t.category);
}

inline std::vector<AnnotatedToken> annotate_tokens(const PauseModel& model,
                                                   const Vocabulary& vocab,
                                                   const std::vector<Token>& tokens,
                                                   const std::optional<std::string>& speaker,
                                                   double rp_threshold, double pip_threshold) {
  PredictionOutput output = predict_sentence(model, vocab, tokens, speaker);
  std::vector<Decision> decisions = decide(output, tokens, rp_threshold, pip_threshold);

  // RP decisions with no following word are suppressed.
  int last_word_unit = -1;
  for (const auto& t : tokens)
    if (!t.is_punct) last_word_unit = std::max(last_word_unit, t.word_index);

  std::vector<AnnotatedToken> out;
  out.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    AnnotatedToken a;
    a.text = tokens[i].text;
    if (decisions[i].pause) {
      bool suppressed = decisions[i].kind == PauseKind::RP &&
                        tokens[i].word_index >= last_word_unit;
      if (!suppressed) {
        a.has_pause = true;
        a.kind = decisions[i].kind;
        a.category = decisions[i].category;
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

inline std::vector<AnnotatedToken> annotate_sentence(const PauseModel& model,
                                                     const Vocabulary& vocab,
                                                     const std::string& raw,
                                                     const std::optional<std::string>& speaker,
                                                     double rp_threshold, double pip_threshold) {
  return annotate_tokens(model, vocab, tokenize_sentence(raw, vocab), speaker, rp_threshold,
                         pip_threshold);
}

// One line per sentence: token texts with pause marks inline.
inline std::string render_annotated(const std::vector<AnnotatedToken>& tokens) {
  std::string line;
  for (const auto& t : tokens) {
    if (!line.empty()) line += " ";
    line += t.text;
    std::string mark = pause_mark(t);
    if (!mark.empty()) line += " " + mark;
  }
  return line;
}

}  // namespace pausekit

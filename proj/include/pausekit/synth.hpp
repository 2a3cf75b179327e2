// pausekit/synth.hpp

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

// Synthetic-corpus generation for controlled experiments. Each speaker has
// a deterministic RP rule and a fixed category per pause kind; word timings
// are computed so the implied gaps reproduce exactly the intended events
// under the ingestion thresholds and the default categorizer.

#pragma once

#include <cstdint>
#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "pausekit/corpus.hpp"

namespace pausekit {

struct SyntheticSpeakerStyle {
  std::string speaker;
  enum class RpRule { EveryNthWord, TriggerWords };
  RpRule rule = RpRule::EveryNthWord;
  // EveryNthWord: RP after the j-th word of a clause (1-indexed, clauses
  // reset at punctuation) when j mod n == phase.
  int n = 3;
  int phase = 0;
  // TriggerWords: RP after every occurrence of a trigger word.
  std::vector<std::string> trigger_words;
  int rp_category = 1;
  int pip_category = 1;
  double pip_drop_rate = 0.0;  // probability a punctuation mark gets no pause
};

struct SynthConfig {
  int n_sentences = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> grammar_words;
  int min_words = 8;
  int max_words = 14;
  double comma_prob = 0.2;
};

struct SynthUtterance {
  std::string id;
  std::string speaker;
  std::string transcript;
  std::vector<AlignedWord> words;
};

// Words used when no grammar is supplied.
inline std::vector<std::string> default_grammar_words() {
  return {"time",  "way",   "day",   "hand",  "part",   "land",  "road",  "tree",
          "stone", "river", "light", "wind",  "voice",  "house", "field", "night",
          "morning", "water", "friend", "story", "song", "door",  "fire",  "hill"};
}

// A mutually contradictory roster: every word is a trigger for roughly half
// of the speakers (between 3/8 and 5/8 of the roster, drawn from the seed),
// so identical text carries conflicting RP labels across speakers and a
// speaker-blind model is capped near the base rate.
inline std::vector<SyntheticSpeakerStyle> contradictory_styles(
    int n_speakers, const std::vector<std::string>& grammar_words, double pip_drop_rate,
    std::uint64_t seed = 0) {
  if (n_speakers < 2) throw ConfigError("contradictory_styles: need at least two speakers");
  std::mt19937_64 rng(seed ^ 0xc2b2ae3d27d4eb4fULL);
  int lo = std::max(1, 3 * n_speakers / 8);
  int hi = std::max(lo + 1, 5 * n_speakers / 8);

  std::vector<SyntheticSpeakerStyle> styles(static_cast<size_t>(n_speakers));
  for (int k = 0; k < n_speakers; ++k) {
    styles[static_cast<size_t>(k)].speaker = "spk" + std::to_string(k);
    styles[static_cast<size_t>(k)].rule = SyntheticSpeakerStyle::RpRule::TriggerWords;
    styles[static_cast<size_t>(k)].rp_category = k % 3 + 1;
    styles[static_cast<size_t>(k)].pip_category = (k + 1) % 3 + 1;
    styles[static_cast<size_t>(k)].pip_drop_rate = pip_drop_rate;
  }
  std::vector<int> roster(static_cast<size_t>(n_speakers));
  std::iota(roster.begin(), roster.end(), 0);
  for (const auto& word : grammar_words) {
    int count = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    std::shuffle(roster.begin(), roster.end(), rng);
    for (int j = 0; j < count; ++j)
      styles[static_cast<size_t>(roster[static_cast<size_t>(j)])].trigger_words.push_back(word);
  }
  return styles;
}

namespace detail {

// Gap ranges per category sit strictly inside the default categorizer bands
// and above both pause thresholds.
inline long category_gap(int category, std::mt19937_64& rng) {
  long lo = 0, hi = 0;
  switch (category) {
    case 1: lo = 100; hi = 250; break;
    case 2: lo = 350; hi = 650; break;
    case 3: lo = 750; hi = 1100; break;
    default: throw ConfigError("category_gap: category must be 1..3");
  }
  return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline long no_pause_gap(std::mt19937_64& rng) { return 10 * static_cast<long>(rng() % 3); }

}  // namespace detail

inline std::vector<SynthUtterance> synth_corpus(const std::vector<SyntheticSpeakerStyle>& styles,
                                                const SynthConfig& cfg) {
  if (styles.empty()) throw ConfigError("synth_corpus: styles must be non-empty");
  std::vector<std::string> grammar =
      cfg.grammar_words.empty() ? default_grammar_words() : cfg.grammar_words;
  if (grammar.size() < 4)
    throw ConfigError("synth_corpus: vocabulary too small for the grammar");
  if (cfg.min_words < 2 || cfg.max_words < cfg.min_words)
    throw ConfigError("synth_corpus: bad word-count range");

  std::vector<std::unordered_set<std::string>> trigger_sets(styles.size());
  for (size_t k = 0; k < styles.size(); ++k)
    trigger_sets[k].insert(styles[k].trigger_words.begin(), styles[k].trigger_words.end());

  std::vector<SynthUtterance> utterances;
  utterances.reserve(static_cast<size_t>(cfg.n_sentences));
  for (int i = 0; i < cfg.n_sentences; ++i) {
    // Each sentence derives its own stream, so a sentence is a pure function
    // of (index, seed).
    std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1)));
    const SyntheticSpeakerStyle& style = styles[static_cast<size_t>(i) % styles.size()];
    const auto& triggers = trigger_sets[static_cast<size_t>(i) % styles.size()];

    int n_words = cfg.min_words +
                  static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.max_words -
                                                                      cfg.min_words + 1));
    std::vector<std::string> words(static_cast<size_t>(n_words));
    for (auto& w : words) w = grammar[rng() % grammar.size()];
    std::vector<bool> comma_after(static_cast<size_t>(n_words), false);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int j = 0; j + 1 < n_words; ++j) comma_after[static_cast<size_t>(j)] = coin(rng) < cfg.comma_prob;

    SynthUtterance u;
    u.id = "utt" + std::to_string(i);
    u.speaker = style.speaker;

    std::string transcript;
    long t = 0;
    int clause_pos = 0;
    for (int j = 0; j < n_words; ++j) {
      ++clause_pos;
      const std::string& w = words[static_cast<size_t>(j)];
      if (!transcript.empty()) transcript += " ";
      transcript += w;

      long dur = 150 + static_cast<long>(rng() % 251);
      AlignedWord aw;
      aw.word = w;
      aw.start_ms = t;
      aw.end_ms = t + dur;
      u.words.push_back(aw);

      bool last = j + 1 == n_words;
      long gap;
      if (last) {
        transcript += ".";
        gap = 0;
      } else if (comma_after[static_cast<size_t>(j)]) {
        transcript += ",";
        bool pip = coin(rng) >= style.pip_drop_rate;
        gap = pip ? detail::category_gap(style.pip_category, rng) : detail::no_pause_gap(rng);
        clause_pos = 0;
      } else {
        bool rp = style.rule == SyntheticSpeakerStyle::RpRule::EveryNthWord
                      ? clause_pos % style.n == style.phase
                      : triggers.count(w) > 0;
        gap = rp ? detail::category_gap(style.rp_category, rng) : detail::no_pause_gap(rng);
      }
      t = aw.end_ms + gap;
    }
    u.transcript = std::move(transcript);
    utterances.push_back(std::move(u));
  }
  return utterances;
}

// Vocabulary covering a synthetic corpus: unk token first, then punctuation
// and the grammar words as whole pieces.
inline Vocabulary synth_vocabulary(const std::vector<std::string>& grammar_words) {
  std::vector<std::string> entries = {"[UNK]", ".", ",", ";", ":", "!", "?"};
  entries.insert(entries.end(), grammar_words.begin(), grammar_words.end());
  return Vocabulary(std::move(entries), "[UNK]");
}

}  // namespace pausekit

// pausekit/textnorm.hpp

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

// Text normalization and greedy longest-match subword tokenization.
// Words are lowercased and punctuation marks become standalone units; any
// run of two or more consecutive punctuation units keeps only its first
// mark. Continuing subwords carry a "##" prefix.

#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pausekit/error.hpp"

namespace pausekit {

inline constexpr std::string_view kContinuationPrefix = "##";

// Marks treated as standalone punctuation. Hyphens stay inside words.
inline bool is_punct_char(char c) {
  switch (c) {
    case '.':
    case ',':
    case ';':
    case ':':
    case '!':
    case '?':
    case '"':
    case '\'':
    case '(':
    case ')':
      return true;
    default:
      return false;
  }
}

// One normalized word or punctuation mark, before subwording.
struct SentenceUnit {
  std::string text;
  bool is_punct = false;
};

// A subword or punctuation token. Continuation tokens store their text with
// the "##" prefix already applied (the canonical rendering).
struct Token {
  std::string text;
  bool is_continuation = false;
  bool is_punct = false;
  int word_index = 0;  // index of the source word/punctuation unit
  bool is_word_final = false;
};

class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> entries, std::string unk_token,
             int max_word_chars = 100)
      : entries_(std::move(entries)),
        unk_(std::move(unk_token)),
        max_word_chars_(max_word_chars) {
    if (max_word_chars_ <= 0) throw ConfigError("max_word_chars must be positive");
    for (size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].empty()) throw ConfigError("vocabulary entry " + std::to_string(i) + " is empty");
      if (!index_.emplace(entries_[i], static_cast<int>(i)).second)
        throw ConfigError("duplicate vocabulary entry: " + entries_[i]);
      max_entry_chars_ = std::max(max_entry_chars_, entries_[i].size());
    }
    auto it = index_.find(unk_);
    if (it == index_.end()) throw ConfigError("unk token '" + unk_ + "' not in vocabulary");
    unk_id_ = it->second;
  }

  // Plain-text vocabulary: one entry per line, continuation pieces carry the
  // "##" prefix, first line is the unk token.
  static Vocabulary load(const std::string& path, int max_word_chars = 100) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open vocabulary file: " + path);
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      entries.push_back(line);
    }
    if (entries.empty()) throw ParseError("vocabulary file is empty: " + path);
    std::string unk = entries.front();
    return Vocabulary(std::move(entries), std::move(unk), max_word_chars);
  }

  size_t size() const { return entries_.size(); }
  const std::vector<std::string>& entries() const { return entries_; }
  const std::string& unk_token() const { return unk_; }
  int unk_id() const { return unk_id_; }
  int max_word_chars() const { return max_word_chars_; }
  size_t max_entry_chars() const { return max_entry_chars_; }

  bool contains(const std::string& piece) const { return index_.count(piece) > 0; }

  // Index of a piece, or -1 when absent.
  int index_of(const std::string& piece) const {
    auto it = index_.find(piece);
    return it == index_.end() ? -1 : it->second;
  }

  // Embedding id for a token; unknown text (e.g. punctuation outside the
  // vocabulary) falls back to the unk id.
  int id_for(const Token& token) const {
    int id = index_of(token.text);
    return id < 0 ? unk_id_ : id;
  }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
  std::string unk_;
  int unk_id_ = 0;
  int max_word_chars_ = 100;
  size_t max_entry_chars_ = 0;
};

// Lowercases words, splits punctuation into standalone units and collapses
// every run of 2+ consecutive punctuation units to its first mark.
inline std::vector<SentenceUnit> normalize_sentence(const std::string& raw) {
  std::vector<SentenceUnit> units;
  std::string word;
  auto flush_word = [&]() {
    if (!word.empty()) {
      units.push_back({word, false});
      word.clear();
    }
  };
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush_word();
    } else if (is_punct_char(c)) {
      flush_word();
      units.push_back({std::string(1, c), true});
    } else {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush_word();

  // Collapse punctuation runs, keeping the first mark of each run.
  std::vector<SentenceUnit> collapsed;
  for (auto& u : units) {
    if (u.is_punct && !collapsed.empty() && collapsed.back().is_punct) continue;
    collapsed.push_back(std::move(u));
  }
  if (collapsed.empty()) throw DataError("sentence is empty after normalization");
  return collapsed;
}

// Greedy longest-prefix matching against the vocabulary; non-first pieces
// match "##"-prefixed entries. Unmatchable or over-long words collapse to a
// single unk token.
inline std::vector<Token> wordpiece_tokenize(const std::string& word, const Vocabulary& vocab) {
  if (word.empty()) throw DataError("cannot tokenize an empty word");
  auto unk = [&]() {
    Token t;
    t.text = vocab.unk_token();
    t.is_word_final = true;
    return std::vector<Token>{t};
  };
  if (word.size() > static_cast<size_t>(vocab.max_word_chars())) return unk();

  std::vector<Token> pieces;
  size_t pos = 0;
  while (pos < word.size()) {
    const bool first = pos == 0;
    size_t longest = std::min(word.size() - pos, vocab.max_entry_chars());
    size_t match_len = 0;
    std::string match_key;
    for (size_t len = longest; len >= 1; --len) {
      std::string key = first ? word.substr(pos, len)
                              : std::string(kContinuationPrefix) + word.substr(pos, len);
      if (vocab.contains(key)) {
        match_len = len;
        match_key = std::move(key);
        break;
      }
    }
    if (match_len == 0) return unk();
    Token t;
    t.text = std::move(match_key);
    t.is_continuation = !first;
    pieces.push_back(std::move(t));
    pos += match_len;
  }
  pieces.back().is_word_final = true;
  return pieces;
}

// Full sentence pre-processing: normalization followed by subwording. Word
// and punctuation units share one running word_index.
inline std::vector<Token> tokenize_units(const std::vector<SentenceUnit>& units,
                                         const Vocabulary& vocab) {
  std::vector<Token> tokens;
  for (size_t u = 0; u < units.size(); ++u) {
    if (units[u].is_punct) {
      Token t;
      t.text = units[u].text;
      t.is_punct = true;
      t.is_word_final = true;
      t.word_index = static_cast<int>(u);
      tokens.push_back(std::move(t));
    } else {
      auto pieces = wordpiece_tokenize(units[u].text, vocab);
      for (auto& p : pieces) {
        p.word_index = static_cast<int>(u);
        tokens.push_back(std::move(p));
      }
    }
  }
  return tokens;
}

inline std::vector<Token> tokenize_sentence(const std::string& raw, const Vocabulary& vocab) {
  return tokenize_units(normalize_sentence(raw), vocab);
}

}  // namespace pausekit

// tests/test_textnorm.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pausekit/textnorm.hpp"

using namespace pausekit;

namespace {

Vocabulary small_vocab() {
  return Vocabulary({"[UNK]", "wait", "##ing", "cat", "hello", "world", "he", "said", "no",
                     "abc", "un", "##expect", "##ed", "w", "##a", "##i", "##t", "##n", "##g"},
                    "[UNK]");
}

std::vector<std::string> unit_texts(const std::vector<SentenceUnit>& units) {
  std::vector<std::string> out;
  for (const auto& u : units) out.push_back(u.text);
  return out;
}

}  // namespace

TEST_CASE("normalize_sentence lowercases and collapses punctuation runs") {
  auto units = normalize_sentence("Hello!! world");
  REQUIRE(unit_texts(units) == std::vector<std::string>{"hello", "!", "world"});
  CHECK(units[1].is_punct);
  CHECK_FALSE(units[0].is_punct);
}

TEST_CASE("normalize_sentence identity case") {
  auto units = normalize_sentence("abc");
  REQUIRE(unit_texts(units) == std::vector<std::string>{"abc"});
}

TEST_CASE("normalize_sentence collapses runs across quotes") {
  auto units = normalize_sentence("He said, \"No?!\"");
  REQUIRE(unit_texts(units) == std::vector<std::string>{"he", "said", ",", "no", "?"});
}

TEST_CASE("normalize_sentence keeps hyphens inside words") {
  auto units = normalize_sentence("well-known fact");
  REQUIRE(unit_texts(units) == std::vector<std::string>{"well-known", "fact"});
}

TEST_CASE("normalize_sentence rejects empty input") {
  CHECK_THROWS_AS(normalize_sentence(""), DataError);
  CHECK_THROWS_AS(normalize_sentence("   \t "), DataError);
}

TEST_CASE("wordpiece_tokenize greedy longest match") {
  auto vocab = small_vocab();
  auto pieces = wordpiece_tokenize("waiting", vocab);
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0].text == "wait");
  CHECK_FALSE(pieces[0].is_continuation);
  CHECK_FALSE(pieces[0].is_word_final);
  CHECK(pieces[1].text == "##ing");
  CHECK(pieces[1].is_continuation);
  CHECK(pieces[1].is_word_final);
}

TEST_CASE("wordpiece_tokenize whole-word hit") {
  auto pieces = wordpiece_tokenize("cat", small_vocab());
  REQUIRE(pieces.size() == 1);
  CHECK(pieces[0].text == "cat");
  CHECK(pieces[0].is_word_final);
  CHECK_FALSE(pieces[0].is_continuation);
}

TEST_CASE("wordpiece_tokenize unk fallback") {
  auto pieces = wordpiece_tokenize("qzx", small_vocab());
  REQUIRE(pieces.size() == 1);
  CHECK(pieces[0].text == "[UNK]");
  CHECK(pieces[0].is_word_final);

  // over-long words also collapse to unk
  Vocabulary tiny({"[UNK]", "a", "##a"}, "[UNK]", /*max_word_chars=*/4);
  auto over = wordpiece_tokenize("aaaaaaa", tiny);
  REQUIRE(over.size() == 1);
  CHECK(over[0].text == "[UNK]");
}

TEST_CASE("tokenize_sentence composes normalization and subwording") {
  auto vocab = small_vocab();
  auto tokens = tokenize_sentence("Waiting, he said NO!!", vocab);
  std::vector<std::string> texts;
  for (const auto& t : tokens) texts.push_back(t.text);
  REQUIRE(texts == std::vector<std::string>{"wait", "##ing", ",", "he", "said", "no", "!"});
  CHECK(tokens[0].word_index == 0);
  CHECK(tokens[1].word_index == 0);
  CHECK(tokens[2].word_index == 1);
  CHECK(tokens[2].is_punct);
  CHECK(tokens[2].is_word_final);
  CHECK(tokens[6].is_punct);

  CHECK_THROWS_AS(tokenize_sentence("", vocab), DataError);

  auto single = tokenize_sentence("cat", vocab);
  REQUIRE(single.size() == 1);
  CHECK(single[0].is_word_final);
}

TEST_CASE("token invariants hold for every tokenization") {
  auto vocab = small_vocab();
  for (const char* raw : {"Waiting, he said NO!!", "hello world", "un-expected cat...",
                          "\"Hello\" (world)?!", "abc waiting waiting"}) {
    auto tokens = tokenize_sentence(raw, vocab);
    for (size_t i = 0; i < tokens.size(); ++i) {
      const Token& t = tokens[i];
      CHECK_FALSE(t.text.empty());
      if (t.is_punct) {
        CHECK_FALSE(t.is_continuation);
        CHECK(t.is_word_final);
      }
      bool last_of_unit = i + 1 == tokens.size() || tokens[i + 1].word_index != t.word_index;
      CHECK(t.is_word_final == last_of_unit);
      if (i + 1 < tokens.size())
        CHECK((tokens[i + 1].word_index == t.word_index ||
               tokens[i + 1].word_index == t.word_index + 1));
    }
    // word-final non-punct token count equals word-unit count
    auto units = normalize_sentence(raw);
    long words = 0;
    for (const auto& u : units)
      if (!u.is_punct) ++words;
    long finals = 0;
    for (const auto& t : tokens)
      if (t.is_word_final && !t.is_punct) ++finals;
    CHECK(words == finals);
  }
}

TEST_CASE("round-trip with a character-complete vocabulary") {
  // With every character present as first-piece and continuation entries,
  // stripping "##" and re-joining continuations reproduces the words.
  std::vector<std::string> entries = {"[UNK]"};
  for (char c = 'a'; c <= 'z'; ++c) {
    entries.push_back(std::string(1, c));
    entries.push_back("##" + std::string(1, c));
  }
  Vocabulary vocab(entries, "[UNK]");
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::string raw;
    int n_words = 1 + static_cast<int>(rng() % 5);
    std::vector<std::string> words;
    for (int w = 0; w < n_words; ++w) {
      std::string word;
      int len = 1 + static_cast<int>(rng() % 8);
      for (int c = 0; c < len; ++c) word.push_back('a' + static_cast<char>(rng() % 26));
      words.push_back(word);
      if (!raw.empty()) raw += " ";
      raw += word;
    }
    auto tokens = tokenize_sentence(raw, vocab);
    std::vector<std::string> rebuilt;
    for (const auto& t : tokens) {
      std::string piece = t.is_continuation ? t.text.substr(2) : t.text;
      if (t.is_continuation)
        rebuilt.back() += piece;
      else
        rebuilt.push_back(piece);
    }
    CHECK(rebuilt == words);

    // determinism
    auto again = tokenize_sentence(raw, vocab);
    REQUIRE(again.size() == tokens.size());
    for (size_t i = 0; i < tokens.size(); ++i) CHECK(again[i].text == tokens[i].text);
  }
}

TEST_CASE("vocabulary loading and lookup") {
  std::string path = std::string(PAUSEKIT_TEST_DATA_DIR) + "/vocab_small.txt";
  auto vocab = Vocabulary::load(path);
  CHECK(vocab.unk_token() == "[UNK]");
  CHECK(vocab.unk_id() == 0);
  CHECK(vocab.contains("##ing"));
  CHECK(vocab.index_of("wait") > 0);
  CHECK(vocab.index_of("absent-piece") == -1);

  Token punct;
  punct.text = ",";
  punct.is_punct = true;
  CHECK(vocab.id_for(punct) == vocab.index_of(","));

  CHECK_THROWS_AS(Vocabulary({"a", "a"}, "a"), ConfigError);
  CHECK_THROWS_AS(Vocabulary({"a"}, "missing"), ConfigError);
}

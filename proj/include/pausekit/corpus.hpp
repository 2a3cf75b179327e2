// pausekit/corpus.hpp

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

// Corpus construction from word-level alignment files: silent gaps over
// 30 ms at punctuation marks become PIPs, gaps over 50 ms at word
// transitions without punctuation become RPs, and both are labeled on the
// token stream (position on the last subword of a word, category from the
// duration categorizer).

#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pausekit/error.hpp"
#include "pausekit/pausecat.hpp"
#include "pausekit/textnorm.hpp"

namespace pausekit {

inline constexpr long kPipThresholdMs = 30;  // gaps must exceed this at punctuation
inline constexpr long kRpThresholdMs = 50;   // gaps must exceed this elsewhere

struct AlignedWord {
  std::string word;  // normalized (lowercase) spoken form
  long start_ms = 0;
  long end_ms = 0;
};

struct ParsedAlignment {
  std::string speaker;
  std::string transcript;
  std::vector<AlignedWord> words;
};

enum class PauseKind { RP, PIP };

struct PauseEvent {
  int after_word_index = 0;  // index into the spoken-word sequence
  long duration_ms = 0;
  PauseKind kind = PauseKind::RP;
  int category = 0;  // 0 until categorized by build_labels
};

struct LabeledSentence {
  std::string id;
  std::string speaker;
  std::vector<Token> tokens;
  std::vector<int> p_rp;   // binary
  std::vector<int> c_rp;   // categories {0..3}
  std::vector<int> p_pip;  // binary
  std::vector<int> c_pip;  // categories {0..3}
};

struct CorpusStats {
  long sentences = 0;
  long tokens = 0;
  long punctuation = 0;
  long speakers = 0;
  long rp_counts[4] = {0, 0, 0, 0};   // index by category, [0] unused
  long pip_counts[4] = {0, 0, 0, 0};
  long rp_total = 0;
  long pip_total = 0;
};

// ---------------------------------------------------------------------------
// Alignment files
//
// UTF-8 text. Line 1 "#speaker<TAB><id>", line 2 "#text<TAB><raw transcript>",
// then one row per spoken word: "<word><TAB><start_ms><TAB><end_ms>" in
// temporal order.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t pos = 0;
  while (true) {
    size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return fields;
}

inline long parse_ms(const std::string& s, int line_no, const char* what) {
  try {
    size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " value '" + s + "'");
  }
}

}  // namespace detail

inline ParsedAlignment parse_alignment(std::istream& in) {
  ParsedAlignment out;
  std::string line;
  int line_no = 0;

  auto next_line = [&]() {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    return true;
  };

  if (!next_line()) throw ParseError("line 1: missing '#speaker' header");
  auto f = detail::split_tabs(line);
  if (f.size() != 2 || f[0] != "#speaker" || f[1].empty())
    throw ParseError("line 1: expected '#speaker<TAB><id>'");
  out.speaker = f[1];

  if (!next_line()) throw ParseError("line 2: missing '#text' header");
  f = detail::split_tabs(line);
  if (f.size() != 2 || f[0] != "#text" || f[1].empty())
    throw ParseError("line 2: expected '#text<TAB><raw transcript>'");
  out.transcript = f[1];

  while (next_line()) {
    if (line.empty()) continue;
    f = detail::split_tabs(line);
    if (f.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected '<word>\\t<start>\\t<end>'");
    AlignedWord w;
    w.word = f[0];
    if (w.word.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty word");
    w.start_ms = detail::parse_ms(f[1], line_no, "start_ms");
    w.end_ms = detail::parse_ms(f[2], line_no, "end_ms");
    if (w.start_ms < 0)
      throw ParseError("line " + std::to_string(line_no) + ": negative start_ms");
    if (w.end_ms <= w.start_ms)
      throw ParseError("line " + std::to_string(line_no) + ": end_ms must exceed start_ms");
    if (!out.words.empty() && w.start_ms < out.words.back().end_ms)
      throw ParseError("line " + std::to_string(line_no) +
                       ": start_ms precedes the previous word's end_ms");
    out.words.push_back(std::move(w));
  }
  if (out.words.empty()) throw ParseError("alignment file has no word rows");
  return out;
}

inline ParsedAlignment parse_alignment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open alignment file: " + path);
  try {
    return parse_alignment(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_alignment_file(std::ostream& out, const std::string& speaker,
                                 const std::string& transcript,
                                 const std::vector<AlignedWord>& words) {
  out << "#speaker\t" << speaker << "\n";
  out << "#text\t" << transcript << "\n";
  for (const auto& w : words) out << w.word << "\t" << w.start_ms << "\t" << w.end_ms << "\n";
}

// ---------------------------------------------------------------------------
// Transcript matching and pause extraction
// ---------------------------------------------------------------------------

// Matches spoken words 1:1, in order, against the transcript's normalized
// word units and reports which spoken words are followed by punctuation.
// Any mismatch aborts the utterance.
inline std::vector<bool> match_transcript(const std::vector<SentenceUnit>& units,
                                          const std::vector<AlignedWord>& spoken) {
  std::vector<bool> punct_after(spoken.size(), false);
  size_t k = 0;
  for (size_t u = 0; u < units.size(); ++u) {
    if (units[u].is_punct) {
      if (k > 0) punct_after[k - 1] = true;
      continue;
    }
    if (k >= spoken.size())
      throw DataError("alignment mismatch: transcript word '" + units[u].text +
                      "' has no spoken counterpart");
    if (units[u].text != spoken[k].word)
      throw DataError("alignment mismatch: transcript word '" + units[u].text +
                      "' vs spoken word '" + spoken[k].word + "' at word " + std::to_string(k));
    ++k;
  }
  if (k != spoken.size())
    throw DataError("alignment mismatch: " + std::to_string(spoken.size() - k) +
                    " spoken word(s) missing from the transcript");
  return punct_after;
}

// Gaps between consecutive words: a PIP when punctuation follows the left
// word and the gap exceeds 30 ms, an RP when no punctuation follows and the
// gap exceeds 50 ms. Other gaps produce nothing.
inline std::vector<PauseEvent> extract_pauses(const std::vector<AlignedWord>& words,
                                              const std::vector<bool>& punct_after) {
  if (punct_after.size() != words.size())
    throw ConfigError("extract_pauses: punct_after size does not match word count");
  std::vector<PauseEvent> events;
  for (size_t k = 0; k + 1 < words.size(); ++k) {
    long gap = words[k + 1].start_ms - words[k].end_ms;
    PauseEvent e;
    e.after_word_index = static_cast<int>(k);
    e.duration_ms = gap;
    if (punct_after[k]) {
      if (gap > kPipThresholdMs) {
        e.kind = PauseKind::PIP;
        events.push_back(e);
      }
    } else {
      if (gap > kRpThresholdMs) {
        e.kind = PauseKind::RP;
        events.push_back(e);
      }
    }
  }
  return events;
}

// ---------------------------------------------------------------------------
// Label building
// ---------------------------------------------------------------------------

// RP events label the word-final subword of the word preceding the gap; PIP
// events label the punctuation token following that word. Sentences without
// events keep all-zero label vectors.
inline LabeledSentence build_labels(const std::string& id, const std::string& speaker,
                                    const std::vector<Token>& tokens,
                                    const std::vector<PauseEvent>& events,
                                    const DurationCategorizer& categorizer) {
  LabeledSentence s;
  s.id = id;
  s.speaker = speaker;
  s.tokens = tokens;
  s.p_rp.assign(tokens.size(), 0);
  s.c_rp.assign(tokens.size(), 0);
  s.p_pip.assign(tokens.size(), 0);
  s.c_pip.assign(tokens.size(), 0);

  // Unit index (word_index) of each spoken word, and the final-subword token
  // position of every unit.
  int max_unit = tokens.empty() ? -1 : tokens.back().word_index;
  std::vector<int> unit_last_token(max_unit + 1, -1);
  std::vector<bool> unit_is_punct(max_unit + 1, false);
  for (size_t i = 0; i < tokens.size(); ++i) {
    unit_last_token[tokens[i].word_index] = static_cast<int>(i);
    if (tokens[i].is_punct) unit_is_punct[tokens[i].word_index] = true;
  }
  std::vector<int> word_units;  // spoken-word index -> unit index
  for (int u = 0; u <= max_unit; ++u)
    if (!unit_is_punct[u]) word_units.push_back(u);

  for (const auto& e : events) {
    if (e.after_word_index < 0 || e.after_word_index >= static_cast<int>(word_units.size()))
      throw DataError("build_labels: event references spoken word " +
                      std::to_string(e.after_word_index) + " outside the sentence");
    int unit = word_units[e.after_word_index];
    bool punct_follows =
        unit + 1 <= max_unit && unit_is_punct[unit + 1];
    int category = categorize(static_cast<double>(e.duration_ms), categorizer);
    if (e.kind == PauseKind::PIP) {
      if (!punct_follows)
        throw DataError("build_labels: PIP event after word " +
                        std::to_string(e.after_word_index) + " has no punctuation token");
      int pos = unit_last_token[unit + 1];
      s.p_pip[pos] = 1;
      s.c_pip[pos] = category;
    } else {
      if (punct_follows)
        throw DataError("build_labels: RP event after word " +
                        std::to_string(e.after_word_index) + " lands at a punctuation mark");
      int pos = unit_last_token[unit];
      s.p_rp[pos] = 1;
      s.c_rp[pos] = category;
    }
  }
  return s;
}

// Checks the label-position invariants of a LabeledSentence.
inline void validate_labels(const LabeledSentence& s) {
  size_t n = s.tokens.size();
  if (s.p_rp.size() != n || s.c_rp.size() != n || s.p_pip.size() != n || s.c_pip.size() != n)
    throw InternalError("label vectors do not match token count in sentence " + s.id);
  for (size_t i = 0; i < n; ++i) {
    const Token& t = s.tokens[i];
    if (s.p_rp[i] == 1 && (!t.is_word_final || t.is_punct))
      throw InternalError("p_rp set off the last subword in sentence " + s.id);
    if (s.p_pip[i] == 1 && !t.is_punct)
      throw InternalError("p_pip set on a non-punctuation token in sentence " + s.id);
    if ((s.c_rp[i] != 0) != (s.p_rp[i] == 1) || (s.c_pip[i] != 0) != (s.p_pip[i] == 1))
      throw InternalError("category/position labels disagree in sentence " + s.id);
    if (s.c_rp[i] < 0 || s.c_rp[i] > 3 || s.c_pip[i] < 0 || s.c_pip[i] > 3)
      throw InternalError("category out of range in sentence " + s.id);
  }
}

// Full per-utterance pipeline: tokenize the transcript, match it against the
// spoken words, extract pauses and build labels.
inline LabeledSentence ingest_utterance(const std::string& id, const ParsedAlignment& parsed,
                                        const Vocabulary& vocab,
                                        const DurationCategorizer& categorizer) {
  auto units = normalize_sentence(parsed.transcript);
  auto punct_after = match_transcript(units, parsed.words);
  auto events = extract_pauses(parsed.words, punct_after);
  auto tokens = tokenize_units(units, vocab);
  auto sentence = build_labels(id, parsed.speaker, tokens, events, categorizer);
  validate_labels(sentence);
  return sentence;
}

inline CorpusStats compute_stats(const std::vector<LabeledSentence>& dataset) {
  CorpusStats st;
  std::set<std::string> speakers;
  for (const auto& s : dataset) {
    ++st.sentences;
    st.tokens += static_cast<long>(s.tokens.size());
    speakers.insert(s.speaker);
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      if (s.tokens[i].is_punct) ++st.punctuation;
      if (s.c_rp[i] > 0) {
        ++st.rp_counts[s.c_rp[i]];
        ++st.rp_total;
      }
      if (s.c_pip[i] > 0) {
        ++st.pip_counts[s.c_pip[i]];
        ++st.pip_total;
      }
    }
  }
  st.speakers = static_cast<long>(speakers.size());
  return st;
}

// ---------------------------------------------------------------------------
// Dataset files: JSON lines with a version header on line 1.
// ---------------------------------------------------------------------------

inline constexpr const char* kDatasetFormat = "pausekit-dataset";
inline constexpr int kDatasetVersion = 1;

inline nlohmann::json sentence_to_json(const LabeledSentence& s) {
  nlohmann::json rec;
  rec["id"] = s.id;
  rec["speaker"] = s.speaker;
  nlohmann::json toks = nlohmann::json::array();
  for (const auto& t : s.tokens) {
    toks.push_back({{"text", t.text}, {"cont", t.is_continuation}, {"punct", t.is_punct}});
  }
  rec["tokens"] = std::move(toks);
  rec["p_rp"] = s.p_rp;
  rec["c_rp"] = s.c_rp;
  rec["p_pip"] = s.p_pip;
  rec["c_pip"] = s.c_pip;
  return rec;
}

inline LabeledSentence sentence_from_json(const nlohmann::json& rec) {
  LabeledSentence s;
  s.id = rec.at("id").get<std::string>();
  s.speaker = rec.at("speaker").get<std::string>();
  const auto& toks = rec.at("tokens");
  int word_index = -1;
  for (size_t i = 0; i < toks.size(); ++i) {
    Token t;
    t.text = toks[i].at("text").get<std::string>();
    t.is_continuation = toks[i].at("cont").get<bool>();
    t.is_punct = toks[i].at("punct").get<bool>();
    if (t.text.empty()) throw ParseError("empty token text");
    if (t.is_punct && t.is_continuation)
      throw ParseError("punctuation token marked as continuation");
    if (!t.is_continuation) ++word_index;
    if (word_index < 0) throw ParseError("sentence starts with a continuation token");
    t.word_index = word_index;
    s.tokens.push_back(std::move(t));
  }
  for (size_t i = 0; i < s.tokens.size(); ++i)
    s.tokens[i].is_word_final =
        i + 1 == s.tokens.size() || !s.tokens[i + 1].is_continuation;
  s.p_rp = rec.at("p_rp").get<std::vector<int>>();
  s.c_rp = rec.at("c_rp").get<std::vector<int>>();
  s.p_pip = rec.at("p_pip").get<std::vector<int>>();
  s.c_pip = rec.at("c_pip").get<std::vector<int>>();
  validate_labels(s);
  return s;
}

inline void write_dataset(const std::string& path, const std::vector<LabeledSentence>& dataset) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open dataset file for writing: " + path);
  nlohmann::json header;
  header["format"] = kDatasetFormat;
  header["version"] = kDatasetVersion;
  out << header.dump() << "\n";
  for (const auto& s : dataset) out << sentence_to_json(s).dump() << "\n";
}

inline std::vector<LabeledSentence> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    return ParseError(path + " line " + std::to_string(line_no) + ": " + why);
  };

  if (!std::getline(in, line)) throw ParseError(path + ": missing header line");
  ++line_no;
  try {
    nlohmann::json header = nlohmann::json::parse(line);
    if (header.at("format").get<std::string>() != kDatasetFormat)
      throw fail("not a " + std::string(kDatasetFormat) + " file");
    if (header.at("version").get<int>() != kDatasetVersion)
      throw fail("unsupported version " + std::to_string(header.at("version").get<int>()));
  } catch (const nlohmann::json::exception& e) {
    throw fail(std::string("malformed header: ") + e.what());
  }

  std::vector<LabeledSentence> dataset;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      dataset.push_back(sentence_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw fail(std::string("malformed record: ") + e.what());
    } catch (const ParseError& e) {
      throw fail(e.what());
    } catch (const InternalError& e) {
      throw fail(e.what());
    }
  }
  return dataset;
}

}  // namespace pausekit

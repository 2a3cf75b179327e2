// tests/test_evalkit.cpp

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

#include "pausekit/evalkit.hpp"
#include "pausekit/synth.hpp"

using namespace pausekit;

namespace {

Vocabulary vocab() {
  std::vector<std::string> entries = {"[UNK]", ".", ",", "wait", "##ing", "tree", "rock"};
  return Vocabulary(entries, "[UNK]");
}

// Sentence with a multi-subword word so the last-subword rule matters:
// tokens are [wait][##ing][tree][,][rock][.]
LabeledSentence fixture_sentence(int rp_cat = 1, int pip_cat = 2) {
  Vocabulary v = vocab();
  LabeledSentence s;
  s.id = "f";
  s.speaker = "spk";
  s.tokens = tokenize_sentence("waiting tree, rock.", v);
  s.p_rp.assign(6, 0);
  s.c_rp.assign(6, 0);
  s.p_pip.assign(6, 0);
  s.c_pip.assign(6, 0);
  s.p_rp[1] = 1;  // RP after "waiting" -> last subword "##ing"
  s.c_rp[1] = rp_cat;
  s.p_pip[3] = 1;  // PIP on the comma
  s.c_pip[3] = pip_cat;
  validate_labels(s);
  return s;
}

}  // namespace

TEST_CASE("f_beta reproduces the reference triples") {
  CHECK(f_beta(0.569, 0.272, 0.5) == Catch::Approx(0.467).margin(0.001));
  CHECK(f_beta(0.848, 0.996, 2.0) == Catch::Approx(0.962).margin(0.001));
  CHECK(f_beta(0.393, 0.187, 0.5) == Catch::Approx(0.322).margin(0.001));
}

TEST_CASE("f_beta symmetric point and degenerate input") {
  for (double x : {0.1, 0.5, 0.9})
    for (double beta : {0.5, 1.0, 2.0}) CHECK(f_beta(x, x, beta) == Catch::Approx(x));
  CHECK(f_beta(0.0, 0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(f_beta(0.5, 0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(f_beta(1.5, 0.5, 1.0), ConfigError);
}

TEST_CASE("f_beta is strictly increasing in precision and recall") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(0.01, 0.99);
  for (int trial = 0; trial < 200; ++trial) {
    double p = dist(rng), r = dist(rng), beta = dist(rng) * 3.0 + 0.1;
    double base = f_beta(p, r, beta);
    CHECK(f_beta(std::min(1.0, p + 0.01), r, beta) > base);
    CHECK(f_beta(p, std::min(1.0, r + 0.01), beta) > base);
  }
}

TEST_CASE("position_pr counts only eligible positions") {
  auto s = fixture_sentence();

  SECTION("predictions equal to labels give precision and recall 1") {
    std::vector<std::vector<double>> probs = {{0.0, 0.9, 0.0, 0.0, 0.0, 0.0}};
    auto pr = position_pr(probs, {s}, 0.5, PauseKind::RP);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
    CHECK(pr.tp == 1);
    CHECK(pr.fp == 0);
    CHECK(pr.fn == 0);
  }

  SECTION("high probability on a non-final subword is neither TP nor FP") {
    // probability 0.9 on "wait" (non-final subword) is ignored entirely
    std::vector<std::vector<double>> probs = {{0.9, 0.9, 0.0, 0.0, 0.0, 0.0}};
    auto pr = position_pr(probs, {s}, 0.5, PauseKind::RP);
    CHECK(pr.tp == 1);
    CHECK(pr.fp == 0);
  }

  SECTION("punctuation tokens are not RP-eligible and words are not PIP-eligible") {
    std::vector<std::vector<double>> probs = {{0.0, 0.0, 0.0, 0.9, 0.0, 0.0}};
    auto pr = position_pr(probs, {s}, 0.5, PauseKind::RP);
    CHECK(pr.fp == 0);  // the comma is invisible to the RP task
    auto pip = position_pr(probs, {s}, 0.5, PauseKind::PIP);
    CHECK(pip.tp == 1);
    CHECK(pip.recall == 1.0);
  }

  SECTION("no predicted positives flags undefined precision as zero") {
    std::vector<std::vector<double>> probs = {{0.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
    auto pr = position_pr(probs, {s}, 0.5, PauseKind::RP);
    CHECK_FALSE(pr.precision_defined);
    CHECK(pr.precision == 0.0);
    CHECK(pr.recall == 0.0);
  }

  SECTION("no positive labels at eligible positions is an error") {
    LabeledSentence zero = s;
    zero.p_rp.assign(6, 0);
    zero.c_rp.assign(6, 0);
    std::vector<std::vector<double>> probs = {{0.0, 0.9, 0.0, 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(position_pr(probs, {zero}, 0.5, PauseKind::RP), DataError);
  }
}

TEST_CASE("position_pr equals a brute-force recount on random data") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  auto v = vocab();

  std::vector<LabeledSentence> sentences;
  std::vector<std::vector<double>> probs;
  for (int n = 0; n < 25; ++n) {
    LabeledSentence s = fixture_sentence(1 + static_cast<int>(rng() % 3),
                                         1 + static_cast<int>(rng() % 3));
    s.id = "r" + std::to_string(n);
    std::vector<double> p(s.tokens.size());
    for (auto& x : p) x = dist(rng);
    // randomize some labels at eligible positions
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      if (s.tokens[i].is_word_final && !s.tokens[i].is_punct && rng() % 2 == 0) {
        s.p_rp[i] = 1;
        s.c_rp[i] = 1;
      }
    }
    sentences.push_back(s);
    probs.push_back(p);
  }

  for (double th : {0.2, 0.5, 0.8}) {
    auto pr = position_pr(probs, sentences, th, PauseKind::RP);
    long tp = 0, fp = 0, fn = 0, positives = 0;
    for (size_t s_i = 0; s_i < sentences.size(); ++s_i)
      for (size_t i = 0; i < sentences[s_i].tokens.size(); ++i) {
        const Token& t = sentences[s_i].tokens[i];
        if (!(t.is_word_final && !t.is_punct)) continue;
        bool label = sentences[s_i].p_rp[i] == 1;
        bool pred = probs[s_i][i] >= th;
        positives += label ? 1 : 0;
        tp += pred && label ? 1 : 0;
        fp += pred && !label ? 1 : 0;
        fn += !pred && label ? 1 : 0;
      }
    CHECK(pr.tp == tp);
    CHECK(pr.fp == fp);
    CHECK(pr.fn == fn);
    CHECK(pr.tp + pr.fn == positives);  // threshold-independent identity
  }
}

TEST_CASE("sweep_threshold finds the F-optimal point") {
  auto s = fixture_sentence();

  SECTION("perfectly separable probabilities reach F = 1") {
    std::vector<std::vector<double>> probs = {{0.0, 0.9, 0.1, 0.0, 0.2, 0.0}};
    auto sweep = sweep_threshold(probs, {s}, 0.5, PauseKind::RP);
    CHECK(sweep.best_f == Catch::Approx(1.0));
    CHECK(sweep.best_threshold > 0.2);
  }

  SECTION("a 20-point case agrees with an exhaustive external sweep") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<LabeledSentence> sentences;
    std::vector<std::vector<double>> probs;
    for (int n = 0; n < 10; ++n) {
      LabeledSentence sn = fixture_sentence();
      sn.id = "s" + std::to_string(n);
      std::vector<double> p(sn.tokens.size());
      for (auto& x : p) x = dist(rng);
      sentences.push_back(sn);
      probs.push_back(p);
    }
    double beta = 0.5;
    auto sweep = sweep_threshold(probs, sentences, beta, PauseKind::RP);

    double best_f = -1.0;
    for (size_t s_i = 0; s_i < sentences.size(); ++s_i)
      for (size_t i = 0; i < sentences[s_i].tokens.size(); ++i) {
        const Token& t = sentences[s_i].tokens[i];
        if (!(t.is_word_final && !t.is_punct)) continue;
        auto pr = position_pr(probs, sentences, probs[s_i][i], PauseKind::RP);
        best_f = std::max(best_f, f_beta(pr.precision, pr.recall, beta));
      }
    CHECK(sweep.best_f == Catch::Approx(best_f));

    // the reported best equals the max over the emitted points
    double max_pt = 0.0;
    for (const auto& pt : sweep.points)
      max_pt = std::max(max_pt, f_beta(pt.precision, pt.recall, beta));
    CHECK(sweep.best_f == Catch::Approx(max_pt));
  }

  SECTION("all-zero labels raise the recall-undefined error") {
    LabeledSentence zero = fixture_sentence();
    zero.p_rp.assign(6, 0);
    zero.c_rp.assign(6, 0);
    std::vector<std::vector<double>> probs = {{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}};
    CHECK_THROWS_WITH(sweep_threshold(probs, {zero}, 0.5, PauseKind::RP),
                      Catch::Matchers::ContainsSubstring("recall undefined"));
  }

  SECTION("an empty prediction set is an error") {
    std::vector<LabeledSentence> none;
    std::vector<std::vector<double>> probs;
    CHECK_THROWS_AS(sweep_threshold(probs, none, 0.5, PauseKind::RP), DataError);
  }

  SECTION("large candidate sets are capped at 1000 quantiles") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<LabeledSentence> sentences;
    std::vector<std::vector<double>> probs;
    for (int n = 0; n < 400; ++n) {
      LabeledSentence sn = fixture_sentence();
      sn.id = "b" + std::to_string(n);
      std::vector<double> p(sn.tokens.size());
      for (auto& x : p) x = dist(rng);
      sentences.push_back(sn);
      probs.push_back(p);
    }
    auto sweep = sweep_threshold(probs, sentences, 0.5, PauseKind::RP);
    CHECK(sweep.points.size() <= 1000);
    CHECK(sweep.points.size() > 900);
  }
}

TEST_CASE("pr_curve keeps only points above the 0.1 filter") {
  std::vector<PrPoint> pts = {
      {0.1, 0.05, 0.5, true},   // dropped: precision too low
      {0.2, 0.5, 0.05, true},   // dropped: recall too low
      {0.3, 0.4, 0.6, true},
      {0.4, 0.9, 0.2, true},
      {0.5, 0.3, 0.3, false},   // dropped: undefined precision
  };
  auto curve = pr_curve(pts);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].recall == Catch::Approx(0.2));  // sorted by recall
  CHECK(curve[1].recall == Catch::Approx(0.6));

  SECTION("all-passing input is an order-preserving identity up to sorting") {
    std::vector<PrPoint> ok = {{0.1, 0.4, 0.9, true}, {0.2, 0.5, 0.5, true},
                               {0.3, 0.6, 0.2, true}};
    auto c = pr_curve(ok);
    REQUIRE(c.size() == 3);
    CHECK(c[0].recall < c[1].recall);
    CHECK(c[1].recall < c[2].recall);
  }
}

TEST_CASE("category_confusion tallies labeled and predicted pauses") {
  auto s = fixture_sentence(2, 3);

  SECTION("a perfect categorizer fills the diagonal") {
    std::vector<Decision> d(s.tokens.size());
    d[1] = {true, PauseKind::RP, 2};
    d[3] = {true, PauseKind::PIP, 3};
    auto rp = category_confusion({d}, {s}, PauseKind::RP);
    CHECK(rp.counts[1][1] == 1);
    auto pip = category_confusion({d}, {s}, PauseKind::PIP);
    CHECK(pip.counts[2][2] == 1);
    long total = 0;
    for (auto& row : rp.counts)
      for (long c : row) total += c;
    CHECK(total == 1);
  }

  SECTION("labeled pauses the model missed are excluded") {
    std::vector<Decision> none(s.tokens.size());
    auto m = category_confusion({none}, {s}, PauseKind::RP);
    long total = 0;
    for (auto& row : m.counts)
      for (long c : row) total += c;
    CHECK(total == 0);
  }

  SECTION("random case equals a brute-force tally") {
    std::mt19937_64 rng(23);
    std::vector<LabeledSentence> sentences;
    std::vector<std::vector<Decision>> decisions;
    for (int n = 0; n < 30; ++n) {
      LabeledSentence sn = fixture_sentence(1 + static_cast<int>(rng() % 3),
                                            1 + static_cast<int>(rng() % 3));
      std::vector<Decision> d(sn.tokens.size());
      for (size_t i = 0; i < d.size(); ++i) {
        const Token& t = sn.tokens[i];
        if (t.is_punct && rng() % 2 == 0)
          d[i] = {true, PauseKind::PIP, 1 + static_cast<int>(rng() % 3)};
        else if (t.is_word_final && !t.is_punct && rng() % 2 == 0)
          d[i] = {true, PauseKind::RP, 1 + static_cast<int>(rng() % 3)};
      }
      sentences.push_back(sn);
      decisions.push_back(d);
    }
    auto m = category_confusion(decisions, sentences, PauseKind::PIP);
    long expect[3][3] = {};
    for (size_t s_i = 0; s_i < sentences.size(); ++s_i)
      for (size_t i = 0; i < sentences[s_i].tokens.size(); ++i) {
        int label = sentences[s_i].c_pip[i];
        const Decision& d = decisions[s_i][i];
        if (label != 0 && d.pause && d.kind == PauseKind::PIP)
          ++expect[label - 1][d.category - 1];
      }
    for (size_t r = 0; r < 3; ++r)
      for (size_t c = 0; c < 3; ++c) CHECK(m.counts[r][c] == expect[r][c]);
  }

  SECTION("uncategorized decisions cannot be tallied") {
    std::vector<Decision> d(s.tokens.size());
    d[1] = {true, PauseKind::RP, 0};
    CHECK_THROWS_AS(category_confusion({d}, {s}, PauseKind::RP), ConfigError);
  }
}

TEST_CASE("metrics report writes stable field names") {
  TaskReport r;
  r.task = "rp";
  r.beta = 0.5;
  r.threshold = 0.42;
  r.precision = 0.6;
  r.recall = 0.3;
  r.f = f_beta(0.6, 0.3, 0.5);
  r.curve = {{0.42, 0.6, 0.3, true}};
  write_metrics_report("metrics_test.json", {r});
  std::ifstream in("metrics_test.json");
  nlohmann::json j;
  in >> j;
  CHECK(j.at("format") == "pausekit-metrics");
  CHECK(j.at("tasks")[0].at("task") == "rp");
  CHECK(j.at("tasks")[0].at("precision") == Catch::Approx(0.6));
  CHECK(j.at("tasks")[0].at("pr_curve").size() == 1);
  std::remove("metrics_test.json");
}

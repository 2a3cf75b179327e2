// tools/pausekit_main.cpp

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

// Command-line surface: corpus preparation, category fitting, training,
// evaluation, threshold sweeping, text annotation and synthetic-corpus
// generation. Exit codes: 0 ok, 1 usage, 2 data error, 3 internal.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pausekit/annotate.hpp"
#include "pausekit/evalkit.hpp"
#include "pausekit/synth.hpp"
#include "pausekit/trainkit.hpp"

namespace fs = std::filesystem;
using namespace pausekit;

namespace {

std::vector<fs::path> alignment_files(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".align")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .align files in " + dir);
  return files;
}

DurationCategorizer categorizer_or_default(const std::string& path) {
  if (path.empty()) return DurationCategorizer::defaults();
  return load_categorizer(path).categorizer;
}

TrainConfig train_config_from_file(const std::string& path) {
  TrainConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open train config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed train config " + path + ": " + e.what());
  }
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("lr0")) cfg.lr0 = j["lr0"].get<double>();
  if (j.contains("plateau_iters")) cfg.plateau_iters = j["plateau_iters"].get<int>();
  if (j.contains("lr_decay")) cfg.lr_decay = j["lr_decay"].get<double>();
  if (j.contains("max_iters")) cfg.max_iters = j["max_iters"].get<long>();
  if (j.contains("eval_every")) cfg.eval_every = j["eval_every"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("beta_rp")) cfg.beta_rp = j["beta_rp"].get<double>();
  if (j.contains("beta_pip")) cfg.beta_pip = j["beta_pip"].get<double>();
  return cfg;
}

// Optional word2vec-style text table: first line "<count> <dim>", then one
// line per piece. Pieces absent from the file keep their random vectors.
void load_static_embeddings(const std::string& path, const Vocabulary& vocab,
                            nn::Tensor& table) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty embedding file");
  std::istringstream header(line);
  size_t count = 0, dim = 0;
  if (!(header >> count >> dim)) throw ParseError(path + ": bad embedding header");
  if (dim != table.cols())
    throw ConfigError("embedding dimension " + std::to_string(dim) +
                      " does not match the model dimension " + std::to_string(table.cols()));
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string piece;
    row >> piece;
    int id = vocab.index_of(piece);
    std::vector<double> values;
    double v;
    while (row >> v) values.push_back(v);
    if (values.size() != dim)
      throw ParseError(path + " line " + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " values");
    if (id < 0) continue;  // piece not in this vocabulary
    for (size_t c = 0; c < dim; ++c) table.at(static_cast<size_t>(id), c) = values[c];
  }
}

struct LoadedModel {
  ModelBundle bundle;
  Vocabulary vocab;
};

LoadedModel load_bundle(const std::string& checkpoint, const std::string& config,
                        const std::string& vocab_override) {
  ModelBundle bundle = load_model(checkpoint, config);
  std::string vocab_path = vocab_override.empty() ? bundle.vocab_ref : vocab_override;
  if (vocab_path.empty()) throw DataError("no vocabulary file recorded or given; use --vocab");
  Vocabulary vocab = Vocabulary::load(vocab_path);
  if (vocab.size() + 1 != bundle.model.embed_rows)
    throw ConfigError("vocabulary size " + std::to_string(vocab.size()) +
                      " does not match the checkpoint's embedding table");
  return LoadedModel{std::move(bundle), std::move(vocab)};
}

std::vector<std::vector<double>> collect_probs(const PauseModel& model, const Vocabulary& vocab,
                                               const std::vector<LabeledSentence>& data,
                                               PauseKind kind) {
  std::vector<std::vector<double>> probs;
  const size_t chunk = 64;
  for (size_t at = 0; at < data.size(); at += chunk) {
    std::vector<const LabeledSentence*> group;
    for (size_t i = at; i < std::min(data.size(), at + chunk); ++i) group.push_back(&data[i]);
    for (auto& p : predict_batch(model, vocab, group))
      probs.push_back(kind == PauseKind::RP ? std::move(p.rp_prob) : std::move(p.pip_prob));
  }
  return probs;
}

int run(int argc, char** argv) {
  CLI::App app{"pausekit: duration-categorized pause insertion for TTS front-ends"};
  app.require_subcommand(1);

  // ---- synth-corpus ----
  auto* synth = app.add_subcommand("synth-corpus", "generate a synthetic aligned corpus");
  std::string synth_out;
  int synth_sentences = 200, synth_speakers = 8;
  std::uint64_t synth_seed = 0;
  double synth_pip_drop = 0.2, synth_comma = 0.2;
  int synth_min_words = 8, synth_max_words = 14;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--sentences", synth_sentences, "number of sentences");
  synth->add_option("--speakers", synth_speakers, "number of speakers");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--pip-drop", synth_pip_drop, "probability a punctuation mark gets no pause");
  synth->add_option("--comma-prob", synth_comma, "per-word comma probability");
  synth->add_option("--min-words", synth_min_words, "minimum words per sentence");
  synth->add_option("--max-words", synth_max_words, "maximum words per sentence");

  // ---- fit-categories ----
  auto* fit = app.add_subcommand("fit-categories", "fit the GMM duration categorizer");
  std::string fit_dir, fit_out;
  int fit_k = 3, fit_max_iter = 500;
  double fit_tol = 1e-7;
  std::uint64_t fit_seed = 0;
  fit->add_option("--align-dir", fit_dir, "directory of .align files")->required();
  fit->add_option("--out", fit_out, "output categorizer file")->required();
  fit->add_option("--k", fit_k, "number of mixture components");
  fit->add_option("--max-iter", fit_max_iter, "EM iteration cap");
  fit->add_option("--tol", fit_tol, "relative log-likelihood tolerance");
  fit->add_option("--seed", fit_seed, "random seed");

  // ---- prepare-corpus ----
  auto* prep = app.add_subcommand("prepare-corpus", "build a labeled dataset from alignments");
  std::string prep_dir, prep_vocab, prep_cat, prep_out, prep_stats;
  prep->add_option("--align-dir", prep_dir, "directory of .align files")->required();
  prep->add_option("--vocab", prep_vocab, "vocabulary file")->required();
  prep->add_option("--categorizer", prep_cat, "categorizer file (defaults to 300/700 ms)");
  prep->add_option("--out", prep_out, "output dataset file")->required();
  prep->add_option("--stats", prep_stats, "optional statistics JSON output");

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train a pause model");
  std::string tr_train, tr_val, tr_vocab, tr_arch = "rpi", tr_encoder = "transformer";
  std::string tr_config, tr_cat, tr_out, tr_pretrained, tr_static_emb;
  bool tr_no_speaker = false, tr_freeze = false;
  int tr_hidden = 768, tr_dec_hidden = 512, tr_layers = 2, tr_heads = 12, tr_ff = 0;
  std::uint64_t tr_init_seed = 0;
  tr->add_option("--train", tr_train, "training dataset")->required();
  tr->add_option("--val", tr_val, "validation dataset")->required();
  tr->add_option("--vocab", tr_vocab, "vocabulary file")->required();
  tr->add_option("--arch", tr_arch, "baseline | baseline-spk | rpi | cpi");
  tr->add_option("--encoder", tr_encoder, "static | transformer");
  tr->add_option("--config", tr_config, "training config JSON (TrainConfig keys)");
  tr->add_option("--categorizer", tr_cat, "categorizer file recorded in the sidecar");
  tr->add_option("--out", tr_out, "output prefix (writes .ckpt/.json/.log.jsonl)")->required();
  tr->add_flag("--no-speaker", tr_no_speaker, "disable speaker injection (rpi/cpi)");
  tr->add_flag("--freeze-encoder", tr_freeze, "train without encoder fine-tuning");
  tr->add_option("--pretrained-encoder", tr_pretrained, "encoder checkpoint to load");
  tr->add_option("--static-emb", tr_static_emb, "static embedding table (text format)");
  tr->add_option("--hidden-dim", tr_hidden, "encoder output / speaker dimension");
  tr->add_option("--decoder-hidden", tr_dec_hidden, "decoder BiLSTM hidden size");
  tr->add_option("--encoder-layers", tr_layers, "transformer layers");
  tr->add_option("--encoder-heads", tr_heads, "transformer heads");
  tr->add_option("--encoder-ff", tr_ff, "transformer feed-forward dim (default 4x hidden)");
  tr->add_option("--init-seed", tr_init_seed, "parameter initialization seed");

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint and write a metrics report");
  std::string ev_ckpt, ev_cfg, ev_data, ev_vocab, ev_out;
  double ev_beta_rp = 0.5, ev_beta_pip = 2.0;
  ev->add_option("--checkpoint", ev_ckpt, "model checkpoint")->required();
  ev->add_option("--config", ev_cfg, "model config sidecar")->required();
  ev->add_option("--dataset", ev_data, "evaluation dataset")->required();
  ev->add_option("--vocab", ev_vocab, "vocabulary file (overrides the sidecar)");
  ev->add_option("--out", ev_out, "metrics report file")->required();
  ev->add_option("--beta-rp", ev_beta_rp, "F-beta for RP threshold selection");
  ev->add_option("--beta-pip", ev_beta_pip, "F-beta for PIP threshold selection");

  // ---- sweep-threshold ----
  auto* sw = app.add_subcommand("sweep-threshold", "find the F-beta-optimal threshold");
  std::string sw_ckpt, sw_cfg, sw_data, sw_vocab, sw_task = "rp";
  double sw_beta = 0.5;
  sw->add_option("--checkpoint", sw_ckpt, "model checkpoint")->required();
  sw->add_option("--config", sw_cfg, "model config sidecar")->required();
  sw->add_option("--dataset", sw_data, "dataset to sweep on")->required();
  sw->add_option("--vocab", sw_vocab, "vocabulary file (overrides the sidecar)");
  sw->add_option("--task", sw_task, "rp | pip")->check(CLI::IsMember({"rp", "pip"}));
  sw->add_option("--beta", sw_beta, "F-beta parameter");

  // ---- annotate ----
  auto* an = app.add_subcommand("annotate", "insert pause marks into text");
  std::string an_ckpt, an_cfg, an_vocab, an_speaker, an_in, an_out, an_records;
  double an_rp_th = 0.5, an_pip_th = 0.5;
  an->add_option("--checkpoint", an_ckpt, "model checkpoint")->required();
  an->add_option("--config", an_cfg, "model config sidecar")->required();
  an->add_option("--vocab", an_vocab, "vocabulary file (overrides the sidecar)");
  an->add_option("--speaker", an_speaker, "speaker id for conditioned models");
  an->add_option("--in", an_in, "input text, one sentence per line")->required();
  an->add_option("--out", an_out, "annotated output file (default stdout)");
  an->add_option("--records", an_records, "optional per-token JSONL output");
  an->add_option("--rp-threshold", an_rp_th, "RP decision threshold");
  an->add_option("--pip-threshold", an_pip_th, "PIP decision threshold");

  CLI11_PARSE(app, argc, argv);

  if (*synth) {
    auto styles = contradictory_styles(synth_speakers, default_grammar_words(), synth_pip_drop);
    SynthConfig cfg;
    cfg.n_sentences = synth_sentences;
    cfg.seed = synth_seed;
    cfg.comma_prob = synth_comma;
    cfg.min_words = synth_min_words;
    cfg.max_words = synth_max_words;
    fs::create_directories(synth_out);
    auto utts = synth_corpus(styles, cfg);
    for (const auto& u : utts) {
      std::ofstream out(fs::path(synth_out) / (u.id + ".align"));
      if (!out) throw ParseError("cannot write into " + synth_out);
      write_alignment_file(out, u.speaker, u.transcript, u.words);
    }
    auto vocab = synth_vocabulary(default_grammar_words());
    std::ofstream vout(fs::path(synth_out) / "vocab.txt");
    for (const auto& e : vocab.entries()) vout << e << "\n";
    std::cout << "wrote " << utts.size() << " alignment files and vocab.txt to " << synth_out
              << "\n";
    return 0;
  }

  if (*fit) {
    std::vector<double> durations;
    for (const auto& path : alignment_files(fit_dir)) {
      ParsedAlignment p = parse_alignment_file(path.string());
      auto units = normalize_sentence(p.transcript);
      auto punct_after = match_transcript(units, p.words);
      for (const auto& e : extract_pauses(p.words, punct_after))
        durations.push_back(static_cast<double>(e.duration_ms));
    }
    CategorizerModel model;
    model.gmm = fit_gmm(durations, fit_k, fit_max_iter, fit_tol, fit_seed);
    model.categorizer = round_thresholds(find_cutoffs(model.gmm));
    save_categorizer(fit_out, model);
    std::cout << "fitted " << fit_k << " components over " << durations.size()
              << " pauses; thresholds:";
    for (int t : model.categorizer.thresholds_ms) std::cout << " " << t;
    std::cout << " ms\n";
    return 0;
  }

  if (*prep) {
    Vocabulary vocab = Vocabulary::load(prep_vocab);
    DurationCategorizer cat = categorizer_or_default(prep_cat);
    std::vector<LabeledSentence> dataset;
    for (const auto& path : alignment_files(prep_dir)) {
      ParsedAlignment p = parse_alignment_file(path.string());
      dataset.push_back(ingest_utterance(path.stem().string(), p, vocab, cat));
    }
    write_dataset(prep_out, dataset);
    CorpusStats st = compute_stats(dataset);
    std::cout << "wrote " << st.sentences << " sentences, " << st.tokens << " tokens, "
              << st.rp_total << " RPs, " << st.pip_total << " PIPs to " << prep_out << "\n";
    if (!prep_stats.empty()) {
      nlohmann::json j;
      j["sentences"] = st.sentences;
      j["tokens"] = st.tokens;
      j["punctuation"] = st.punctuation;
      j["speakers"] = st.speakers;
      j["rp_total"] = st.rp_total;
      j["pip_total"] = st.pip_total;
      j["rp_counts"] = {st.rp_counts[1], st.rp_counts[2], st.rp_counts[3]};
      j["pip_counts"] = {st.pip_counts[1], st.pip_counts[2], st.pip_counts[3]};
      std::ofstream out(prep_stats);
      out << j.dump(2) << "\n";
    }
    return 0;
  }

  if (*tr) {
    Vocabulary vocab = Vocabulary::load(tr_vocab);
    auto train_set = read_dataset(tr_train);
    auto val_set = read_dataset(tr_val);

    std::set<std::string> speakers;
    for (const auto& s : train_set) speakers.insert(s.speaker);

    ModelConfig mc;
    mc.arch = arch_from_name(tr_arch);
    if (tr_encoder == "static")
      mc.encoder = EncoderKind::StaticEmbedding;
    else if (tr_encoder == "transformer")
      mc.encoder = EncoderKind::Transformer;
    else
      throw ConfigError("unknown encoder: " + tr_encoder);
    mc.use_speaker = mc.arch == Arch::BaselineSpk ||
                     ((mc.arch == Arch::RPI || mc.arch == Arch::CPI) && !tr_no_speaker);
    mc.encoder_trainable = !tr_freeze;
    mc.hidden_dim = tr_hidden;
    mc.decoder_bilstm_hidden = tr_dec_hidden;
    mc.transformer.layers = tr_layers;
    mc.transformer.heads = tr_heads;
    mc.transformer.model_dim = tr_hidden;
    mc.transformer.ff_dim = tr_ff > 0 ? tr_ff : 4 * tr_hidden;

    PauseModel model = build_pause_model(
        mc, vocab.size(), std::vector<std::string>(speakers.begin(), speakers.end()),
        tr_init_seed);
    if (!tr_pretrained.empty()) {
      nn::ParamSet enc = nn::ParamSet::load(tr_pretrained);
      model.params.merge_from(enc);
      if (tr_freeze) model.params.set_trainable_prefix("encoder.", false);
    }
    if (!tr_static_emb.empty()) {
      if (mc.encoder != EncoderKind::StaticEmbedding)
        throw ConfigError("--static-emb requires --encoder static");
      load_static_embeddings(tr_static_emb, vocab, model.params.at("encoder.embed").value);
    }

    TrainConfig tcfg = train_config_from_file(tr_config);
    TrainResult result = train(model, train_set, val_set, vocab, tcfg);

    model.params = result.best_params;
    DurationCategorizer cat = categorizer_or_default(tr_cat);
    save_model(tr_out + ".ckpt", tr_out + ".json", model, tr_vocab, cat);
    std::ofstream log(tr_out + ".log.jsonl");
    for (const auto& rec : result.log) {
      nlohmann::json j;
      j["iteration"] = rec.iteration;
      j["lr"] = rec.lr;
      j["train_loss"] = rec.train_loss;
      j["val_metric"] = rec.val_metric;
      j["val_f_rp"] = rec.val_f_rp;
      if (model.config.arch == Arch::CPI) j["val_f_pip"] = rec.val_f_pip;
      log << j.dump() << "\n";
    }
    std::cout << "best validation metric " << result.best_metric << " at iteration "
              << result.best_iteration << "; saved " << tr_out << ".ckpt\n";
    return 0;
  }

  if (*ev) {
    LoadedModel lm = load_bundle(ev_ckpt, ev_cfg, ev_vocab);
    auto data = read_dataset(ev_data);
    bool cpi = lm.bundle.model.config.arch == Arch::CPI;

    std::vector<TaskReport> reports;
    auto rp_probs = collect_probs(lm.bundle.model, lm.vocab, data, PauseKind::RP);
    SweepResult rp = sweep_threshold(rp_probs, data, ev_beta_rp, PauseKind::RP);
    TaskReport rp_report;
    rp_report.task = "rp";
    rp_report.beta = ev_beta_rp;
    rp_report.threshold = rp.best_threshold;
    rp_report.precision = rp.best_counts.precision;
    rp_report.recall = rp.best_counts.recall;
    rp_report.f = rp.best_f;
    rp_report.curve = pr_curve(rp.points);
    if (cpi) {
      auto pip_probs = collect_probs(lm.bundle.model, lm.vocab, data, PauseKind::PIP);
      SweepResult pip = sweep_threshold(pip_probs, data, ev_beta_pip, PauseKind::PIP);

      std::vector<std::vector<Decision>> decisions;
      for (size_t i = 0; i < data.size(); ++i) {
        auto pred = predict_batch(lm.bundle.model, lm.vocab, {&data[i]})[0];
        decisions.push_back(decide(pred, data[i].tokens, rp.best_threshold,
                                   pip.best_threshold));
      }
      rp_report.has_confusion = true;
      rp_report.confusion = category_confusion(decisions, data, PauseKind::RP);
      reports.push_back(rp_report);

      TaskReport pip_report;
      pip_report.task = "pip";
      pip_report.beta = ev_beta_pip;
      pip_report.threshold = pip.best_threshold;
      pip_report.precision = pip.best_counts.precision;
      pip_report.recall = pip.best_counts.recall;
      pip_report.f = pip.best_f;
      pip_report.curve = pr_curve(pip.points);
      pip_report.has_confusion = true;
      pip_report.confusion = category_confusion(decisions, data, PauseKind::PIP);
      reports.push_back(pip_report);
    } else {
      reports.push_back(rp_report);
    }
    write_metrics_report(ev_out, reports);
    for (const auto& r : reports)
      std::cout << r.task << ": precision=" << r.precision << " recall=" << r.recall
                << " f=" << r.f << " threshold=" << r.threshold << "\n";
    return 0;
  }

  if (*sw) {
    LoadedModel lm = load_bundle(sw_ckpt, sw_cfg, sw_vocab);
    auto data = read_dataset(sw_data);
    PauseKind kind = sw_task == "rp" ? PauseKind::RP : PauseKind::PIP;
    if (kind == PauseKind::PIP && lm.bundle.model.config.arch != Arch::CPI)
      throw ConfigError("PIP sweeps need a CPI checkpoint");
    auto probs = collect_probs(lm.bundle.model, lm.vocab, data, kind);
    SweepResult sweep = sweep_threshold(probs, data, sw_beta, kind);
    std::cout << "task=" << sw_task << " beta=" << sw_beta
              << " best_threshold=" << sweep.best_threshold << " best_f=" << sweep.best_f
              << " precision=" << sweep.best_counts.precision
              << " recall=" << sweep.best_counts.recall << "\n";
    return 0;
  }

  if (*an) {
    LoadedModel lm = load_bundle(an_ckpt, an_cfg, an_vocab);
    if (lm.bundle.model.config.use_speaker && an_speaker.empty())
      throw DataError("this checkpoint is speaker-conditioned; pass --speaker");
    std::ifstream in(an_in);
    if (!in) throw ParseError("cannot open input text: " + an_in);
    std::ostream* out = &std::cout;
    std::ofstream out_file;
    if (!an_out.empty()) {
      out_file.open(an_out);
      if (!out_file) throw ParseError("cannot open output file: " + an_out);
      out = &out_file;
    }
    std::ofstream records;
    if (!an_records.empty()) {
      records.open(an_records);
      if (!records) throw ParseError("cannot open records file: " + an_records);
    }
    std::optional<std::string> speaker;
    if (!an_speaker.empty()) speaker = an_speaker;
    std::string line;
    long n = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto annotated = annotate_sentence(lm.bundle.model, lm.vocab, line, speaker, an_rp_th,
                                         an_pip_th);
      *out << render_annotated(annotated) << "\n";
      if (records.is_open()) {
        nlohmann::json j;
        j["sentence"] = n;
        nlohmann::json toks = nlohmann::json::array();
        for (const auto& t : annotated) {
          nlohmann::json tok;
          tok["text"] = t.text;
          tok["pause"] = pause_mark(t);
          toks.push_back(std::move(tok));
        }
        j["tokens"] = std::move(toks);
        records << j.dump() << "\n";
      }
      ++n;
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}

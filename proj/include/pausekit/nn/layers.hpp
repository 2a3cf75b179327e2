// pausekit/nn/layers.hpp

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

// Layers over the autodiff graph: embeddings, LSTM cells with optional
// peephole connections and recurrent projection, bidirectional sequence
// runs, splicing windows, a small transformer encoder and linear heads.
//
// Batches are "sentence-major": the rows of all sentences are stacked and a
// lengths vector records the per-sentence row counts. Recurrent layers
// convert to a padded time-major layout internally and keep state frozen
// across padded steps.

#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pausekit/nn/ops.hpp"
#include "pausekit/nn/params.hpp"

namespace pausekit::nn {

struct SeqBatch {
  Var data;                 // (sum of lengths) x dim, sentence-major
  std::vector<int> lengths;
};

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

inline void add_embedding_params(ParamSet& ps, const std::string& name, size_t rows, size_t dim,
                                 std::mt19937_64& rng, double scale = 0.1) {
  ps.add(name, init_uniform({rows, dim}, rng, scale));
}

inline Var embedding(Graph& g, const ParamSet& ps, const std::string& name,
                     const std::vector<int>& ids) {
  Var table = use_param(g, ps, name);
  return gather_rows(table, ids);
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

struct LstmOptions {
  bool peephole = false;
  int projection_dim = 0;  // 0 disables the recurrent projection
};

struct LstmSpec {
  int input_dim = 0;
  int hidden_dim = 0;
  LstmOptions options;

  int output_dim() const {
    return options.projection_dim > 0 ? options.projection_dim : hidden_dim;
  }
};

struct LstmVars {
  Var w_x;     // input_dim x 4H, gate order [i f g o]
  Var w_r;     // output_dim x 4H
  Var b;       // 4H
  Var p_i, p_f, p_o;  // H peephole weights (peephole only)
  Var w_proj;  // H x projection_dim (projection only)
};

struct LstmState {
  Var c;  // B x H cell state
  Var r;  // B x output_dim recurrent output
};

inline void add_lstm_params(ParamSet& ps, const std::string& prefix, const LstmSpec& spec,
                            std::mt19937_64& rng) {
  int h = spec.hidden_dim;
  ps.add(prefix + ".w_x", init_uniform({static_cast<size_t>(spec.input_dim),
                                        static_cast<size_t>(4 * h)}, rng));
  ps.add(prefix + ".w_r", init_uniform({static_cast<size_t>(spec.output_dim()),
                                        static_cast<size_t>(4 * h)}, rng));
  ps.add(prefix + ".b", Tensor::zeros({static_cast<size_t>(4 * h)}));
  if (spec.options.peephole) {
    ps.add(prefix + ".p_i", init_uniform({static_cast<size_t>(h)}, rng, 0.1));
    ps.add(prefix + ".p_f", init_uniform({static_cast<size_t>(h)}, rng, 0.1));
    ps.add(prefix + ".p_o", init_uniform({static_cast<size_t>(h)}, rng, 0.1));
  }
  if (spec.options.projection_dim > 0)
    ps.add(prefix + ".w_proj", init_uniform({static_cast<size_t>(h),
                                             static_cast<size_t>(spec.options.projection_dim)},
                                            rng));
}

inline LstmVars bind_lstm(Graph& g, const ParamSet& ps, const std::string& prefix,
                          const LstmSpec& spec) {
  LstmVars v;
  v.w_x = use_param(g, ps, prefix + ".w_x");
  v.w_r = use_param(g, ps, prefix + ".w_r");
  v.b = use_param(g, ps, prefix + ".b");
  if (spec.options.peephole) {
    v.p_i = use_param(g, ps, prefix + ".p_i");
    v.p_f = use_param(g, ps, prefix + ".p_f");
    v.p_o = use_param(g, ps, prefix + ".p_o");
  }
  if (spec.options.projection_dim > 0) v.w_proj = use_param(g, ps, prefix + ".w_proj");
  return v;
}

inline LstmState lstm_initial_state(Graph& g, const LstmSpec& spec, size_t batch) {
  return LstmState{
      g.constant(Tensor::zeros({batch, static_cast<size_t>(spec.hidden_dim)})),
      g.constant(Tensor::zeros({batch, static_cast<size_t>(spec.output_dim())}))};
}

namespace detail {

// Core cell update from precomputed input-side pre-activations z = x W_x.
// Peepholes feed the input and forget gates from the previous cell state and
// the output gate from the current cell state.
inline std::pair<Var, LstmState> lstm_cell(Graph& g, Var z_input, const LstmState& state,
                                           const LstmVars& v, const LstmSpec& spec) {
  (void)g;
  int h = spec.hidden_dim;
  Var z = add_rowvec(add(z_input, matmul(state.r, v.w_r)), v.b);
  Var zi = slice_cols(z, 0, static_cast<size_t>(h));
  Var zf = slice_cols(z, static_cast<size_t>(h), static_cast<size_t>(h));
  Var zg = slice_cols(z, static_cast<size_t>(2 * h), static_cast<size_t>(h));
  Var zo = slice_cols(z, static_cast<size_t>(3 * h), static_cast<size_t>(h));
  if (spec.options.peephole) {
    zi = add(zi, mul_rowvec(state.c, v.p_i));
    zf = add(zf, mul_rowvec(state.c, v.p_f));
  }
  Var i = sigmoid(zi);
  Var f = sigmoid(zf);
  Var gg = tanh_act(zg);
  Var c = add(mul(f, state.c), mul(i, gg));
  if (spec.options.peephole) zo = add(zo, mul_rowvec(c, v.p_o));
  Var o = sigmoid(zo);
  Var m = mul(o, tanh_act(c));
  Var out = spec.options.projection_dim > 0 ? matmul(m, v.w_proj) : m;
  return {out, LstmState{c, out}};
}

}  // namespace detail

// One step on a B x input_dim slice.
inline std::pair<Var, LstmState> lstm_step(Graph& g, Var x, const LstmState& state,
                                           const LstmVars& v, const LstmSpec& spec) {
  check_finite(x.value(), "lstm_step");
  if (x.value().cols() != static_cast<size_t>(spec.input_dim))
    throw ConfigError("lstm_step: input dim mismatch, got " + x.value().shape_str());
  if (state.c.value().cols() != static_cast<size_t>(spec.hidden_dim) ||
      state.r.value().cols() != static_cast<size_t>(spec.output_dim()) ||
      state.c.value().rows() != x.value().rows())
    throw ConfigError("lstm_step: state shape mismatch");
  return detail::lstm_cell(g, matmul(x, v.w_x), state, v, spec);
}

// Unidirectional pass over a sentence-major batch. The input-side product is
// one large matmul; per-step masks keep state and outputs zeroed past each
// sentence's end.
inline Var lstm_sequence(Graph& g, const SeqBatch& in, const LstmVars& v, const LstmSpec& spec,
                         bool reverse) {
  check_finite(in.data.value(), "lstm_sequence");
  if (in.lengths.empty()) throw ConfigError("lstm_sequence: empty batch");
  size_t b = in.lengths.size();
  size_t tmax = static_cast<size_t>(max_length(in.lengths));

  Var x_tm = to_time_major(in.data, in.lengths);
  Var xw = matmul(x_tm, v.w_x);  // (tmax*b) x 4H

  LstmState state = lstm_initial_state(g, spec, b);
  Var zeros_out =
      g.constant(Tensor::zeros({b, static_cast<size_t>(spec.output_dim())}));
  std::vector<Var> outputs(tmax);
  for (size_t step = 0; step < tmax; ++step) {
    size_t t = reverse ? tmax - 1 - step : step;
    std::vector<double> mask(b);
    for (size_t s = 0; s < b; ++s) mask[s] = t < static_cast<size_t>(in.lengths[s]) ? 1.0 : 0.0;
    Var z = slice_rows(xw, t * b, b);
    auto [out, next] = detail::lstm_cell(g, z, state, v, spec);
    state.c = row_select(mask, next.c, state.c);
    state.r = row_select(mask, next.r, state.r);
    outputs[t] = row_select(mask, out, zeros_out);
  }
  return concat_rows(outputs);  // time-major
}

// ---------------------------------------------------------------------------
// BiLSTM
// ---------------------------------------------------------------------------

inline void add_bilstm_params(ParamSet& ps, const std::string& prefix, const LstmSpec& spec,
                              std::mt19937_64& rng) {
  add_lstm_params(ps, prefix + ".fwd", spec, rng);
  add_lstm_params(ps, prefix + ".bwd", spec, rng);
}

// Forward pass left-to-right and backward pass right-to-left over the full
// sentence, concatenated per position. Output dim = 2 * spec.output_dim().
inline SeqBatch bilstm_forward(Graph& g, const SeqBatch& in, const ParamSet& ps,
                               const std::string& prefix, const LstmSpec& spec) {
  check_finite(in.data.value(), "bilstm_forward");
  if (in.lengths.empty()) throw DataError("bilstm_forward: empty sequence batch");
  LstmVars fwd = bind_lstm(g, ps, prefix + ".fwd", spec);
  LstmVars bwd = bind_lstm(g, ps, prefix + ".bwd", spec);
  Var f = lstm_sequence(g, in, fwd, spec, /*reverse=*/false);
  Var b = lstm_sequence(g, in, bwd, spec, /*reverse=*/true);
  Var cat = concat_cols({f, b});
  return SeqBatch{from_time_major(cat, in.lengths), in.lengths};
}

// ---------------------------------------------------------------------------
// Splicing window
// ---------------------------------------------------------------------------

inline SeqBatch splice(Graph& g, const SeqBatch& in, int w) {
  (void)g;
  check_finite(in.data.value(), "splice");
  return SeqBatch{splice_window(in.data, in.lengths, w), in.lengths};
}

// ---------------------------------------------------------------------------
// Transformer encoder
// ---------------------------------------------------------------------------

struct TransformerSpec {
  int layers = 2;
  int heads = 4;
  int model_dim = 64;
  int ff_dim = 128;
  enum class Position { Sinusoidal, Learned, None } positions = Position::Sinusoidal;
  int max_positions = 512;
};

inline void add_transformer_params(ParamSet& ps, const std::string& prefix, size_t vocab_rows,
                                   const TransformerSpec& spec, std::mt19937_64& rng) {
  if (spec.model_dim % spec.heads != 0)
    throw ConfigError("transformer: model_dim not divisible by heads");
  size_t d = static_cast<size_t>(spec.model_dim);
  add_embedding_params(ps, prefix + ".embed", vocab_rows, d, rng);
  if (spec.positions == TransformerSpec::Position::Learned)
    add_embedding_params(ps, prefix + ".pos", static_cast<size_t>(spec.max_positions), d, rng);
  for (int l = 0; l < spec.layers; ++l) {
    std::string lp = prefix + ".l" + std::to_string(l);
    for (const char* m : {".wq", ".wk", ".wv", ".wo"})
      ps.add(lp + m, init_uniform({d, d}, rng));
    for (const char* m : {".bq", ".bk", ".bv", ".bo"}) ps.add(lp + m, Tensor::zeros({d}));
    ps.add(lp + ".ln1.gain", Tensor::full({d}, 1.0));
    ps.add(lp + ".ln1.bias", Tensor::zeros({d}));
    ps.add(lp + ".ff.w1", init_uniform({d, static_cast<size_t>(spec.ff_dim)}, rng));
    ps.add(lp + ".ff.b1", Tensor::zeros({static_cast<size_t>(spec.ff_dim)}));
    ps.add(lp + ".ff.w2", init_uniform({static_cast<size_t>(spec.ff_dim), d}, rng));
    ps.add(lp + ".ff.b2", Tensor::zeros({d}));
    ps.add(lp + ".ln2.gain", Tensor::full({d}, 1.0));
    ps.add(lp + ".ln2.bias", Tensor::zeros({d}));
  }
}

namespace detail {

inline Tensor sinusoidal_positions(const std::vector<int>& lengths, int model_dim) {
  auto offs = sentence_offsets(lengths);
  Tensor pe({offs.back(), static_cast<size_t>(model_dim)});
  for (size_t s = 0; s < lengths.size(); ++s)
    for (int t = 0; t < lengths[s]; ++t) {
      double* row = pe.data() + (offs[s] + static_cast<size_t>(t)) * pe.cols();
      for (int i = 0; i < model_dim / 2; ++i) {
        double rate = std::pow(10000.0, -2.0 * i / model_dim);
        row[2 * i] = std::sin(t * rate);
        if (2 * i + 1 < model_dim) row[2 * i + 1] = std::cos(t * rate);
      }
    }
  return pe;
}

inline Var layer_norm_affine(Graph& g, Var x, const ParamSet& ps, const std::string& prefix) {
  Var gain = use_param(g, ps, prefix + ".gain");
  Var bias = use_param(g, ps, prefix + ".bias");
  return add_rowvec(mul_rowvec(layer_norm_rows(x), gain), bias);
}

}  // namespace detail

// Multi-head self-attention per sentence plus feed-forward, both with
// residual connections and layer normalization.
inline SeqBatch transformer_encode(Graph& g, const ParamSet& ps, const std::string& prefix,
                                   const std::vector<int>& ids, const std::vector<int>& lengths,
                                   const TransformerSpec& spec) {
  if (spec.model_dim % spec.heads != 0)
    throw ConfigError("transformer_encode: model_dim not divisible by heads");
  auto offs = sentence_offsets(lengths);
  if (offs.back() != ids.size())
    throw ConfigError("transformer_encode: lengths do not sum to id count");
  int dh = spec.model_dim / spec.heads;

  Var x = embedding(g, ps, prefix + ".embed", ids);
  if (spec.positions == TransformerSpec::Position::Sinusoidal) {
    x = add(x, g.constant(detail::sinusoidal_positions(lengths, spec.model_dim)));
  } else if (spec.positions == TransformerSpec::Position::Learned) {
    std::vector<int> pos_ids;
    pos_ids.reserve(ids.size());
    for (int len : lengths)
      for (int t = 0; t < len; ++t) {
        if (t >= spec.max_positions)
          throw ConfigError("transformer_encode: sequence longer than max_positions");
        pos_ids.push_back(t);
      }
    x = add(x, embedding(g, ps, prefix + ".pos", pos_ids));
  }

  for (int l = 0; l < spec.layers; ++l) {
    std::string lp = prefix + ".l" + std::to_string(l);
    Var q = add_rowvec(matmul(x, use_param(g, ps, lp + ".wq")), use_param(g, ps, lp + ".bq"));
    Var k = add_rowvec(matmul(x, use_param(g, ps, lp + ".wk")), use_param(g, ps, lp + ".bk"));
    Var v = add_rowvec(matmul(x, use_param(g, ps, lp + ".wv")), use_param(g, ps, lp + ".bv"));

    std::vector<Var> ctx_parts;
    ctx_parts.reserve(lengths.size());
    for (size_t s = 0; s < lengths.size(); ++s) {
      size_t tlen = static_cast<size_t>(lengths[s]);
      Var qs = slice_rows(q, offs[s], tlen);
      Var ks = slice_rows(k, offs[s], tlen);
      Var vs = slice_rows(v, offs[s], tlen);
      std::vector<Var> heads;
      heads.reserve(static_cast<size_t>(spec.heads));
      for (int h = 0; h < spec.heads; ++h) {
        Var qh = slice_cols(qs, static_cast<size_t>(h * dh), static_cast<size_t>(dh));
        Var kh = slice_cols(ks, static_cast<size_t>(h * dh), static_cast<size_t>(dh));
        Var vh = slice_cols(vs, static_cast<size_t>(h * dh), static_cast<size_t>(dh));
        Var scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(static_cast<double>(dh)));
        Var attn = softmax_rows(scores);
        heads.push_back(matmul(attn, vh));
      }
      ctx_parts.push_back(concat_cols(heads));
    }
    Var ctx = concat_rows(ctx_parts);
    Var attn_out =
        add_rowvec(matmul(ctx, use_param(g, ps, lp + ".wo")), use_param(g, ps, lp + ".bo"));
    x = detail::layer_norm_affine(g, add(x, attn_out), ps, lp + ".ln1");

    Var h1 = relu(add_rowvec(matmul(x, use_param(g, ps, lp + ".ff.w1")),
                             use_param(g, ps, lp + ".ff.b1")));
    Var h2 = add_rowvec(matmul(h1, use_param(g, ps, lp + ".ff.w2")),
                        use_param(g, ps, lp + ".ff.b2"));
    x = detail::layer_norm_affine(g, add(x, h2), ps, lp + ".ln2");
  }
  return SeqBatch{x, lengths};
}

// ---------------------------------------------------------------------------
// Linear heads
// ---------------------------------------------------------------------------

inline void add_linear_params(ParamSet& ps, const std::string& prefix, size_t in_dim,
                              size_t out_dim, std::mt19937_64& rng) {
  ps.add(prefix + ".w", init_uniform({in_dim, out_dim}, rng));
  ps.add(prefix + ".b", Tensor::zeros({out_dim}));
}

inline Var linear(Graph& g, Var x, const ParamSet& ps, const std::string& prefix) {
  return add_rowvec(matmul(x, use_param(g, ps, prefix + ".w")), use_param(g, ps, prefix + ".b"));
}

}  // namespace pausekit::nn

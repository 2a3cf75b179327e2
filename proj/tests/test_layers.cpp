// tests/test_layers.cpp

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

#include <cmath>
#include <random>

#include "pausekit/nn/layers.hpp"
#include "testutil.hpp"

using namespace pausekit;
using namespace pausekit::nn;
using pausekit::testutil::fd_check;
using pausekit::testutil::project_to_scalar;
using pausekit::testutil::random_tensor;

namespace {

LstmSpec plain_spec(int in, int hidden) {
  LstmSpec s;
  s.input_dim = in;
  s.hidden_dim = hidden;
  return s;
}

LstmSpec full_spec(int in, int hidden, int proj) {
  LstmSpec s;
  s.input_dim = in;
  s.hidden_dim = hidden;
  s.options.peephole = true;
  s.options.projection_dim = proj;
  return s;
}

}  // namespace

TEST_CASE("lstm_step with all-zero weights gives zero output and state") {
  LstmSpec spec = full_spec(2, 3, 3);
  ParamSet ps;
  std::mt19937_64 rng(1);
  add_lstm_params(ps, "cell", spec, rng);
  for (const auto& name : ps.names()) ps.at(name).value.fill(0.0);

  Graph g;
  LstmVars v = bind_lstm(g, ps, "cell", spec);
  LstmState st = lstm_initial_state(g, spec, 1);
  Var x = g.constant(Tensor::from_matrix(1, 2, {0.7, -0.3}));
  auto [out, next] = lstm_step(g, x, st, v, spec);
  for (size_t i = 0; i < out.value().numel(); ++i) CHECK(out.value()[i] == 0.0);
  for (size_t i = 0; i < next.c.value().numel(); ++i) CHECK(next.c.value()[i] == 0.0);
}

TEST_CASE("lstm_step scalar cell matches hand-computed gate arithmetic") {
  LstmSpec spec = full_spec(1, 1, 1);
  ParamSet ps;
  std::mt19937_64 rng(1);
  add_lstm_params(ps, "cell", spec, rng);
  // gate order [i f g o]
  ps.at("cell.w_x").value = Tensor::from_matrix(1, 4, {0.5, -0.3, 0.8, 0.2});
  ps.at("cell.w_r").value = Tensor::from_matrix(1, 4, {0.1, 0.4, -0.2, 0.3});
  ps.at("cell.b").value = Tensor::from_vector({0.05, -0.1, 0.2, 0.0});
  ps.at("cell.p_i").value = Tensor::from_vector({0.6});
  ps.at("cell.p_f").value = Tensor::from_vector({-0.4});
  ps.at("cell.p_o").value = Tensor::from_vector({0.25});
  ps.at("cell.w_proj").value = Tensor::from_matrix(1, 1, {1.5});

  double x = 0.9, c0 = 0.3, r0 = -0.2;
  Graph g;
  LstmVars v = bind_lstm(g, ps, "cell", spec);
  LstmState st{g.constant(Tensor::from_matrix(1, 1, {c0})),
               g.constant(Tensor::from_matrix(1, 1, {r0}))};
  auto [out, next] = lstm_step(g, g.constant(Tensor::from_matrix(1, 1, {x})), st, v, spec);

  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  double zi = 0.5 * x + 0.1 * r0 + 0.6 * c0 + 0.05;
  double zf = -0.3 * x + 0.4 * r0 + -0.4 * c0 + -0.1;
  double zg = 0.8 * x + -0.2 * r0 + 0.2;
  double i = sig(zi), f = sig(zf), gg = std::tanh(zg);
  double c1 = f * c0 + i * gg;
  double zo = 0.2 * x + 0.3 * r0 + 0.25 * c1 + 0.0;
  double m = sig(zo) * std::tanh(c1);
  double expected = 1.5 * m;

  CHECK(out.value().item() == Catch::Approx(expected).epsilon(1e-12));
  CHECK(next.c.value().item() == Catch::Approx(c1).epsilon(1e-12));
}

TEST_CASE("identity projection of size hidden equals the plain LSTM step") {
  std::mt19937_64 rng(3);
  LstmSpec plain = plain_spec(2, 3);
  ParamSet ps;
  add_lstm_params(ps, "cell", plain, rng);

  LstmSpec projected = plain;
  projected.options.projection_dim = 3;
  ParamSet ps2;
  std::mt19937_64 rng2(3);
  add_lstm_params(ps2, "cell", projected, rng2);
  ps2.at("cell.w_x").value = ps.at("cell.w_x").value;
  ps2.at("cell.w_r").value = ps.at("cell.w_r").value;
  ps2.at("cell.b").value = ps.at("cell.b").value;
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(static_cast<size_t>(i), static_cast<size_t>(i)) = 1.0;
  ps2.at("cell.w_proj").value = eye;

  Tensor x = random_tensor({2, 2}, rng);
  Graph g1, g2;
  auto [o1, n1] = lstm_step(g1, g1.constant(x), lstm_initial_state(g1, plain, 2),
                            bind_lstm(g1, ps, "cell", plain), plain);
  auto [o2, n2] = lstm_step(g2, g2.constant(x), lstm_initial_state(g2, projected, 2),
                            bind_lstm(g2, ps2, "cell", projected), projected);
  for (size_t i = 0; i < o1.value().numel(); ++i)
    CHECK(o1.value()[i] == Catch::Approx(o2.value()[i]).epsilon(1e-12));
}

TEST_CASE("lstm_step rejects shape mismatches") {
  LstmSpec spec = plain_spec(3, 2);
  ParamSet ps;
  std::mt19937_64 rng(4);
  add_lstm_params(ps, "cell", spec, rng);
  Graph g;
  LstmVars v = bind_lstm(g, ps, "cell", spec);
  LstmState st = lstm_initial_state(g, spec, 1);
  Var bad = g.constant(Tensor::from_matrix(1, 2, {1.0, 2.0}));
  CHECK_THROWS_AS(lstm_step(g, bad, st, v, spec), ConfigError);
}

TEST_CASE("lstm and lstmp sequences pass finite-difference checks") {
  std::mt19937_64 rng(42);
  SECTION("plain LSTM") {
    LstmSpec spec = plain_spec(3, 4);
    ParamSet ps;
    add_lstm_params(ps, "cell", spec, rng);
    Tensor x = random_tensor({5, 3}, rng);
    std::vector<int> lengths = {3, 2};
    auto forward = [&](Graph& g, const ParamSet& p) {
      std::mt19937_64 proj_rng(7);
      LstmVars v = bind_lstm(g, p, "cell", spec);
      Var out = lstm_sequence(g, SeqBatch{g.constant(x), lengths}, v, spec, false);
      return project_to_scalar(g, out, proj_rng);
    };
    CHECK(fd_check(ps, forward) < 1e-4);
  }
  SECTION("peephole-projection LSTM, reversed") {
    LstmSpec spec = full_spec(3, 4, 2);
    ParamSet ps;
    add_lstm_params(ps, "cell", spec, rng);
    Tensor x = random_tensor({5, 3}, rng);
    std::vector<int> lengths = {2, 3};
    auto forward = [&](Graph& g, const ParamSet& p) {
      std::mt19937_64 proj_rng(9);
      LstmVars v = bind_lstm(g, p, "cell", spec);
      Var out = lstm_sequence(g, SeqBatch{g.constant(x), lengths}, v, spec, true);
      return project_to_scalar(g, out, proj_rng);
    };
    CHECK(fd_check(ps, forward) < 1e-4);
  }
  SECTION("bilstm over a ragged batch") {
    LstmSpec spec = full_spec(2, 3, 2);
    ParamSet ps;
    add_bilstm_params(ps, "bi", spec, rng);
    Tensor x = random_tensor({6, 2}, rng);
    std::vector<int> lengths = {4, 1, 1};
    auto forward = [&](Graph& g, const ParamSet& p) {
      std::mt19937_64 proj_rng(11);
      SeqBatch out = bilstm_forward(g, SeqBatch{g.constant(x), lengths}, p, "bi", spec);
      return project_to_scalar(g, out.data, proj_rng);
    };
    CHECK(fd_check(ps, forward) < 1e-4);
  }
}

TEST_CASE("bilstm output structure") {
  std::mt19937_64 rng(19);
  LstmSpec spec = plain_spec(2, 3);
  ParamSet ps;
  add_bilstm_params(ps, "bi", spec, rng);

  SECTION("length-1 sequence concatenates two single-step outputs") {
    Tensor x = random_tensor({1, 2}, rng);
    Graph g;
    SeqBatch out = bilstm_forward(g, SeqBatch{g.constant(x), {1}}, ps, "bi", spec);
    REQUIRE(out.data.value().cols() == 6);

    Graph g2;
    auto [f, nf] = lstm_step(g2, g2.constant(x), lstm_initial_state(g2, spec, 1),
                             bind_lstm(g2, ps, "bi.fwd", spec), spec);
    auto [b, nb] = lstm_step(g2, g2.constant(x), lstm_initial_state(g2, spec, 1),
                             bind_lstm(g2, ps, "bi.bwd", spec), spec);
    for (size_t i = 0; i < 3; ++i) {
      CHECK(out.data.value()[i] == Catch::Approx(f.value()[i]).epsilon(1e-12));
      CHECK(out.data.value()[3 + i] == Catch::Approx(b.value()[i]).epsilon(1e-12));
    }
  }

  SECTION("forward half equals a unidirectional run") {
    Tensor x = random_tensor({4, 2}, rng);
    Graph g;
    SeqBatch out = bilstm_forward(g, SeqBatch{g.constant(x), {4}}, ps, "bi", spec);
    Var fwd = lstm_sequence(g, SeqBatch{g.constant(x), {4}},
                            bind_lstm(g, ps, "bi.fwd", spec), spec, false);
    for (size_t t = 0; t < 4; ++t)
      for (size_t c = 0; c < 3; ++c)
        CHECK(out.data.value().at(t, c) == Catch::Approx(fwd.value().at(t, c)).epsilon(1e-12));
  }

  SECTION("reversing the input swaps the role of the two halves") {
    Tensor x = random_tensor({5, 2}, rng);
    Tensor xr({5, 2});
    for (size_t t = 0; t < 5; ++t)
      for (size_t c = 0; c < 2; ++c) xr.at(t, c) = x.at(4 - t, c);

    ParamSet swapped;
    std::mt19937_64 rng2(19);
    add_bilstm_params(swapped, "bi", spec, rng2);
    swapped.at("bi.fwd.w_x").value = ps.at("bi.bwd.w_x").value;
    swapped.at("bi.fwd.w_r").value = ps.at("bi.bwd.w_r").value;
    swapped.at("bi.fwd.b").value = ps.at("bi.bwd.b").value;
    swapped.at("bi.bwd.w_x").value = ps.at("bi.fwd.w_x").value;
    swapped.at("bi.bwd.w_r").value = ps.at("bi.fwd.w_r").value;
    swapped.at("bi.bwd.b").value = ps.at("bi.fwd.b").value;

    Graph g;
    SeqBatch out = bilstm_forward(g, SeqBatch{g.constant(x), {5}}, ps, "bi", spec);
    SeqBatch rev = bilstm_forward(g, SeqBatch{g.constant(xr), {5}}, swapped, "bi", spec);
    for (size_t t = 0; t < 5; ++t)
      for (size_t c = 0; c < 3; ++c) {
        CHECK(rev.data.value().at(t, c) ==
              Catch::Approx(out.data.value().at(4 - t, 3 + c)).epsilon(1e-10));
        CHECK(rev.data.value().at(t, 3 + c) ==
              Catch::Approx(out.data.value().at(4 - t, c)).epsilon(1e-10));
      }
  }

  SECTION("batched run equals per-sentence runs") {
    Tensor xa = random_tensor({2, 2}, rng);
    Tensor xb = random_tensor({4, 2}, rng);
    Tensor both({6, 2});
    for (size_t i = 0; i < 4; ++i) both[i] = xa[i];
    for (size_t i = 0; i < 8; ++i) both[4 + i] = xb[i];

    Graph g;
    SeqBatch batched = bilstm_forward(g, SeqBatch{g.constant(both), {2, 4}}, ps, "bi", spec);
    SeqBatch only_a = bilstm_forward(g, SeqBatch{g.constant(xa), {2}}, ps, "bi", spec);
    SeqBatch only_b = bilstm_forward(g, SeqBatch{g.constant(xb), {4}}, ps, "bi", spec);
    for (size_t i = 0; i < only_a.data.value().numel(); ++i)
      CHECK(batched.data.value()[i] == Catch::Approx(only_a.data.value()[i]).epsilon(1e-12));
    for (size_t i = 0; i < only_b.data.value().numel(); ++i)
      CHECK(batched.data.value()[only_a.data.value().numel() + i] ==
            Catch::Approx(only_b.data.value()[i]).epsilon(1e-12));
  }

  SECTION("empty batch is rejected") {
    Graph g;
    Var x = g.constant(random_tensor({2, 2}, rng));
    CHECK_THROWS_AS(bilstm_forward(g, SeqBatch{x, {}}, ps, "bi", spec), DataError);
  }
}

TEST_CASE("transformer encoder") {
  TransformerSpec spec;
  spec.layers = 1;
  spec.heads = 2;
  spec.model_dim = 8;
  spec.ff_dim = 12;
  std::mt19937_64 rng(23);

  SECTION("model_dim must be divisible by heads") {
    TransformerSpec bad = spec;
    bad.model_dim = 9;
    ParamSet ps;
    CHECK_THROWS_AS(add_transformer_params(ps, "enc", 10, bad, rng), ConfigError);
  }

  SECTION("output shape is (sequence length, model_dim)") {
    ParamSet ps;
    add_transformer_params(ps, "enc", 10, spec, rng);
    Graph g;
    SeqBatch out = transformer_encode(g, ps, "enc", {1, 4, 2, 7, 0}, {3, 2}, spec);
    CHECK(out.data.value().rows() == 5);
    CHECK(out.data.value().cols() == 8);
    CHECK(out.data.value().all_finite());
  }

  SECTION("single-position attention is constant regardless of the query map") {
    // with one key the softmax is the constant 1, so the output cannot
    // depend on the query projection
    ParamSet ps;
    add_transformer_params(ps, "enc", 10, spec, rng);
    Graph g;
    SeqBatch a = transformer_encode(g, ps, "enc", {3}, {1}, spec);
    ParamSet ps2;
    std::mt19937_64 rng2(23);
    add_transformer_params(ps2, "enc", 10, spec, rng2);
    ps2.at("enc.l0.wq").value.fill(0.0);
    ps2.at("enc.l0.bq").value.fill(0.0);
    SeqBatch b = transformer_encode(g, ps2, "enc", {3}, {1}, spec);
    for (size_t i = 0; i < a.data.value().numel(); ++i)
      CHECK(a.data.value()[i] == Catch::Approx(b.data.value()[i]).epsilon(1e-12));
  }

  SECTION("without positional encodings the encoder is permutation-equivariant") {
    TransformerSpec nopos = spec;
    nopos.positions = TransformerSpec::Position::None;
    ParamSet ps;
    add_transformer_params(ps, "enc", 10, nopos, rng);
    Graph g;
    std::vector<int> ids = {2, 5, 1, 8};
    std::vector<int> perm = {1, 8, 2, 5};  // permutation: positions (2,3,0,1)
    SeqBatch out = transformer_encode(g, ps, "enc", ids, {4}, nopos);
    SeqBatch pout = transformer_encode(g, ps, "enc", perm, {4}, nopos);
    size_t map[4] = {2, 3, 0, 1};
    for (size_t t = 0; t < 4; ++t)
      for (size_t c = 0; c < 8; ++c)
        CHECK(pout.data.value().at(map[t], c) ==
              Catch::Approx(out.data.value().at(t, c)).epsilon(1e-9).margin(1e-12));
  }

  SECTION("with sinusoidal positions permuting tokens changes outputs") {
    ParamSet ps;
    add_transformer_params(ps, "enc", 10, spec, rng);
    Graph g;
    SeqBatch out = transformer_encode(g, ps, "enc", {2, 5, 1}, {3}, spec);
    SeqBatch pout = transformer_encode(g, ps, "enc", {5, 2, 1}, {3}, spec);
    double diff = 0.0;
    for (size_t c = 0; c < 8; ++c)
      diff += std::fabs(out.data.value().at(2, c) - pout.data.value().at(2, c));
    CHECK(diff > 1e-6);
  }

  SECTION("gradients pass finite differences") {
    ParamSet ps;
    add_transformer_params(ps, "enc", 6, spec, rng);
    std::vector<int> ids = {0, 3, 5, 2};
    std::vector<int> lengths = {2, 2};
    auto forward = [&](Graph& g, const ParamSet& p) {
      std::mt19937_64 proj_rng(13);
      SeqBatch out = transformer_encode(g, p, "enc", ids, lengths, spec);
      return project_to_scalar(g, out.data, proj_rng);
    };
    CHECK(fd_check(ps, forward) < 1e-4);
  }

  SECTION("learned positions reject over-long sequences") {
    TransformerSpec learned = spec;
    learned.positions = TransformerSpec::Position::Learned;
    learned.max_positions = 2;
    ParamSet ps;
    add_transformer_params(ps, "enc", 6, learned, rng);
    Graph g;
    CHECK_THROWS_AS(transformer_encode(g, ps, "enc", {0, 1, 2}, {3}, learned), ConfigError);
  }
}

TEST_CASE("linear heads pass finite differences") {
  std::mt19937_64 rng(31);
  ParamSet ps;
  add_linear_params(ps, "head.prob", 5, 1, rng);
  add_linear_params(ps, "head.cat", 5, 4, rng);
  Tensor x = random_tensor({6, 5}, rng);
  Tensor targets = Tensor::from_vector({1, 0, 0, 1, 0, 1});
  Tensor mask = Tensor::full({6}, 1.0);
  std::vector<int> cat_targets = {0, 2, 1, 3, 0, 2};
  std::vector<double> weights = {1.0, 3.0, 2.0, 1.0};
  auto forward = [&](Graph& g, const ParamSet& p) {
    Var h = g.constant(x);
    Var prob = sigmoid(linear(g, h, p, "head.prob"));
    Var cat = linear(g, h, p, "head.cat");
    return add(bce_loss(prob, targets, mask), wce_loss(cat, cat_targets, weights, mask));
  };
  CHECK(fd_check(ps, forward) < 1e-4);
}

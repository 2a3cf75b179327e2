// tests/testutil.hpp

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

#pragma once

#include <functional>
#include <random>
#include <string>

#include "pausekit/nn/layers.hpp"

namespace pausekit::testutil {

// Central finite-difference check of every trainable parameter against the
// analytic reverse-mode gradients. `forward` must rebuild the loss from the
// current parameter values. Returns the maximum relative error.
inline double fd_check(nn::ParamSet& params,
                       const std::function<nn::Var(nn::Graph&, const nn::ParamSet&)>& forward,
                       double eps = 1e-5) {
  nn::Graph g;
  nn::Var loss = forward(g, params);
  g.backward(loss);
  auto grads = g.gradients();

  double max_rel = 0.0;
  auto eval = [&]() {
    nn::Graph g2;
    return forward(g2, params).value().item();
  };
  for (const auto& name : params.names()) {
    nn::Param& p = params.at(name);
    if (!p.trainable) continue;
    auto it = grads.find(name);
    for (size_t i = 0; i < p.value.numel(); ++i) {
      double saved = p.value[i];
      p.value[i] = saved + eps;
      double up = eval();
      p.value[i] = saved - eps;
      double down = eval();
      p.value[i] = saved;
      double fd = (up - down) / (2.0 * eps);
      double analytic = it == grads.end() ? 0.0 : it->second[i];
      double rel = std::fabs(fd - analytic) / std::max({1e-3, std::fabs(fd), std::fabs(analytic)});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

inline nn::Tensor random_tensor(std::vector<size_t> shape, std::mt19937_64& rng,
                                double scale = 1.0) {
  nn::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (size_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
  return t;
}

// Random projection to a scalar so every output element carries gradient.
inline nn::Var project_to_scalar(nn::Graph& g, nn::Var x, std::mt19937_64& rng) {
  nn::Tensor r(x.value().shape());
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (size_t i = 0; i < r.numel(); ++i) r[i] = dist(rng);
  return nn::sum_all(nn::mul(x, g.constant(r)));
}

}  // namespace pausekit::testutil

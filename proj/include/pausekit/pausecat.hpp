// pausekit/pausecat.hpp

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

// Duration categorization: a 1-D Gaussian mixture is fitted to pause
// durations with EM, the cut-off points between adjacent components are
// located, rounded to whole hundreds of milliseconds, and used as category
// thresholds.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pausekit/error.hpp"

namespace pausekit {

inline constexpr double kVarianceFloorMs2 = 1.0;

// 1-D Gaussian mixture, components sorted by mean.
struct Gmm1D {
  std::vector<double> weights;
  std::vector<double> means;      // ms
  std::vector<double> variances;  // ms^2, >= kVarianceFloorMs2

  int k() const { return static_cast<int>(means.size()); }
};

// Threshold set in whole hundreds of ms; with the defaults a duration below
// 300 ms is category 1, 300-700 ms category 2 and above 700 ms category 3.
struct DurationCategorizer {
  std::vector<int> thresholds_ms;

  static DurationCategorizer defaults() { return DurationCategorizer{{300, 700}}; }
  int categories() const { return static_cast<int>(thresholds_ms.size()) + 1; }
};

struct CutoffPoint {
  double x_ms = 0.0;
  bool midpoint_fallback = false;  // no interior density crossing existed
};

struct GmmFitTrace {
  std::vector<double> log_likelihoods;  // one per completed EM pass (plus init)
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double var) {
  static const double kLog2Pi = std::log(2.0 * M_PI);
  double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

inline double log_sum_exp(const std::vector<double>& v) {
  double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double gmm_log_likelihood(const Gmm1D& g, const std::vector<double>& xs) {
  double ll = 0.0;
  std::vector<double> terms(g.k());
  for (double x : xs) {
    for (int j = 0; j < g.k(); ++j)
      terms[j] = std::log(g.weights[j]) + log_normal_pdf(x, g.means[j], g.variances[j]);
    ll += log_sum_exp(terms);
  }
  return ll;
}

inline void sort_by_mean(Gmm1D& g) {
  std::vector<int> order(g.k());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return g.means[a] < g.means[b]; });
  Gmm1D sorted;
  for (int j : order) {
    sorted.weights.push_back(g.weights[j]);
    sorted.means.push_back(g.means[j]);
    sorted.variances.push_back(g.variances[j]);
  }
  g = std::move(sorted);
}

}  // namespace detail

// Fits a K-component 1-D GMM by EM. Initialization is deterministic:
// k-quantile means, pooled variance and uniform weights; the seed parameter
// is reserved for alternative initializers and is currently unused. Stops
// when the relative log-likelihood improvement falls below tol or after
// max_iter passes. Log-likelihood is checked to be non-decreasing each pass.
inline Gmm1D fit_gmm(const std::vector<double>& durations, int k, int max_iter = 500,
                     double tol = 1e-7, std::uint64_t seed = 0, GmmFitTrace* trace = nullptr) {
  (void)seed;
  if (k < 1) throw ConfigError("fit_gmm: component count must be >= 1");
  if (static_cast<int>(durations.size()) < k)
    throw DataError("fit_gmm: fewer samples (" + std::to_string(durations.size()) +
                    ") than components (" + std::to_string(k) + ")");
  for (double d : durations)
    if (!(d > 0.0)) throw DataError("fit_gmm: durations must be positive");
  if (k > 1) {
    std::set<double> distinct(durations.begin(), durations.end());
    if (static_cast<int>(distinct.size()) < k)
      throw DataError("fit_gmm: degenerate data, fewer distinct values than components");
  }

  const size_t n = durations.size();
  std::vector<double> sorted(durations);
  std::sort(sorted.begin(), sorted.end());

  double mean_all = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  double var_all = 0.0;
  for (double x : sorted) var_all += (x - mean_all) * (x - mean_all);
  var_all = std::max(var_all / static_cast<double>(n), kVarianceFloorMs2);

  Gmm1D g;
  for (int j = 0; j < k; ++j) {
    size_t q = std::min(n - 1, static_cast<size_t>((j + 0.5) / k * static_cast<double>(n)));
    g.weights.push_back(1.0 / k);
    g.means.push_back(sorted[q]);
    g.variances.push_back(var_all);
  }

  double ll_prev = detail::gmm_log_likelihood(g, durations);
  if (trace) trace->log_likelihoods.push_back(ll_prev);
  if (std::isinf(tol)) {  // any improvement satisfies convergence
    detail::sort_by_mean(g);
    return g;
  }

  std::vector<double> resp(n * k);
  std::vector<double> terms(k);
  for (int iter = 0; iter < max_iter; ++iter) {
    // E-step in the log domain.
    for (size_t i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j)
        terms[j] = std::log(g.weights[j]) +
                   detail::log_normal_pdf(durations[i], g.means[j], g.variances[j]);
      double lse = detail::log_sum_exp(terms);
      for (int j = 0; j < k; ++j) resp[i * k + j] = std::exp(terms[j] - lse);
    }
    // M-step.
    for (int j = 0; j < k; ++j) {
      double nj = 0.0, sx = 0.0;
      for (size_t i = 0; i < n; ++i) {
        nj += resp[i * k + j];
        sx += resp[i * k + j] * durations[i];
      }
      if (nj <= 0.0) throw DataError("fit_gmm: component " + std::to_string(j) + " collapsed");
      double mu = sx / nj;
      double sv = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double d = durations[i] - mu;
        sv += resp[i * k + j] * d * d;
      }
      g.weights[j] = nj / static_cast<double>(n);
      g.means[j] = mu;
      g.variances[j] = std::max(sv / nj, kVarianceFloorMs2);
    }

    double ll = detail::gmm_log_likelihood(g, durations);
    if (trace) trace->log_likelihoods.push_back(ll);
    double scale = std::max(1.0, std::fabs(ll_prev));
    if (ll + 1e-9 * scale < ll_prev)
      throw InternalError("fit_gmm: log-likelihood decreased at iteration " +
                          std::to_string(iter));
    double rel = (ll - ll_prev) / scale;
    ll_prev = ll;
    if (rel < tol) break;
  }

  detail::sort_by_mean(g);
  return g;
}

// For each adjacent component pair (sorted by mean), the point strictly
// between the means where the weighted densities are equal. When no interior
// crossing exists the midpoint of the means is used and flagged.
inline std::vector<CutoffPoint> find_cutoffs(const Gmm1D& gmm) {
  if (gmm.k() < 2) throw ConfigError("find_cutoffs: need at least two components");
  std::vector<CutoffPoint> cutoffs;
  for (int j = 0; j + 1 < gmm.k(); ++j) {
    double m1 = gmm.means[j], m2 = gmm.means[j + 1];
    double v1 = gmm.variances[j], v2 = gmm.variances[j + 1];
    double w1 = gmm.weights[j], w2 = gmm.weights[j + 1];
    double lo = std::min(m1, m2), hi = std::max(m1, m2);

    // log(w1 N(x;m1,v1)) = log(w2 N(x;m2,v2)) is quadratic in x:
    // a x^2 + b x + c = 0.
    double a = 0.5 / v2 - 0.5 / v1;
    double b = m1 / v1 - m2 / v2;
    double c = m2 * m2 / (2.0 * v2) - m1 * m1 / (2.0 * v1) + std::log(w1 / w2) +
               0.5 * std::log(v2 / v1);

    std::vector<double> roots;
    if (std::fabs(a) < 1e-15) {
      if (std::fabs(b) > 1e-15) roots.push_back(-c / b);
    } else {
      double disc = b * b - 4.0 * a * c;
      if (disc >= 0.0) {
        double sq = std::sqrt(disc);
        roots.push_back((-b + sq) / (2.0 * a));
        roots.push_back((-b - sq) / (2.0 * a));
      }
    }
    std::vector<double> interior;
    for (double r : roots)
      if (r > lo && r < hi) interior.push_back(r);

    CutoffPoint cp;
    if (interior.size() == 1) {
      cp.x_ms = interior.front();
    } else {
      cp.x_ms = 0.5 * (m1 + m2);
      cp.midpoint_fallback = true;
    }
    cutoffs.push_back(cp);
  }
  return cutoffs;
}

// Rounds each cut-off to the nearest multiple of 100 ms (ties round up).
// Throws when rounding collapses or disorders the thresholds.
inline DurationCategorizer round_thresholds(const std::vector<CutoffPoint>& cutoffs) {
  if (cutoffs.empty()) throw ConfigError("round_thresholds: no cut-off points");
  DurationCategorizer cat;
  for (const auto& cp : cutoffs) {
    int t = static_cast<int>(std::floor(cp.x_ms / 100.0 + 0.5)) * 100;
    if (t <= 0)
      throw DataError("round_thresholds: cut-off " + std::to_string(cp.x_ms) +
                      " rounds to a non-positive threshold");
    if (!cat.thresholds_ms.empty() && t <= cat.thresholds_ms.back())
      throw DataError("round_thresholds: thresholds collapse at " + std::to_string(t) + " ms");
    cat.thresholds_ms.push_back(t);
  }
  return cat;
}

// Category of a duration. The first threshold is inclusive upward and later
// thresholds are exclusive upward, so with thresholds {300, 700} both 300 ms
// and 700 ms fall in category 2.
inline int categorize(double duration_ms, const DurationCategorizer& cat) {
  if (!(duration_ms > 0.0)) throw DataError("categorize: duration must be positive");
  int category = 1;
  for (size_t j = 0; j < cat.thresholds_ms.size(); ++j) {
    bool above = j == 0 ? duration_ms >= cat.thresholds_ms[j]
                        : duration_ms > cat.thresholds_ms[j];
    if (above) category = static_cast<int>(j) + 2;
  }
  return category;
}

// Fitted mixture plus the derived thresholds, as written by `fit-categories`.
struct CategorizerModel {
  Gmm1D gmm;  // may be empty (k == 0) when thresholds were set directly
  DurationCategorizer categorizer;
};

inline void save_categorizer(const std::string& path, const CategorizerModel& model) {
  nlohmann::json j;
  j["k"] = model.gmm.k();
  j["weights"] = model.gmm.weights;
  j["means"] = model.gmm.means;
  j["variances"] = model.gmm.variances;
  j["thresholds"] = model.categorizer.thresholds_ms;
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open categorizer file for writing: " + path);
  out << j.dump(2) << "\n";
}

inline CategorizerModel load_categorizer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open categorizer file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed categorizer file " + path + ": " + e.what());
  }
  CategorizerModel model;
  try {
    model.gmm.weights = j.at("weights").get<std::vector<double>>();
    model.gmm.means = j.at("means").get<std::vector<double>>();
    model.gmm.variances = j.at("variances").get<std::vector<double>>();
    model.categorizer.thresholds_ms = j.at("thresholds").get<std::vector<int>>();
    if (j.at("k").get<int>() != model.gmm.k())
      throw ParseError("categorizer file " + path + ": k does not match component arrays");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("categorizer file " + path + " missing fields: " + e.what());
  }
  for (size_t i = 1; i < model.categorizer.thresholds_ms.size(); ++i)
    if (model.categorizer.thresholds_ms[i] <= model.categorizer.thresholds_ms[i - 1])
      throw ParseError("categorizer file " + path + ": thresholds not ascending");
  return model;
}

}  // namespace pausekit

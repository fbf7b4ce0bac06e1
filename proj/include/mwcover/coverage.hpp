// Copyright 2026 The mwcover Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Coverage measurement and the closed-form coverage bounds.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "mwcover/core.hpp"
#include "mwcover/rng.hpp"

namespace mwcover {

class UndefinedSubsetError : public std::domain_error {
 public:
  UndefinedSubsetError() : std::domain_error("subset has zero target mass") {}
};

/// x is delta-covered when g >= delta p (non-strict).
inline bool is_delta_covered(double g_val, double p_val, double delta) { return g_val >= delta * p_val; }

inline double subset_cover_ratio(double g_mass, double p_mass) {
  if (!(p_mass > 0.0)) throw UndefinedSubsetError();
  return g_mass / p_mass;
}

// ---------------------------------------------------------------------------
// (delta, beta)-cover estimates
// ---------------------------------------------------------------------------

struct BetaEstimate {
  double beta = 0.0;
  /// Zero for exact evaluation on a discrete Q.
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Exact Pr_{x~Q}[g(x) >= delta p(x)] on a discrete Q given aligned values.
inline double delta_beta_exact(std::span<const double> g, std::span<const double> p, std::span<const double> q,
                               double delta) {
  if (g.size() != p.size() || p.size() != q.size()) throw ContractViolation("coverage inputs must be aligned");
  double b = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (is_delta_covered(g[i], p[i], delta)) b += q[i];
  }
  return std::clamp(b, 0.0, 1.0);
}

using PdfFn = std::function<double(std::span<const double>)>;
using SamplerFn = std::function<PointSet(std::size_t, std::uint64_t)>;

/// Monte Carlo estimate over samples of Q, with the binomial standard error.
inline BetaEstimate delta_beta_estimate(const PdfFn& g, const PdfFn& p, const SamplerFn& q, double delta,
                                        std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ConfigError("delta_beta_estimate needs samples");
  const PointSet xs = q(n_samples, seed);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (is_delta_covered(g(xs[i]), p(xs[i]), delta)) ++hit;
  }
  const double n = static_cast<double>(xs.size());
  const double b = static_cast<double>(hit) / n;
  return {b, std::sqrt(b * (1.0 - b) / n), xs.size()};
}

// ---------------------------------------------------------------------------
// Pointwise coverage and worst subsets
// ---------------------------------------------------------------------------

struct WorstSubset {
  std::vector<std::size_t> indices;
  double ratio = std::numeric_limits<double>::infinity();
  double mass = 0.0;
};

struct CoverageReport {
  double psi_hat = 0.0;
  std::vector<double> ratios;
  WorstSubset worst_subset;
};

/// Prefix search on ratio-sorted points: every prefix whose cumulative
/// target mass reaches `mass_lb` is a candidate; the one with the smallest
/// G(S)/P(S) wins. Exact for equal masses.
inline WorstSubset worst_subset(std::span<const double> ratios, std::span<const double> p, double mass_lb) {
  if (ratios.size() != p.size()) throw ContractViolation("coverage inputs must be aligned");
  if (!(mass_lb > 0.0 && mass_lb <= 1.0)) throw ConfigError("subset mass bound must lie in (0, 1]");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ratios[a] < ratios[b]; });
  WorstSubset best;
  double gm = 0.0, pm = 0.0;
  std::size_t best_len = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    gm += ratios[order[k]] * p[order[k]];
    pm += p[order[k]];
    if (pm + 1e-12 < mass_lb) continue;
    const double r = gm / pm;
    if (r < best.ratio) {
      best.ratio = r;
      best.mass = pm;
      best_len = k + 1;
    }
  }
  best.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_len));
  std::sort(best.indices.begin(), best.indices.end());
  return best;
}

/// Minimum of G(S)/P(S) over all subsets with P(S) >= mass_lb, by
/// enumeration (support of at most 20 points).
inline WorstSubset worst_subset_exhaustive(std::span<const double> g, std::span<const double> p, double mass_lb) {
  if (g.size() != p.size()) throw ContractViolation("coverage inputs must be aligned");
  if (p.size() > 20) throw UnsupportedOperation("exhaustive subset search limited to 20 points");
  WorstSubset best;
  std::uint64_t best_mask = 0;
  const std::uint64_t total = std::uint64_t{1} << p.size();
  for (std::uint64_t mask = 1; mask < total; ++mask) {
    double gm = 0.0, pm = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (mask >> i & 1U) {
        gm += g[i];
        pm += p[i];
      }
    }
    if (pm <= 0.0 || pm + 1e-12 < mass_lb) continue;
    const double r = gm / pm;
    if (r < best.ratio) {
      best.ratio = r;
      best.mass = pm;
      best_mask = mask;
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (best_mask >> i & 1U) best.indices.push_back(i);
  }
  return best;
}

/// psi_hat = min over the support of g*(x)/p(x), with per-point ratios and
/// the worst subset of mass at least `mass_lb`.
inline CoverageReport pointwise_psi(std::span<const double> g_star, std::span<const double> p, double mass_lb) {
  if (g_star.size() != p.size()) throw ContractViolation("coverage inputs must be aligned");
  CoverageReport r;
  r.ratios.resize(p.size());
  r.psi_hat = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    r.ratios[i] = p[i] > 0.0 ? g_star[i] / p[i] : std::numeric_limits<double>::infinity();
    r.psi_hat = std::min(r.psi_hat, r.ratios[i]);
  }
  r.worst_subset = worst_subset(r.ratios, p, mass_lb);
  return r;
}

inline nlohmann::json to_json(const CoverageReport& r) {
  return {{"psi_hat", r.psi_hat},
          {"worst_subset", {{"indices", r.worst_subset.indices}, {"ratio", r.worst_subset.ratio},
                            {"mass", r.worst_subset.mass}}},
          {"ratios", r.ratios}};
}

// ---------------------------------------------------------------------------
// Bound formulas
// ---------------------------------------------------------------------------

struct TheoryParams {
  double delta = 0.25;
  double gamma = 0.1;
  double eta = 0.01;
  double epsilon = 0.0;
  double epsilon_prime = 0.0;
  double lambda = 1.0;
  double delta_prime = 0.25;
};

inline double lemma1_bound(double delta, double gamma) { return 1.0 - 2.0 * delta - gamma; }

inline double lemma2_bound(double delta, double epsilon, double eta) {
  return (1.0 - epsilon / kLn2 - eta) * delta;
}

inline double theorem1_bound(double delta, double gamma, double eta) {
  return (1.0 - (gamma + 2.0 * delta) / kLn2 - eta) * delta;
}

inline double imperfect_disc_bound(const TheoryParams& t) {
  return (1.0 - (t.gamma + 2.0 * t.delta + t.epsilon_prime) / kLn2 - t.eta) * t.delta_prime * t.lambda;
}

inline double game_bound(double delta, double gamma) { return (1.0 - 2.0 * delta - gamma) * delta; }

inline bool is_vacuous(double bound) { return !(bound > 0.0); }

struct OptimalDelta {
  double delta = 0.0;
  /// Set when the raw value fell outside [0, 0.5].
  bool clamped = false;
};

inline OptimalDelta optimal_delta(double gamma, double eta) {
  const double raw = ((1.0 - eta) * kLn2 - gamma) / 4.0;
  const double v = std::clamp(raw, 0.0, 0.5);
  return {v, v != raw};
}

inline double generalization_sample_size(double epsilon, double rounds, double log2_family_size, double c) {
  if (!(epsilon > 0.0 && epsilon < 1.0 + 1e-15)) throw ConfigError("epsilon must lie in (0, 1]");
  if (rounds < 1.0 || !(log2_family_size > 0.0)) throw ConfigError("need rounds >= 1 and log2|G| > 0");
  return c * rounds * log2_family_size / epsilon;
}

// ---------------------------------------------------------------------------
// Empirical mode metrics
// ---------------------------------------------------------------------------

/// Per-mode flag: at least frac * N / M samples lie within 3 sigma0 of the
/// center, where N is the sample count and M the number of centers.
inline std::vector<bool> covered_modes(const PointSet& samples, const PointSet& centers, double sigma0,
                                       double frac = 0.01) {
  if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be > 0");
  std::vector<bool> out(centers.size(), false);
  if (samples.empty() || centers.empty()) return out;
  const double r2 = 9.0 * sigma0 * sigma0;
  const double need = frac * static_cast<double>(samples.size()) / static_cast<double>(centers.size());
  std::vector<std::size_t> hits(centers.size(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (squared_distance(samples[i], centers[c]) <= r2) ++hits[c];
    }
  }
  for (std::size_t c = 0; c < centers.size(); ++c) out[c] = static_cast<double>(hits[c]) >= need;
  return out;
}

inline std::size_t mode_coverage_count(const PointSet& samples, const PointSet& centers, double sigma0,
                                       double frac = 0.01) {
  const auto f = covered_modes(samples, centers, sigma0, frac);
  return static_cast<std::size_t>(std::count(f.begin(), f.end(), true));
}

/// Per-round share of the total weight held by `minority`, from each round's
/// starting weights. Doubling counts are replayed from the initial weights.
inline std::vector<double> minority_weight_ratio(const std::vector<double>& log2_initial,
                                                 const std::vector<std::vector<bool>>& flags_per_round,
                                                 const std::vector<std::size_t>& minority) {
  for (std::size_t i : minority) {
    if (i >= log2_initial.size()) throw ConfigError("minority index out of range");
  }
  std::vector<double> lw(log2_initial);
  std::vector<double> out;
  auto share = [&] {
    std::vector<double> sub;
    for (std::size_t i : minority) sub.push_back(lw[i]);
    return minority.empty() ? 0.0 : std::exp2(log2_sum_exp2(sub) - log2_sum_exp2(lw));
  };
  out.push_back(share());
  for (const auto& f : flags_per_round) {
    if (f.size() != lw.size()) throw ContractViolation("flag vector length mismatch");
    for (std::size_t i = 0; i < lw.size(); ++i) {
      if (f[i]) lw[i] += 1.0;
    }
    out.push_back(share());
  }
  return out;
}

/// Mean natural-log density of `eval` under an isotropic Gaussian KDE on
/// `centers` with bandwidth h.
inline double kde_mean_loglik(const PointSet& centers, const PointSet& eval, double bandwidth = 0.1) {
  if (!(bandwidth > 0.0)) throw ConfigError("bandwidth must be > 0");
  if (centers.empty() || eval.empty()) throw ConfigError("kde likelihood needs centers and evaluation points");
  const double d = static_cast<double>(centers.dim());
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi * bandwidth * bandwidth) -
                          std::log(static_cast<double>(centers.size()));
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  double total = 0.0;
  std::vector<double> e(centers.size());
  for (std::size_t j = 0; j < eval.size(); ++j) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < centers.size(); ++i) m = std::max(m, e[i] = -squared_distance(eval[j], centers[i]) * inv);
    double s = 0.0;
    for (double v : e) s += std::exp(v - m);
    total += log_norm + m + std::log(s);
  }
  return total / static_cast<double>(eval.size());
}

}  // namespace mwcover

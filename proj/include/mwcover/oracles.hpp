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

// Randomized and exhaustive checks of the coverage lemmas on small discrete
// instances. Every trial has its own seed, so results do not depend on the
// thread count.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mwcover/boost.hpp"
#include "mwcover/core.hpp"
#include "mwcover/coverage.hpp"
#include "mwcover/generators.hpp"
#include "mwcover/rng.hpp"

namespace mwcover {

inline constexpr double kOracleSlack = 1e-12;

struct OracleReport {
  std::string suite;
  std::size_t trials = 0;
  std::size_t violations = 0;
  /// Smallest (observed - bound) over all trials; negative on violation.
  double worst_margin = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
  /// Suite-specific extra counters.
  nlohmann::json extra = nlohmann::json::object();
  std::optional<nlohmann::json> first_violation;

  bool ok() const noexcept { return violations == 0; }

  nlohmann::json to_json() const {
    nlohmann::json j{{"suite", suite},   {"trials", trials},         {"violations", violations},
                     {"seed", seed},     {"worst_margin", worst_margin}, {"params", params},
                     {"extra", extra}};
    j["first_violation"] = first_violation ? *first_violation : nlohmann::json(nullptr);
    return j;
  }
};

namespace detail {

struct TrialOutcome {
  double margin = std::numeric_limits<double>::infinity();
  bool violated = false;
  nlohmann::json instance;
  nlohmann::json extra;
};

/// Runs fn(trial) for every trial, on up to `threads` threads, and returns
/// the outcomes in trial order.
template <class Fn>
std::vector<TrialOutcome> run_trials(std::size_t trials, unsigned threads, Fn&& fn) {
  std::vector<TrialOutcome> out(trials);
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(trials, 1))));
  if (threads == 1) {
    for (std::size_t t = 0; t < trials; ++t) out[t] = fn(t);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < trials; t += threads) out[t] = fn(t);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

inline void reduce(OracleReport& r, const std::vector<TrialOutcome>& outcomes) {
  r.trials = outcomes.size();
  for (const auto& o : outcomes) {
    r.worst_margin = std::min(r.worst_margin, o.margin);
    if (o.violated) {
      ++r.violations;
      if (!r.first_violation) r.first_violation = o.instance;
    }
  }
}

inline std::vector<double> random_simplex(std::size_t n, Rng& rng) { return flat_dirichlet(n, rng); }

inline PointSet line_support(std::size_t n) {
  PointSet s(1);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    s.push_back(std::span<const double>(&x, 1));
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lemma 1: (delta, 1 - 2 delta - gamma)-cover
// ---------------------------------------------------------------------------

/// Candidate regions for the coverage adversary: single points, prefixes of
/// the points ordered by p/q descending (cheapest to uncover per unit of Q
/// mass first), and a few random subsets.
inline std::vector<std::vector<std::size_t>> adversary_regions(std::span<const double> p, std::span<const double> q,
                                                               Rng& rng, std::size_t random_regions = 4) {
  const std::size_t n = p.size();
  std::vector<std::vector<std::size_t>> regions;
  for (std::size_t i = 0; i < n; ++i) regions.push_back({i});
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] * q[b] > p[b] * q[a]; });
  for (std::size_t k = 2; k <= n; ++k) regions.emplace_back(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::bernoulli_distribution coin(0.5);
  for (std::size_t r = 0; r < random_regions; ++r) {
    std::vector<std::size_t> reg;
    for (std::size_t i = 0; i < n; ++i) {
      if (coin(rng)) reg.push_back(i);
    }
    if (!reg.empty()) regions.push_back(std::move(reg));
  }
  return regions;
}

struct Lemma1Options {
  std::size_t trials = 1000;
  std::size_t support_size = 10;
  double delta = 0.25;
  double gamma = 0.1;
  /// Added to the bound before comparing; positive values probe tightness.
  double threshold_shift = 0.0;
  /// Overrides 1 - 2 delta - gamma when set.
  std::optional<double> threshold;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

inline OracleReport check_lemma1(const Lemma1Options& o) {
  if (!(o.delta > 0.0 && o.delta <= 1.0) || !(o.gamma >= 0.0 && o.gamma <= 1.0)) {
    throw ConfigError("lemma1 oracle needs delta in (0, 1] and gamma in [0, 1]");
  }
  if (o.support_size < 2) throw ConfigError("lemma1 oracle needs at least 2 support points");
  const double bound = (o.threshold ? *o.threshold : lemma1_bound(o.delta, o.gamma)) + o.threshold_shift;
  const PointSet support = detail::line_support(o.support_size);

  OracleReport rep;
  rep.suite = "lemma1";
  rep.seed = o.seed;
  rep.params = {{"trials", o.trials},   {"support_size", o.support_size}, {"delta", o.delta},
                {"gamma", o.gamma},     {"threshold", bound}};
  auto outcomes = detail::run_trials(o.trials, o.threads, [&](std::size_t trial) {
    Rng rng(split_seed(o.seed, Stream::kTrial, trial));
    const auto p = detail::random_simplex(o.support_size, rng);
    const auto q = detail::random_simplex(o.support_size, rng);
    const DiscreteDistribution Q(support, q);
    detail::TrialOutcome out;
    double worst_beta = 2.0;
    std::vector<double> worst_g;
    for (const auto& region : adversary_regions(p, q, rng)) {
      const auto adv = adversarial_make(Q, o.gamma, region);
      if (adv.achieved_tv > o.gamma + 1e-9) throw ContractViolation("adversary exceeded its TV budget");
      const double beta = delta_beta_exact(adv.distribution.masses(), p, q, o.delta);
      if (beta < worst_beta) {
        worst_beta = beta;
        worst_g = adv.distribution.masses();
      }
    }
    out.margin = worst_beta - bound;
    out.violated = worst_beta < bound - kOracleSlack;
    if (out.violated) out.instance = {{"trial", trial}, {"p", p}, {"q", q}, {"g", worst_g}, {"beta", worst_beta}};
    return out;
  });
  detail::reduce(rep, outcomes);
  return rep;
}

/// The delta = 1/4, gamma = 0.1 instance with the stated constant 0.4.
inline OracleReport check_eq3(std::size_t trials, std::uint64_t seed, unsigned threads = 1) {
  Lemma1Options o;
  o.trials = trials;
  o.delta = 0.25;
  o.gamma = 0.1;
  o.threshold = 0.4;
  o.seed = seed;
  o.threads = threads;
  auto rep = check_lemma1(o);
  rep.suite = "eq3";
  return rep;
}

// ---------------------------------------------------------------------------
// Weight dynamics: W_{T+1} <= (1 + eps)^T
// ---------------------------------------------------------------------------

struct DynamicsOptions {
  std::size_t trials = 500;
  std::size_t support_size = 16;
  int rounds = 30;
  double delta = 0.25;
  double epsilon = 0.3;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Doubling set of P_t-mass at most eps, chosen greedily in a random order
/// after a heaviest-first pass, so the adversary gets as close to eps as it can.
inline std::vector<bool> adversarial_doubling_set(std::span<const double> pt, double eps, Rng& rng) {
  std::vector<std::size_t> order(pt.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pt[a] > pt[b]; });
  std::vector<bool> flags(pt.size(), false);
  double used = 0.0;
  for (std::size_t i : order) {
    if (used + pt[i] <= eps) {
      flags[i] = true;
      used += pt[i];
    }
  }
  return flags;
}

inline OracleReport check_weight_dynamics(const DynamicsOptions& o) {
  if (o.rounds < 1 || o.support_size < 1) throw ConfigError("dynamics oracle needs rounds >= 1 and a support");
  if (!(o.epsilon >= 0.0 && o.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  const PointSet support = detail::line_support(o.support_size);
  const double cap = static_cast<double>(o.rounds) * std::log2(1.0 + o.epsilon);

  OracleReport rep;
  rep.suite = "dynamics";
  rep.seed = o.seed;
  rep.params = {{"trials", o.trials}, {"support_size", o.support_size}, {"rounds", o.rounds},
                {"delta", o.delta},   {"epsilon", o.epsilon}};
  auto outcomes = detail::run_trials(o.trials, o.threads, [&](std::size_t trial) {
    Rng rng(split_seed(o.seed, Stream::kTrial, trial));
    const DiscreteDistribution P(support, detail::random_simplex(o.support_size, rng));
    WeightedDataset ws = init_weights_exact(P);
    double identity_err = 0.0;
    for (int t = 0; t < o.rounds; ++t) {
      const auto pt = normalize(ws);
      const auto flags = adversarial_doubling_set(pt.masses(), o.epsilon, rng);
      double m = 0.0;
      for (std::size_t i = 0; i < flags.size(); ++i) {
        if (flags[i]) m += pt.mass(i);
      }
      const double before = ws.log2_total();
      ws = ws.doubled(flags);
      identity_err = std::max(identity_err, std::abs(ws.log2_total() - before - std::log2(1.0 + m)));
    }
    detail::TrialOutcome out;
    out.margin = cap - ws.log2_total();
    out.violated = ws.log2_total() > cap + 1e-9;
    out.extra = identity_err;
    if (out.violated) out.instance = {{"trial", trial}, {"p", P.masses()}, {"log2_W", ws.log2_total()}};
    return out;
  });
  detail::reduce(rep, outcomes);
  double max_err = 0.0;
  for (const auto& o2 : outcomes) max_err = std::max(max_err, o2.extra.get<double>());
  rep.extra["max_identity_error"] = max_err;
  return rep;
}

// ---------------------------------------------------------------------------
// Theorem 1 on every qualifying subset
// ---------------------------------------------------------------------------

struct Theorem1Options {
  std::size_t support_size = 8;
  int rounds = 24;
  double delta = 0.25;
  double gamma = 0.1;
  double eta = 0.2;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Even trials use a uniform target, odd ones a flat-Dirichlet target. The
/// generator each round is the round distribution with gamma of TV removed
/// from the points nearest to losing coverage.
inline OracleReport check_theorem1_exhaustive(const Theorem1Options& o) {
  if (o.support_size < 1 || o.support_size > 12) throw ConfigError("theorem1 oracle needs 1..12 support points");
  const PointSet support = detail::line_support(o.support_size);
  const double bound = theorem1_bound(o.delta, o.gamma, o.eta);
  const double mass_lb = std::exp2(-o.eta * static_cast<double>(o.rounds));

  OracleReport rep;
  rep.suite = "theorem1";
  rep.seed = o.seed;
  rep.params = {{"support_size", o.support_size}, {"rounds", o.rounds}, {"delta", o.delta},   {"gamma", o.gamma},
                {"eta", o.eta},                   {"trials", o.trials}, {"bound", bound},     {"mass_lb", mass_lb},
                {"vacuous", is_vacuous(bound)}};
  auto outcomes = detail::run_trials(o.trials, o.threads, [&](std::size_t trial) {
    Rng rng(split_seed(o.seed, Stream::kTrial, trial));
    const auto pm = trial % 2 == 0 ? std::vector<double>(o.support_size, 1.0 / static_cast<double>(o.support_size))
                                   : detail::random_simplex(o.support_size, rng);
    const DiscreteDistribution P(support, pm);
    BoostConfig cfg;
    cfg.rounds = o.rounds;
    cfg.delta = o.delta;
    cfg.eta = o.eta;
    cfg.seed = split_seed(o.seed, Stream::kTrial, trial);
    cfg.projection_cells = 2;
    AdversarialConfig adv;
    adv.gamma = o.gamma;
    adv.rule = RegionRule::kLowestCoverage;
    const auto res = run_exact(P, cfg, adversarial_factory(adv));

    const auto& g = res.mixture_projected;
    const auto ex = worst_subset_exhaustive(g, pm, mass_lb);
    std::vector<double> ratios(pm.size());
    for (std::size_t i = 0; i < pm.size(); ++i) ratios[i] = g[i] / pm[i];
    const auto pre = worst_subset(ratios, pm, mass_lb);

    detail::TrialOutcome out;
    out.margin = ex.ratio - bound;
    out.violated = ex.ratio * ex.mass < bound * ex.mass - kOracleSlack;
    const bool equal_mass = trial % 2 == 0;
    const bool prefix_ok = equal_mass ? std::abs(pre.ratio - ex.ratio) <= 1e-12 : pre.ratio >= ex.ratio - 1e-12;
    out.extra = {{"prefix_ok", prefix_ok}, {"prefix_gap", pre.ratio - ex.ratio}, {"max_tv", res.trace.max_tv()}};
    if (out.violated) {
      out.instance = {{"trial", trial}, {"p", pm}, {"g_star", g}, {"subset", ex.indices}, {"ratio", ex.ratio}};
    }
    return out;
  });
  detail::reduce(rep, outcomes);
  std::size_t prefix_bad = 0;
  double max_gap = 0.0, max_tv = 0.0;
  for (const auto& oc : outcomes) {
    if (!oc.extra["prefix_ok"].get<bool>()) ++prefix_bad;
    max_gap = std::max(max_gap, oc.extra["prefix_gap"].get<double>());
    max_tv = std::max(max_tv, oc.extra["max_tv"].get<double>());
  }
  rep.extra = {{"prefix_mismatches", prefix_bad}, {"max_prefix_gap", max_gap}, {"max_round_tv", max_tv}};
  return rep;
}

}  // namespace mwcover

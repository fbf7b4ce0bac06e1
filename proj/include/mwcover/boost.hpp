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

// Multiplicative-weights boosting of weak generators: the exact-density
// loop and the sample/discriminator loop, the uniform generator mixture,
// and the per-round trace.

#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mwcover/core.hpp"
#include "mwcover/discriminator.hpp"
#include "mwcover/divergence.hpp"
#include "mwcover/generators.hpp"
#include "mwcover/rng.hpp"

namespace mwcover {

// ---------------------------------------------------------------------------
// Projection of a generator onto a finite support
// ---------------------------------------------------------------------------

/// Turns a generator into a mass vector on the target's support so the
/// pointwise test g(x) < delta p(x) compares like with like. Points are
/// grouped (grid cells for continuous generators, identical coordinates for
/// atomic ones); each group's generator mass is split over its points in
/// proportion to the target masses, so g_i / p_i = G(group) / P(group).
class SupportProjection {
 public:
  SupportProjection(const DiscreteDistribution& target, std::size_t cells)
      : target_(target), grid_(GridSpec::bounding(target.support(), cells)) {
    std::map<std::size_t, std::size_t> cell_group;
    cell_group_of_.resize(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
      auto c = grid_.cell_of(target.support()[i]);
      if (!c) throw ContractViolation("support point outside its own bounding grid");
      auto [it, inserted] = cell_group.try_emplace(*c, cells_.size());
      if (inserted) {
        cells_.push_back(*c);
        cell_mass_.push_back(0.0);
      }
      cell_group_of_[i] = it->second;
      cell_mass_[it->second] += target.mass(i);
    }
    auto [grp, count] = group_identical(target.support());
    point_group_of_ = std::move(grp);
    point_mass_.assign(count, 0.0);
    point_rep_.assign(count, 0);
    for (std::size_t i = target.size(); i-- > 0;) {
      point_mass_[point_group_of_[i]] += target.mass(i);
      point_rep_[point_group_of_[i]] = i;
    }
  }

  const GridSpec& grid() const noexcept { return grid_; }
  const DiscreteDistribution& target() const noexcept { return target_; }
  std::size_t occupied_cells() const noexcept { return cells_.size(); }

  /// Generator mass of each group, and which grouping was used.
  struct GroupMasses {
    bool atomic = false;
    std::vector<double> mass;
  };

  GroupMasses group_masses(const WeakGenerator& g) const {
    GroupMasses out;
    out.atomic = g.is_atomic();
    if (out.atomic) {
      out.mass.resize(point_mass_.size());
      for (std::size_t k = 0; k < point_mass_.size(); ++k) out.mass[k] = g.pdf(target_.support()[point_rep_[k]]);
    } else {
      out.mass.resize(cells_.size());
      for (std::size_t k = 0; k < cells_.size(); ++k) {
        auto [lo, hi] = grid_.cell_bounds(cells_[k]);
        out.mass[k] = g.box_mass(lo, hi);
      }
    }
    return out;
  }

  /// Projected masses g_i on the support points.
  std::vector<double> project(const WeakGenerator& g) const { return project(group_masses(g)); }

  std::vector<double> project(const GroupMasses& gm) const {
    std::vector<double> out(target_.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::size_t k = gm.atomic ? point_group_of_[i] : cell_group_of_[i];
      const double pk = gm.atomic ? point_mass_[k] : cell_mass_[k];
      out[i] = pk > 0.0 ? gm.mass[k] * target_.mass(i) / pk : 0.0;
    }
    return out;
  }

  /// TV between the generator and a reweighting `q` of the support, at group
  /// resolution. Generator mass outside occupied groups counts in full.
  double group_tv(const GroupMasses& gm, std::span<const double> q) const {
    std::vector<double> qg(gm.mass.size(), 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) qg[gm.atomic ? point_group_of_[i] : cell_group_of_[i]] += q[i];
    double diff = 0.0, inside = 0.0;
    for (std::size_t k = 0; k < qg.size(); ++k) {
      diff += std::abs(gm.mass[k] - qg[k]);
      inside += gm.mass[k];
    }
    return std::clamp(0.5 * (diff + std::max(0.0, 1.0 - inside)), 0.0, 1.0);
  }

 private:
  DiscreteDistribution target_;
  GridSpec grid_;
  std::vector<std::size_t> cells_;
  std::vector<double> cell_mass_;
  std::vector<std::size_t> cell_group_of_;
  std::vector<std::size_t> point_group_of_;
  std::vector<double> point_mass_;
  std::vector<std::size_t> point_rep_;
};

// ---------------------------------------------------------------------------
// GeneratorMixture
// ---------------------------------------------------------------------------

class GeneratorMixture {
 public:
  GeneratorMixture() = default;
  explicit GeneratorMixture(std::vector<GeneratorPtr> gens) : gens_(std::move(gens)) {
    for (const auto& g : gens_) {
      if (!g) throw ContractViolation("null generator in mixture");
    }
  }

  void add(GeneratorPtr g) {
    if (!g) throw ContractViolation("null generator in mixture");
    gens_.push_back(std::move(g));
  }
  std::size_t size() const noexcept { return gens_.size(); }
  const std::vector<GeneratorPtr>& generators() const noexcept { return gens_; }

  double pdf(std::span<const double> x) const {
    if (gens_.empty()) throw ContractViolation("empty mixture");
    double s = 0.0;
    for (const auto& g : gens_) {
      if (!g->supports_exact_pdf()) throw UnsupportedOperation("mixture member '" + g->kind() + "' has no exact pdf");
      s += g->pdf(x);
    }
    return s / static_cast<double>(gens_.size());
  }

  double box_mass(std::span<const double> lo, std::span<const double> hi) const {
    if (gens_.empty()) throw ContractViolation("empty mixture");
    double s = 0.0;
    for (const auto& g : gens_) s += g->box_mass(lo, hi);
    return s / static_cast<double>(gens_.size());
  }

  /// Each draw picks a member uniformly, then samples from it. Draws are
  /// grouped by member so each member samples once with its own seed.
  PointSet sample(std::size_t count, std::uint64_t seed) const {
    if (gens_.empty()) throw ContractViolation("empty mixture");
    PointSet out(gens_.front()->dim());
    if (count == 0) return out;
    Rng rng(split_seed(seed, Stream::kMixtureSample, 0));
    std::uniform_int_distribution<std::size_t> pick(0, gens_.size() - 1);
    std::vector<std::size_t> which(count), per(gens_.size(), 0);
    for (auto& w : which) ++per[w = pick(rng)];
    std::vector<PointSet> drawn;
    for (std::size_t k = 0; k < gens_.size(); ++k) {
      drawn.push_back(gens_[k]->sample(per[k], split_seed(seed, Stream::kMixtureSample, k + 1)));
    }
    std::vector<std::size_t> next(gens_.size(), 0);
    out.reserve(count);
    for (std::size_t w : which) out.push_back(drawn[w][next[w]++]);
    return out;
  }

  nlohmann::json to_json() const {
    auto arr = nlohmann::json::array();
    for (std::size_t t = 0; t < gens_.size(); ++t) {
      auto j = gens_[t]->to_json();
      j["round"] = t + 1;
      arr.push_back(std::move(j));
    }
    return {{"kind", "uniform_mixture"}, {"size", gens_.size()}, {"generators", std::move(arr)}};
  }

 private:
  std::vector<GeneratorPtr> gens_;
};

// ---------------------------------------------------------------------------
// Configuration and trace
// ---------------------------------------------------------------------------

struct BoostConfig {
  int rounds = 24;
  double delta = 0.25;
  /// Subset-mass exponent; only used when reporting bounds.
  double eta = 0.01;
  std::uint64_t seed = 0;
  /// Cells per axis of the grid used to project continuous generators.
  std::size_t projection_cells = 64;
  /// Empirical mode: size of the weighted resample (0 = dataset size).
  std::size_t resample_size = 0;
  /// Empirical mode: coverage level for the lambda diagnostic (0 = delta).
  double delta_prime = 0.0;
  /// Support indices whose weight share is tracked each round.
  std::vector<std::size_t> minority;

  void validate() const {
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("eta must lie in (0, 1)");
    if (projection_cells < 2) throw ConfigError("projection_cells must be >= 2");
    if (delta_prime < 0.0 || delta_prime > 1.0) throw ConfigError("delta_prime must lie in [0, 1]");
  }
};

struct RoundRecord {
  int round = 0;
  /// log2 W_t, before this round's doubling.
  double log2_W = 0.0;
  std::size_t n_doubled = 0;
  /// P_t-mass of the doubled points.
  double doubled_mass = 0.0;
  std::optional<double> tv_gen_vs_pt;
  std::optional<double> minority_ratio;
  std::optional<double> epsilon_prime;
  std::optional<double> lambda_min;
  std::vector<bool> flags;
};

struct RoundTrace {
  std::vector<RoundRecord> rounds;
  /// log2 W_{T+1}, after the last doubling.
  double final_log2_W = 0.0;
  std::optional<double> lambda_mean;

  double max_tv() const {
    double m = 0.0;
    for (const auto& r : rounds) {
      if (r.tv_gen_vs_pt) m = std::max(m, *r.tv_gen_vs_pt);
    }
    return m;
  }
};

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trace_csv(std::ostream& os, const RoundTrace& trace) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  os << "round,log2_W,n_doubled,tv_gen_vs_pt,minority_ratio,epsilon_prime,lambda_min\n";
  for (const auto& r : trace.rounds) {
    os << r.round << ',' << format_number(r.log2_W) << ',' << r.n_doubled << ',' << opt(r.tv_gen_vs_pt) << ','
       << opt(r.minority_ratio) << ',' << opt(r.epsilon_prime) << ',' << opt(r.lambda_min) << '\n';
  }
}

struct BoostResult {
  GeneratorMixture mixture;
  RoundTrace trace;
  WeightedDataset final_weights;
  /// Target masses p on the support.
  std::vector<double> target_mass;
  /// Projected generator masses per round, and their mean g*.
  std::vector<std::vector<double>> projected;
  std::vector<double> mixture_projected;
};

namespace detail {

inline std::optional<double> minority_share(const WeightedDataset& ws, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return std::nullopt;
  std::vector<double> lw;
  lw.reserve(idx.size());
  for (std::size_t i : idx) {
    if (i >= ws.size()) throw ConfigError("minority index " + std::to_string(i) + " out of range");
    lw.push_back(ws.log2_weight(i));
  }
  return std::exp2(log2_sum_exp2(lw) - ws.log2_total());
}

template <class F>
auto in_round(int round, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const RunError& e) {
    // round 0 means the thrower did not know the round
    if (e.round() == 0) throw RunError(round, e.message());
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunError(round, e.what());
  }
}

inline void finish(BoostResult& r, const WeightedDataset& ws) {
  r.trace.final_log2_W = ws.log2_total();
  r.final_weights = ws;
  r.mixture_projected.assign(r.target_mass.size(), 0.0);
  for (const auto& g : r.projected) {
    for (std::size_t i = 0; i < g.size(); ++i) r.mixture_projected[i] += g[i];
  }
  for (double& v : r.mixture_projected) v /= static_cast<double>(r.projected.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact-density loop
// ---------------------------------------------------------------------------

/// Weights start at p(x); each round fits G_t to P_t = w_t / W_t and doubles
/// every point with g_t(x) < delta p(x).
inline BoostResult run_exact(const DiscreteDistribution& target, const BoostConfig& cfg,
                             const GeneratorFactory& factory) {
  cfg.validate();
  const SupportProjection proj(target, cfg.projection_cells);
  BoostResult res;
  res.target_mass = target.masses();
  WeightedDataset ws = init_weights_exact(target);
  for (int t = 1; t <= cfg.rounds; ++t) {
    const DiscreteDistribution pt = normalize(ws);
    FitContext ctx{t, split_seed(cfg.seed, Stream::kFit, static_cast<std::uint64_t>(t)), &target, &proj.grid(),
                   cfg.delta};
    GeneratorPtr gen = detail::in_round(t, [&] { return factory(pt, ctx); });
    if (!gen) throw RunError(t, "generator factory returned nothing");
    if (!gen->supports_exact_pdf()) throw ConfigError("exact mode needs generators with an exact pdf");

    const auto gm = detail::in_round(t, [&] { return proj.group_masses(*gen); });
    auto g = proj.project(gm);
    RoundRecord rec;
    rec.round = t;
    rec.log2_W = ws.log2_total();
    rec.flags.resize(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
      rec.flags[i] = g[i] < cfg.delta * target.mass(i);
      if (rec.flags[i]) {
        ++rec.n_doubled;
        rec.doubled_mass += pt.mass(i);
      }
    }
    rec.tv_gen_vs_pt = proj.group_tv(gm, pt.masses());
    rec.minority_ratio = detail::minority_share(ws, cfg.minority);
    ws = ws.doubled(rec.flags);
    res.trace.rounds.push_back(std::move(rec));
    res.projected.push_back(std::move(g));
    res.mixture.add(std::move(gen));
  }
  detail::finish(res, ws);
  return res;
}

// ---------------------------------------------------------------------------
// Empirical loop
// ---------------------------------------------------------------------------

using DiscriminatorFactory = std::function<RatioModelPtr(const PointSet& pos, const PointSet& neg,
                                                         const DiscreteDistribution& pt, const GeneratorPtr& gen,
                                                         const SupportProjection& proj, const FitContext& ctx)>;

inline DiscriminatorFactory logistic_factory(DiscriminatorSpec spec) {
  return [spec](const PointSet& pos, const PointSet& neg, const DiscreteDistribution&, const GeneratorPtr&,
                const SupportProjection&, const FitContext& ctx) -> RatioModelPtr {
    return std::make_shared<LogisticDiscriminator>(LogisticDiscriminator::train(
        pos, neg, spec, split_seed(ctx.seed, Stream::kDiscriminator, static_cast<std::uint64_t>(ctx.round))));
  };
}

/// Ideal discriminator on the support: D = P_t / (P_t + G) with both masses
/// aggregated over identical points (G projected as in the exact loop).
inline DiscriminatorFactory oracle_factory(double kappa = 1e-6) {
  return [kappa](const PointSet&, const PointSet&, const DiscreteDistribution& pt, const GeneratorPtr& gen,
                 const SupportProjection& proj, const FitContext&) -> RatioModelPtr {
    const auto g = proj.project(*gen);
    using Key = std::vector<double>;
    auto table = std::make_shared<std::map<Key, std::pair<double, double>>>();
    for (std::size_t i = 0; i < pt.size(); ++i) {
      auto x = pt.support()[i];
      auto& e = (*table)[Key(x.begin(), x.end())];
      e.first += pt.mass(i);
      e.second += g[i];
    }
    auto lookup = [table](std::span<const double> x, bool first) {
      auto it = table->find(Key(x.begin(), x.end()));
      if (it == table->end()) return 0.0;
      return first ? it->second.first : it->second.second;
    };
    return std::make_shared<OracleDiscriminator>([lookup](std::span<const double> x) { return lookup(x, true); },
                                                 [lookup](std::span<const double> x) { return lookup(x, false); },
                                                 kappa);
  };
}

inline PointSet weighted_resample(const DiscreteDistribution& d, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  CategoricalSampler pick(d.masses());
  PointSet out(d.dim());
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) out.push_back(d.support()[pick(rng)]);
  return out;
}

/// Weights start at 1/n; each round fits G_t on a weighted resample, trains
/// D_t between P_t and G_t samples, and doubles points with
/// (1/D - 1) w / W < delta / n.
inline BoostResult run_empirical(const PointSet& points, const BoostConfig& cfg, const GeneratorFactory& factory,
                                 const DiscriminatorFactory& disc, std::size_t disc_samples = 4096) {
  cfg.validate();
  if (points.size() < 2) throw ConfigError("empirical mode needs at least 2 points");
  const DiscreteDistribution target = DiscreteDistribution::uniform(points);
  const SupportProjection proj(target, cfg.projection_cells);
  const std::size_t m = cfg.resample_size ? cfg.resample_size : points.size();
  const double dprime = cfg.delta_prime > 0.0 ? cfg.delta_prime : cfg.delta;
  LambdaTally tally(points.size(), dprime);

  BoostResult res;
  res.target_mass = target.masses();
  WeightedDataset ws = init_weights_empirical(points);
  for (int t = 1; t <= cfg.rounds; ++t) {
    const auto tu = static_cast<std::uint64_t>(t);
    const DiscreteDistribution pt = normalize(ws);
    FitContext ctx{t, split_seed(cfg.seed, Stream::kFit, tu), &target, &proj.grid(), cfg.delta};
    const auto train = DiscreteDistribution::uniform(weighted_resample(pt, m, split_seed(cfg.seed, Stream::kResample, tu)));
    GeneratorPtr gen = detail::in_round(t, [&] { return factory(train, ctx); });
    if (!gen) throw RunError(t, "generator factory returned nothing");

    const PointSet pos = weighted_resample(pt, disc_samples, split_seed(cfg.seed, Stream::kResample, tu + (1ULL << 32)));
    const PointSet neg = gen->sample(disc_samples, split_seed(cfg.seed, Stream::kGeneratorSample, tu));
    FitContext dctx = ctx;
    dctx.seed = cfg.seed;
    RatioModelPtr d = detail::in_round(t, [&] { return disc(pos, neg, pt, gen, proj, dctx); });
    if (!d) throw RunError(t, "discriminator factory returned nothing");

    RoundRecord rec;
    rec.round = t;
    rec.log2_W = ws.log2_total();
    rec.flags = empirical_cover_test(*d, ws, cfg.delta);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (rec.flags[i]) {
        ++rec.n_doubled;
        rec.doubled_mass += pt.mass(i);
      }
    }
    rec.minority_ratio = detail::minority_share(ws, cfg.minority);
    std::vector<double> g;
    if (gen->supports_exact_pdf()) {
      const auto gm = proj.group_masses(*gen);
      g = proj.project(gm);
      rec.tv_gen_vs_pt = proj.group_tv(gm, pt.masses());
      rec.epsilon_prime = epsilon_prime(g, target.masses(), pt.masses(), rec.flags, cfg.delta);
      tally.add_round(g, target.masses(), rec.flags);
      rec.lambda_min = tally.min();
    }
    ws = ws.doubled(rec.flags);
    res.trace.rounds.push_back(std::move(rec));
    res.projected.push_back(std::move(g));
    res.mixture.add(std::move(gen));
  }
  res.trace.lambda_mean = tally.weighted_mean(target.masses());
  detail::finish(res, ws);
  return res;
}

}  // namespace mwcover

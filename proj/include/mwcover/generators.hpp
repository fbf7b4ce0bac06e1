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

// Weak generators: classical density models that can be fit to a round
// distribution, evaluated exactly, integrated over boxes, and sampled.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mwcover/core.hpp"
#include "mwcover/divergence.hpp"
#include "mwcover/kmeans.hpp"
#include "mwcover/rng.hpp"

namespace mwcover {

class WeakGenerator {
 public:
  virtual ~WeakGenerator() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual bool supports_exact_pdf() const { return true; }
  /// Atomic generators put all mass on finitely many points; pdf() then
  /// returns the point mass.
  virtual bool is_atomic() const { return false; }

  virtual double pdf(std::span<const double> x) const = 0;
  /// Probability of the closed box [lo, hi].
  virtual double box_mass(std::span<const double> lo, std::span<const double> hi) const = 0;
  virtual PointSet sample(std::size_t count, std::uint64_t seed) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using GeneratorPtr = std::shared_ptr<const WeakGenerator>;

namespace detail {
inline nlohmann::json points_json(const PointSet& pts) {
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto p = pts[i];
    arr.push_back(std::vector<double>(p.begin(), p.end()));
  }
  return arr;
}

inline nlohmann::json density_json(const AnalyticDensity& d) {
  auto arr = nlohmann::json::array();
  for (const auto& c : d.components()) {
    arr.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
  }
  return arr;
}

inline PointSet sample_analytic(const AnalyticDensity& d, std::size_t count, Rng& rng) {
  std::vector<double> w;
  for (const auto& c : d.components()) w.push_back(c.weight);
  CategoricalSampler pick(w);
  std::normal_distribution<double> z(0.0, 1.0);
  PointSet out(d.dim());
  out.reserve(count);
  std::vector<double> x(d.dim());
  for (std::size_t s = 0; s < count; ++s) {
    const auto& c = d.components()[pick(rng)];
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = c.mean[k] + std::sqrt(c.variance[k]) * z(rng);
    out.push_back(x);
  }
  return out;
}

inline bool in_box(std::span<const double> x, std::span<const double> lo, std::span<const double> hi) {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  }
  return true;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// AtomicGenerator: a discrete distribution used as a generator
// ---------------------------------------------------------------------------

class AtomicGenerator final : public WeakGenerator {
 public:
  explicit AtomicGenerator(const DiscreteDistribution& dist, std::string kind = "atomic")
      : dist_(dist.collapsed()), kind_(std::move(kind)) {
    for (std::size_t i = 0; i < dist_.size(); ++i) {
      auto p = dist_.support()[i];
      lookup_.emplace(std::vector<double>(p.begin(), p.end()), dist_.mass(i));
    }
  }

  std::string kind() const override { return kind_; }
  std::size_t dim() const override { return dist_.dim(); }
  bool is_atomic() const override { return true; }
  const DiscreteDistribution& distribution() const noexcept { return dist_; }

  double pdf(std::span<const double> x) const override {
    auto it = lookup_.find(std::vector<double>(x.begin(), x.end()));
    return it == lookup_.end() ? 0.0 : it->second;
  }

  double box_mass(std::span<const double> lo, std::span<const double> hi) const override {
    double s = 0.0;
    for (std::size_t i = 0; i < dist_.size(); ++i) {
      if (detail::in_box(dist_.support()[i], lo, hi)) s += dist_.mass(i);
    }
    return s;
  }

  PointSet sample(std::size_t count, std::uint64_t seed) const override {
    Rng rng(seed);
    PointSet out(dim());
    if (count == 0) return out;
    CategoricalSampler pick(dist_.masses());
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) out.push_back(dist_.support()[pick(rng)]);
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"kind", kind_}, {"support", detail::points_json(dist_.support())}, {"mass", dist_.masses()}};
  }

 private:
  DiscreteDistribution dist_;
  std::string kind_;
  std::map<std::vector<double>, double> lookup_;
};

// ---------------------------------------------------------------------------
// HistogramGenerator
// ---------------------------------------------------------------------------

struct HistogramConfig {
  std::size_t cells = 64;
  /// Smoothing floor: the fitted masses are (1 - alpha) * m + alpha / #cells.
  double alpha = 1e-9;
  /// Bins whose training mass falls below this are dropped before smoothing.
  /// Zero keeps every bin; positive values model a capacity-limited learner
  /// that ignores thinly populated regions.
  double min_bin_mass = 0.0;
};

class HistogramGenerator final : public WeakGenerator {
 public:
  HistogramGenerator(GridSpec grid, std::vector<double> bin_mass, double alpha, double min_bin_mass)
      : grid_(std::move(grid)), mass_(std::move(bin_mass)), alpha_(alpha), min_bin_mass_(min_bin_mass) {
    if (mass_.size() != grid_.num_cells()) throw ContractViolation("bin count does not match grid");
  }

  /// Bins the training masses on `grid`; mass outside the grid is dropped
  /// and the remainder renormalized.
  static HistogramGenerator fit(const DiscreteDistribution& train, const GridSpec& grid, const HistogramConfig& cfg) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("histogram alpha must lie in [0, 1]");
    if (cfg.min_bin_mass < 0.0) throw ConfigError("histogram min_bin_mass must be >= 0");
    if (train.dim() != grid.dim()) throw ContractViolation("training data and grid dimensions differ");
    std::vector<double> m(grid.num_cells(), 0.0);
    double inside = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (auto c = grid.cell_of(train.support()[i])) {
        m[*c] += train.mass(i);
        inside += train.mass(i);
      }
    }
    if (!(inside > 0.0)) throw ConfigError("no training mass falls inside the histogram grid");
    for (double& x : m) x /= inside;
    if (cfg.min_bin_mass > 0.0) {
      const auto top = std::max_element(m.begin(), m.end());
      const double top_mass = *top;
      double kept = 0.0;
      for (double& x : m) {
        if (x < cfg.min_bin_mass) x = 0.0;
        kept += x;
      }
      if (kept <= 0.0) {
        *top = top_mass;  // everything pruned: keep the heaviest bin
        kept = top_mass;
      }
      for (double& x : m) x /= kept;
    }
    const double floor = cfg.alpha / static_cast<double>(m.size());
    for (double& x : m) x = (1.0 - cfg.alpha) * x + floor;
    return {grid, std::move(m), cfg.alpha, cfg.min_bin_mass};
  }

  std::string kind() const override { return "histogram"; }
  std::size_t dim() const override { return grid_.dim(); }
  const GridSpec& grid() const noexcept { return grid_; }
  const std::vector<double>& bin_masses() const noexcept { return mass_; }
  double alpha() const noexcept { return alpha_; }

  double pdf(std::span<const double> x) const override {
    auto c = grid_.cell_of(x);
    return c ? mass_[*c] / grid_.cell_volume() : 0.0;
  }

  double box_mass(std::span<const double> lo, std::span<const double> hi) const override {
    const std::size_t d = dim();
    std::vector<std::size_t> first(d), last(d);
    for (std::size_t k = 0; k < d; ++k) {
      const double a = std::max(lo[k], grid_.lo()[k]), b = std::min(hi[k], grid_.hi()[k]);
      if (!(a < b)) return 0.0;
      const double w = grid_.width(k);
      first[k] = std::min(grid_.cells() - 1, static_cast<std::size_t>((a - grid_.lo()[k]) / w));
      last[k] = std::min(grid_.cells() - 1, static_cast<std::size_t>((b - grid_.lo()[k]) / w));
    }
    double total = 0.0;
    std::vector<std::size_t> idx(first);
    while (true) {
      std::size_t flat = 0, stride = 1;
      double frac = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        flat += idx[k] * stride;
        stride *= grid_.cells();
        const double w = grid_.width(k);
        const double c0 = grid_.lo()[k] + w * static_cast<double>(idx[k]);
        const double overlap = std::min(hi[k], c0 + w) - std::max(lo[k], c0);
        frac *= std::clamp(overlap / w, 0.0, 1.0);
      }
      total += frac * mass_[flat];
      std::size_t k = 0;
      for (; k < d; ++k) {
        if (idx[k] < last[k]) {
          ++idx[k];
          break;
        }
        idx[k] = first[k];
      }
      if (k == d) break;
    }
    return total;
  }

  PointSet sample(std::size_t count, std::uint64_t seed) const override {
    Rng rng(seed);
    PointSet out(dim());
    if (count == 0) return out;
    CategoricalSampler pick(mass_);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    out.reserve(count);
    std::vector<double> x(dim());
    for (std::size_t s = 0; s < count; ++s) {
      auto [a, b] = grid_.cell_bounds(pick(rng));
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = a[k] + (b[k] - a[k]) * u(rng);
      out.push_back(x);
    }
    return out;
  }

  nlohmann::json to_json() const override {
    // Sparse form: only bins above the smoothing floor.
    const double floor = alpha_ / static_cast<double>(mass_.size());
    auto bins = nlohmann::json::array();
    for (std::size_t i = 0; i < mass_.size(); ++i) {
      if (mass_[i] > floor) bins.push_back({i, mass_[i]});
    }
    return {{"kind", "histogram"},      {"lo", grid_.lo()},      {"hi", grid_.hi()},
            {"cells", grid_.cells()},   {"alpha", alpha_},       {"min_bin_mass", min_bin_mass_},
            {"floor_mass", floor},      {"bins", std::move(bins)}};
  }

 private:
  GridSpec grid_;
  std::vector<double> mass_;
  double alpha_;
  double min_bin_mass_;
};

// ---------------------------------------------------------------------------
// GmmGenerator: diagonal Gaussian mixture fit by EM
// ---------------------------------------------------------------------------

struct GmmConfig {
  std::size_t components = 3;
  int max_iterations = 100;
  double variance_floor = 1e-6;
  int restarts = 3;
  double tolerance = 1e-10;
};

class GmmGenerator final : public WeakGenerator {
 public:
  GmmGenerator(AnalyticDensity density, std::vector<double> loglik_history)
      : density_(std::move(density)), history_(std::move(loglik_history)) {}

  /// Weighted EM with k-means++ initialization; keeps the restart with the
  /// best final log-likelihood.
  static GmmGenerator fit(const DiscreteDistribution& train, const GmmConfig& cfg, std::uint64_t seed) {
    if (cfg.components == 0) throw ConfigError("gmm needs at least one component");
    if (cfg.max_iterations < 1 || cfg.restarts < 1) throw ConfigError("gmm iteration and restart counts must be >= 1");
    if (!(cfg.variance_floor > 0.0)) throw ConfigError("gmm variance floor must be > 0");
    const auto data = train.collapsed();
    if (cfg.components > data.size()) {
      throw ConfigError("gmm has more components (" + std::to_string(cfg.components) + ") than distinct points (" +
                        std::to_string(data.size()) + ")");
    }
    std::optional<GmmGenerator> best;
    for (int r = 0; r < cfg.restarts; ++r) {
      Rng rng(split_seed(seed, Stream::kFit, static_cast<std::uint64_t>(r)));
      auto g = run_em(data, cfg, rng);
      if (!best || g.history_.back() > best->history_.back()) best = std::move(g);
    }
    return std::move(*best);
  }

  std::string kind() const override { return "gmm"; }
  std::size_t dim() const override { return density_.dim(); }
  const AnalyticDensity& density() const noexcept { return density_; }
  /// Weighted log-likelihood after initialization and after each EM step.
  const std::vector<double>& loglik_history() const noexcept { return history_; }

  double pdf(std::span<const double> x) const override { return density_.pdf(x); }
  double box_mass(std::span<const double> lo, std::span<const double> hi) const override {
    return density_.box_probability(lo, hi);
  }
  PointSet sample(std::size_t count, std::uint64_t seed) const override {
    Rng rng(seed);
    return detail::sample_analytic(density_, count, rng);
  }
  nlohmann::json to_json() const override {
    return {{"kind", "gmm"}, {"components", detail::density_json(density_)}};
  }

 private:
  static GmmGenerator run_em(const DiscreteDistribution& data, const GmmConfig& cfg, Rng& rng) {
    const std::size_t n = data.size(), d = data.dim(), K = cfg.components;
    const auto& X = data.support();
    const auto& w = data.masses();

    auto km = kmeans(X, w, K, rng, 10);
    std::vector<double> pi(K, 0.0), mu(K * d, 0.0), var(K * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) pi[km.assignment[i]] += w[i];
    for (std::size_t k = 0; k < km.centers.size(); ++k) {
      for (std::size_t a = 0; a < d; ++a) mu[k * d + a] = km.centers[k][a];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = km.assignment[i];
      for (std::size_t a = 0; a < d; ++a) {
        const double diff = X[i][a] - mu[k * d + a];
        var[k * d + a] += w[i] * diff * diff;
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t a = 0; a < d; ++a) {
        var[k * d + a] = pi[k] > 0.0 ? std::max(var[k * d + a] / pi[k], cfg.variance_floor) : 1.0;
      }
    }
    // Components k-means could not seed get a small share until EM moves them.
    for (std::size_t k = 0; k < K; ++k) pi[k] = std::max(pi[k], 1e-12);
    {
      const double s = std::accumulate(pi.begin(), pi.end(), 0.0);
      for (double& p : pi) p /= s;
    }

    std::vector<double> resp(n * K);
    std::vector<double> history;
    auto e_step = [&]() {
      double ll = 0.0;
      std::vector<double> lognorm(K);
      for (std::size_t k = 0; k < K; ++k) {
        double ln = pi[k] > 0.0 ? std::log(pi[k]) : -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < d; ++a) ln -= 0.5 * std::log(2.0 * std::numbers::pi * var[k * d + a]);
        lognorm[k] = ln;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
          double q = 0.0;
          for (std::size_t a = 0; a < d; ++a) {
            const double diff = X[i][a] - mu[k * d + a];
            q += diff * diff / var[k * d + a];
          }
          resp[i * K + k] = lognorm[k] - 0.5 * q;
          m = std::max(m, resp[i * K + k]);
        }
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += (resp[i * K + k] = std::exp(resp[i * K + k] - m));
        for (std::size_t k = 0; k < K; ++k) resp[i * K + k] /= s;
        ll += w[i] * (m + std::log(s));
      }
      return ll;
    };

    history.push_back(e_step());
    for (int it = 0; it < cfg.max_iterations; ++it) {
      std::vector<double> nk(K, 0.0);
      std::fill(mu.begin(), mu.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
          const double r = w[i] * resp[i * K + k];
          nk[k] += r;
          for (std::size_t a = 0; a < d; ++a) mu[k * d + a] += r * X[i][a];
        }
      }
      std::vector<double> new_var(K * d, 0.0);
      for (std::size_t k = 0; k < K; ++k) {
        if (nk[k] <= 0.0) continue;
        for (std::size_t a = 0; a < d; ++a) mu[k * d + a] /= nk[k];
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
          const double r = w[i] * resp[i * K + k];
          for (std::size_t a = 0; a < d; ++a) {
            const double diff = X[i][a] - mu[k * d + a];
            new_var[k * d + a] += r * diff * diff;
          }
        }
      }
      for (std::size_t k = 0; k < K; ++k) {
        pi[k] = nk[k];
        for (std::size_t a = 0; a < d; ++a) {
          // A collapsed component sits on the variance floor.
          var[k * d + a] = nk[k] > 0.0 ? std::max(new_var[k * d + a] / nk[k], cfg.variance_floor) : 1.0;
        }
      }
      const double ll = e_step();
      const double prev = history.back();
      history.push_back(ll);
      if (std::abs(ll - prev) <= cfg.tolerance * std::max(1.0, std::abs(prev))) break;
    }

    std::vector<GaussianComponent> comps;
    const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      comps.push_back({pi[k] / total, std::vector<double>(mu.begin() + k * d, mu.begin() + (k + 1) * d),
                       std::vector<double>(var.begin() + k * d, var.begin() + (k + 1) * d)});
    }
    return {AnalyticDensity(std::move(comps)), std::move(history)};
  }

  AnalyticDensity density_;
  std::vector<double> history_;
};

// ---------------------------------------------------------------------------
// KdeGenerator
// ---------------------------------------------------------------------------

struct KdeConfig {
  double bandwidth = 0.1;
};

/// Weighted isotropic Gaussian KDE; sampling draws a center by weight and
/// adds N(0, h^2) jitter.
class KdeGenerator final : public WeakGenerator {
 public:
  KdeGenerator(const DiscreteDistribution& train, double bandwidth) : data_(train.collapsed()), h_(bandwidth) {
    if (!(h_ > 0.0)) throw ConfigError("kde bandwidth must be > 0");
    log_norm_ = -0.5 * static_cast<double>(dim()) * std::log(2.0 * std::numbers::pi * h_ * h_);
  }

  std::string kind() const override { return "kde"; }
  std::size_t dim() const override { return data_.dim(); }
  double bandwidth() const noexcept { return h_; }
  const DiscreteDistribution& centers() const noexcept { return data_; }

  double pdf(std::span<const double> x) const override {
    double s = 0.0;
    const double inv = 1.0 / (h_ * h_);
    for (std::size_t i = 0; i < data_.size(); ++i) {
      s += data_.mass(i) * std::exp(log_norm_ - 0.5 * squared_distance(x, data_.support()[i]) * inv);
    }
    return s;
  }

  double box_mass(std::span<const double> lo, std::span<const double> hi) const override {
    double s = 0.0;
    const double v = h_ * h_;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      double p = data_.mass(i);
      for (std::size_t k = 0; k < dim() && p > 0.0; ++k) p *= normal_interval(lo[k], hi[k], data_.support()[i][k], v);
      s += p;
    }
    return s;
  }

  PointSet sample(std::size_t count, std::uint64_t seed) const override {
    Rng rng(seed);
    PointSet out(dim());
    if (count == 0) return out;
    CategoricalSampler pick(data_.masses());
    std::normal_distribution<double> z(0.0, h_);
    out.reserve(count);
    std::vector<double> x(dim());
    for (std::size_t s = 0; s < count; ++s) {
      auto c = data_.support()[pick(rng)];
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = c[k] + z(rng);
      out.push_back(x);
    }
    return out;
  }

  nlohmann::json to_json() const override {
    return {{"kind", "kde"},
            {"bandwidth", h_},
            {"centers", detail::points_json(data_.support())},
            {"weights", data_.masses()}};
  }

 private:
  DiscreteDistribution data_;
  double h_;
  double log_norm_ = 0.0;
};

// ---------------------------------------------------------------------------
// FixedFamilyGenerator: pick the best member of a fixed candidate list
// ---------------------------------------------------------------------------

class FixedFamilyGenerator final : public WeakGenerator {
 public:
  FixedFamilyGenerator(std::vector<AnalyticDensity> candidates, std::size_t selected)
      : candidates_(std::move(candidates)), selected_(selected) {
    if (candidates_.empty()) throw ConfigError("fixed family needs at least one candidate");
    if (selected_ >= candidates_.size()) throw ContractViolation("selected index out of range");
  }

  /// Maximum-likelihood choice on weighted data: argmax sum m_i log c(x_i),
  /// which is argmin KL(train || c).
  static FixedFamilyGenerator fit(const DiscreteDistribution& train, std::vector<AnalyticDensity> candidates) {
    if (candidates.empty()) throw ConfigError("fixed family needs at least one candidate");
    std::size_t best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      double ll = 0.0;
      for (std::size_t i = 0; i < train.size(); ++i) {
        if (train.mass(i) > 0.0) ll += train.mass(i) * candidates[c].log_pdf(train.support()[i]);
      }
      if (ll > best_ll) {
        best_ll = ll;
        best = c;
      }
    }
    return {std::move(candidates), best};
  }

  /// Selection against an analytic target by quadrature KL.
  static FixedFamilyGenerator fit(const AnalyticDensity& target, std::vector<AnalyticDensity> candidates,
                                  const GridSpec& grid) {
    const std::size_t idx = mle_select(target, candidates, grid);
    return {std::move(candidates), idx};
  }

  std::string kind() const override { return "fixed_family"; }
  std::size_t dim() const override { return selected().dim(); }
  std::size_t selected_index() const noexcept { return selected_; }
  const AnalyticDensity& selected() const { return candidates_[selected_]; }

  double pdf(std::span<const double> x) const override { return selected().pdf(x); }
  double box_mass(std::span<const double> lo, std::span<const double> hi) const override {
    return selected().box_probability(lo, hi);
  }
  PointSet sample(std::size_t count, std::uint64_t seed) const override {
    Rng rng(seed);
    return detail::sample_analytic(selected(), count, rng);
  }
  nlohmann::json to_json() const override {
    return {{"kind", "fixed_family"}, {"selected", selected_}, {"components", detail::density_json(selected())}};
  }

 private:
  std::vector<AnalyticDensity> candidates_;
  std::size_t selected_;
};

// ---------------------------------------------------------------------------
// Adversarial coverage stress generator
// ---------------------------------------------------------------------------

struct AdversarialResult {
  DiscreteDistribution distribution;
  double achieved_tv = 0.0;
};

/// Moves up to `gamma` mass out of `region` (proportionally to the base
/// masses there) and spreads it over the complement (proportionally, or
/// uniformly when the complement has no mass). If the region holds less than
/// gamma, all of it is moved. The result is at TV distance `achieved_tv`.
inline AdversarialResult adversarial_make(const DiscreteDistribution& base, double gamma,
                                          std::span<const std::size_t> region) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("adversarial budget must lie in [0, 1]");
  const std::size_t n = base.size();
  std::vector<bool> in(n, false);
  for (std::size_t i : region) {
    if (i >= n) throw ContractViolation("region index out of range");
    in[i] = true;
  }
  double region_mass = 0.0, outside_mass = 0.0;
  std::size_t outside_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in[i]) {
      region_mass += base.mass(i);
    } else {
      outside_mass += base.mass(i);
      ++outside_count;
    }
  }
  double moved = std::min(gamma, region_mass);
  if (outside_count == 0 || moved <= 0.0) return {base, 0.0};

  std::vector<double> m(base.masses());
  for (std::size_t i = 0; i < n; ++i) {
    if (in[i]) {
      m[i] -= moved * base.mass(i) / region_mass;
      if (m[i] < 0.0) m[i] = 0.0;
    } else if (outside_mass > 0.0) {
      m[i] += moved * base.mass(i) / outside_mass;
    } else {
      m[i] += moved / static_cast<double>(outside_count);
    }
  }
  if (moved == region_mass) {
    for (std::size_t i = 0; i < n; ++i) {
      if (in[i]) m[i] = 0.0;
    }
  }
  auto dist = DiscreteDistribution::from_weights(base.support(), std::move(m));
  const double tv = tv_masses(base.masses(), dist.masses());
  return {std::move(dist), tv};
}

/// Region choice for the stress generator: the points currently closest to
/// losing coverage (smallest base/reference ratio among covered points),
/// taken in order until their base mass reaches gamma.
inline std::vector<std::size_t> lowest_coverage_region(std::span<const double> base, std::span<const double> reference,
                                                       double delta, double gamma) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i] > 0.0 && base[i] >= delta * reference[i]) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return base[a] * reference[b] < base[b] * reference[a];
  });
  std::vector<std::size_t> region;
  double mass = 0.0;
  for (std::size_t i : order) {
    if (mass >= gamma) break;
    region.push_back(i);
    mass += base[i];
  }
  return region;
}

// ---------------------------------------------------------------------------
// Factories used by the boosting loops
// ---------------------------------------------------------------------------

struct FitContext {
  int round = 1;
  std::uint64_t seed = 0;
  /// Target distribution p (the original, not the round distribution).
  const DiscreteDistribution* reference = nullptr;
  /// Fixed domain box shared by all rounds (histogram grid default).
  const GridSpec* domain = nullptr;
  double delta = 0.25;
};

using GeneratorFactory = std::function<GeneratorPtr(const DiscreteDistribution& train, const FitContext& ctx)>;

inline GeneratorFactory atomic_factory() {
  return [](const DiscreteDistribution& train, const FitContext&) -> GeneratorPtr {
    return std::make_shared<AtomicGenerator>(train);
  };
}

inline GeneratorFactory histogram_factory(HistogramConfig cfg) {
  return [cfg](const DiscreteDistribution& train, const FitContext& ctx) -> GeneratorPtr {
    const GridSpec grid = ctx.domain && ctx.domain->cells() == cfg.cells
                              ? *ctx.domain
                              : (ctx.domain ? GridSpec(ctx.domain->lo(), ctx.domain->hi(), cfg.cells)
                                            : GridSpec::bounding(train.support(), cfg.cells));
    return std::make_shared<HistogramGenerator>(HistogramGenerator::fit(train, grid, cfg));
  };
}

inline GeneratorFactory gmm_factory(GmmConfig cfg) {
  return [cfg](const DiscreteDistribution& train, const FitContext& ctx) -> GeneratorPtr {
    return std::make_shared<GmmGenerator>(GmmGenerator::fit(train, cfg, ctx.seed));
  };
}

inline GeneratorFactory kde_factory(KdeConfig cfg) {
  return [cfg](const DiscreteDistribution& train, const FitContext&) -> GeneratorPtr {
    return std::make_shared<KdeGenerator>(train, cfg.bandwidth);
  };
}

inline GeneratorFactory fixed_family_factory(std::vector<AnalyticDensity> candidates) {
  return [candidates](const DiscreteDistribution& train, const FitContext&) -> GeneratorPtr {
    return std::make_shared<FixedFamilyGenerator>(FixedFamilyGenerator::fit(train, candidates));
  };
}

enum class RegionRule { kExplicit, kLowestCoverage, kRandom };

struct AdversarialConfig {
  double gamma = 0.1;
  RegionRule rule = RegionRule::kLowestCoverage;
  /// Support indices for kExplicit.
  std::vector<std::size_t> region;
};

/// Stress generator: the round distribution perturbed by exactly gamma in
/// TV (when the region allows). Requires an atomic training distribution on
/// the reference support, as in the exact loop.
inline GeneratorFactory adversarial_factory(AdversarialConfig cfg) {
  return [cfg](const DiscreteDistribution& train, const FitContext& ctx) -> GeneratorPtr {
    std::vector<std::size_t> region = cfg.region;
    if (cfg.rule == RegionRule::kLowestCoverage) {
      if (!ctx.reference || ctx.reference->size() != train.size()) {
        throw ConfigError("adversarial lowest-coverage region needs the reference support");
      }
      region = lowest_coverage_region(train.masses(), ctx.reference->masses(), ctx.delta, cfg.gamma);
    } else if (cfg.rule == RegionRule::kRandom) {
      Rng rng(split_seed(ctx.seed, Stream::kAdversary, static_cast<std::uint64_t>(ctx.round)));
      std::vector<std::size_t> order(train.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      double mass = 0.0;
      region.clear();
      for (std::size_t i : order) {
        if (mass >= cfg.gamma) break;
        region.push_back(i);
        mass += train.mass(i);
      }
    }
    auto adv = adversarial_make(train, cfg.gamma, region);
    return std::make_shared<AtomicGenerator>(adv.distribution, "adversarial");
  };
}

/// Uses factories[t-1] in round t and the last one afterwards.
inline GeneratorFactory schedule_factory(std::vector<GeneratorFactory> factories) {
  if (factories.empty()) throw ConfigError("generator schedule is empty");
  return [factories](const DiscreteDistribution& train, const FitContext& ctx) -> GeneratorPtr {
    const auto idx = std::min(static_cast<std::size_t>(std::max(ctx.round, 1) - 1), factories.size() - 1);
    return factories[idx](train, ctx);
  };
}

}  // namespace mwcover

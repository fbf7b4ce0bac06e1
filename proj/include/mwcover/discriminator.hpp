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

// Probabilistic classifiers used as density-ratio estimators, and the
// quality diagnostics that compare their doubling decisions with exact
// densities.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mwcover/core.hpp"
#include "mwcover/kmeans.hpp"
#include "mwcover/rng.hpp"

namespace mwcover {

/// D(x) estimates p_t / (p_t + g_t); predict() is clamped to [kappa, 1 - kappa].
class RatioModel {
 public:
  virtual ~RatioModel() = default;
  virtual double predict(std::span<const double> x) const = 0;
  virtual double clamp() const = 0;
  /// g_t / p_t = 1 / D - 1.
  double ratio(std::span<const double> x) const { return 1.0 / predict(x) - 1.0; }
};

using RatioModelPtr = std::shared_ptr<const RatioModel>;

inline double clamp_probability(double p, double kappa) { return std::clamp(p, kappa, 1.0 - kappa); }

enum class FeatureKind { kAffine, kRbf };
enum class RbfScale { kMedianPairwise, kMedianNearest };

struct DiscriminatorSpec {
  FeatureKind features = FeatureKind::kRbf;
  std::size_t centers = 64;
  RbfScale scale = RbfScale::kMedianPairwise;
  double l2 = 1e-4;
  double clamp = 1e-6;
  /// Samples drawn per class when used inside the boosting loop.
  std::size_t sample_size = 4096;
  int max_iterations = 100;
  double tolerance = 1e-12;
};

/// L2-regularized logistic regression on an affine or RBF feature map,
/// trained by Newton steps with backtracking (loss never increases).
class LogisticDiscriminator final : public RatioModel {
 public:
  static LogisticDiscriminator train(const PointSet& pos, const PointSet& neg, const DiscriminatorSpec& spec,
                                     std::uint64_t seed) {
    if (pos.empty() || neg.empty()) throw ConfigError("discriminator needs non-empty positive and negative samples");
    if (pos.dim() != neg.dim()) throw ContractViolation("positive and negative samples differ in dimension");
    if (!(spec.clamp > 0.0 && spec.clamp <= 0.01)) throw ConfigError("discriminator clamp must lie in (0, 0.01]");
    if (spec.l2 < 0.0) throw ConfigError("discriminator l2 must be >= 0");

    LogisticDiscriminator d;
    d.spec_ = spec;
    d.dim_ = pos.dim();

    PointSet pooled(pos.dim());
    pooled.reserve(pos.size() + neg.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pooled.push_back(pos[i]);
    for (std::size_t i = 0; i < neg.size(); ++i) pooled.push_back(neg[i]);

    d.fit_standardization(pooled);
    if (spec.features == FeatureKind::kRbf) d.choose_centers(pooled, seed);

    const std::size_t n = pooled.size(), p = d.num_features();
    Eigen::MatrixXd F(n, p);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
      F.row(static_cast<Eigen::Index>(i)) = d.features(pooled[i]).transpose();
      y(static_cast<Eigen::Index>(i)) = i < pos.size() ? 1.0 : 0.0;
    }
    // Classes are weighted to equal total mass so unequal sample sizes do not
    // shift the prior.
    Eigen::VectorXd sw(n);
    for (std::size_t i = 0; i < n; ++i) {
      sw(static_cast<Eigen::Index>(i)) = 0.5 / static_cast<double>(i < pos.size() ? pos.size() : neg.size());
    }
    d.optimize(F, y, sw);
    return d;
  }

  double predict(std::span<const double> x) const override {
    const double z = features(x).dot(w_);
    return clamp_probability(1.0 / (1.0 + std::exp(-z)), spec_.clamp);
  }
  double clamp() const override { return spec_.clamp; }

  /// Regularized loss after initialization and after each accepted step.
  const std::vector<double>& loss_history() const noexcept { return loss_; }
  const Eigen::VectorXd& weights() const noexcept { return w_; }
  std::size_t num_centers() const noexcept { return centers_.size(); }
  double rbf_scale() const noexcept { return scale_; }

 private:
  std::size_t num_features() const { return 1 + dim_ + centers_.size(); }

  Eigen::VectorXd features(std::span<const double> x) const {
    Eigen::VectorXd f(static_cast<Eigen::Index>(num_features()));
    f(0) = 1.0;
    std::vector<double> z(dim_);
    for (std::size_t k = 0; k < dim_; ++k) {
      z[k] = (x[k] - mean_[k]) / sd_[k];
      f(static_cast<Eigen::Index>(1 + k)) = z[k];
    }
    const double inv = 1.0 / (2.0 * scale_ * scale_);
    for (std::size_t c = 0; c < centers_.size(); ++c) {
      f(static_cast<Eigen::Index>(1 + dim_ + c)) = std::exp(-squared_distance(z, centers_[c]) * inv);
    }
    return f;
  }

  void fit_standardization(const PointSet& pts) {
    mean_.assign(dim_, 0.0);
    sd_.assign(dim_, 0.0);
    const double n = static_cast<double>(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = 0; k < dim_; ++k) mean_[k] += pts[i][k] / n;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = 0; k < dim_; ++k) sd_[k] += (pts[i][k] - mean_[k]) * (pts[i][k] - mean_[k]) / n;
    }
    for (double& s : sd_) s = s > 0.0 ? std::sqrt(s) : 1.0;
  }

  void choose_centers(const PointSet& pooled, std::uint64_t seed) {
    PointSet z(dim_);
    z.reserve(pooled.size());
    std::vector<double> row(dim_);
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      for (std::size_t k = 0; k < dim_; ++k) row[k] = (pooled[i][k] - mean_[k]) / sd_[k];
      z.push_back(row);
    }
    const std::vector<double> uniform(z.size(), 1.0);
    for (int attempt = 0; attempt < 3; ++attempt) {
      Rng rng(split_seed(seed, Stream::kDiscriminator, static_cast<std::uint64_t>(attempt)));
      auto km = kmeans(z, uniform, std::min(spec_.centers, z.size()), rng, 10);
      const double s = spec_.scale == RbfScale::kMedianPairwise ? median_pairwise(km.centers)
                                                                : median_nearest(z, km.centers);
      if (km.centers.size() >= 2 && s > 0.0 && std::isfinite(s)) {
        centers_ = std::move(km.centers);
        scale_ = s;
        return;
      }
    }
    throw RunError(0, "discriminator feature centers are degenerate after 3 attempts");
  }

  static double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  }

  static double median_pairwise(const PointSet& c) {
    std::vector<double> d;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) d.push_back(std::sqrt(squared_distance(c[i], c[j])));
    }
    return median(std::move(d));
  }

  static double median_nearest(const PointSet& pts, const PointSet& c) {
    // Distance from each center to its nearest other center.
    (void)pts;
    std::vector<double> d;
    for (std::size_t i = 0; i < c.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (j != i) best = std::min(best, squared_distance(c[i], c[j]));
      }
      if (std::isfinite(best) && best > 0.0) d.push_back(std::sqrt(best));
    }
    return median(std::move(d));
  }

  double loss(const Eigen::MatrixXd& F, const Eigen::VectorXd& y, const Eigen::VectorXd& sw,
              const Eigen::VectorXd& w) const {
    const Eigen::VectorXd z = F * w;
    double l = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      // log(1 + exp(z)) - y z, stable for large |z|
      const double zi = z(i);
      const double softplus = zi > 0.0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
      l += sw(i) * (softplus - y(i) * zi);
    }
    return l + 0.5 * spec_.l2 * w.tail(w.size() - 1).squaredNorm();
  }

  void optimize(const Eigen::MatrixXd& F, const Eigen::VectorXd& y, const Eigen::VectorXd& sw) {
    const Eigen::Index p = F.cols();
    w_ = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd reg = Eigen::VectorXd::Constant(p, spec_.l2);
    reg(0) = 0.0;
    double cur = loss(F, y, sw, w_);
    loss_ = {cur};
    for (int it = 0; it < spec_.max_iterations; ++it) {
      const Eigen::VectorXd z = F * w_;
      Eigen::VectorXd mu(z.size()), h(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        mu(i) = 1.0 / (1.0 + std::exp(-z(i)));
        h(i) = sw(i) * mu(i) * (1.0 - mu(i));
      }
      const Eigen::VectorXd grad = F.transpose() * (sw.cwiseProduct(mu - y)) + reg.cwiseProduct(w_);
      if (grad.norm() < 1e-10) break;
      Eigen::MatrixXd H = F.transpose() * h.asDiagonal() * F;
      H.diagonal() += reg;
      H.diagonal().array() += 1e-10;
      const Eigen::VectorXd step = H.ldlt().solve(grad);
      double t = 1.0;
      const double slope = grad.dot(step);
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        const Eigen::VectorXd cand = w_ - t * step;
        const double l = loss(F, y, sw, cand);
        if (std::isfinite(l) && l <= cur - 1e-4 * t * slope) {
          w_ = cand;
          accepted = true;
          const double prev = cur;
          cur = l;
          loss_.push_back(cur);
          if (prev - cur <= spec_.tolerance * std::max(1.0, std::abs(prev))) it = spec_.max_iterations;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
    }
  }

  DiscriminatorSpec spec_;
  std::size_t dim_ = 0;
  std::vector<double> mean_, sd_;
  PointSet centers_;
  double scale_ = 1.0;
  Eigen::VectorXd w_;
  std::vector<double> loss_;
};

/// Ideal discriminator built from density callbacks: D = p_t / (p_t + g_t),
/// clamped. Points where both vanish get 1/2.
class OracleDiscriminator final : public RatioModel {
 public:
  using Density = std::function<double(std::span<const double>)>;
  OracleDiscriminator(Density p_t, Density g_t, double kappa = 1e-6)
      : p_(std::move(p_t)), g_(std::move(g_t)), kappa_(kappa) {}

  double predict(std::span<const double> x) const override {
    const double a = p_(x), b = g_(x);
    if (a + b <= 0.0) return 0.5;
    return clamp_probability(a / (a + b), kappa_);
  }
  double clamp() const override { return kappa_; }

 private:
  Density p_, g_;
  double kappa_;
};

/// Doubling flags of the empirical loop: ratio(x_i) * w_i / W < delta / n,
/// strict. `n` is the dataset size.
inline std::vector<bool> empirical_cover_test(const RatioModel& d, const WeightedDataset& ws, double delta) {
  const double n = static_cast<double>(ws.size());
  std::vector<bool> flags(ws.size());
  for (std::size_t i = 0; i < ws.size(); ++i) {
    flags[i] = d.ratio(ws.points()[i]) * ws.normalized(i) < delta / n;
  }
  return flags;
}

// ---------------------------------------------------------------------------
// Diagnostics against exact densities
// ---------------------------------------------------------------------------

struct DiscriminatorDiagnostics {
  double epsilon_prime = 0.0;
  double lambda_min = 1.0;
  double lambda_mean = 1.0;
  double delta_prime = 0.0;
};

/// P_t-mass of points that are delta-covered (g >= delta p) yet flagged.
inline double epsilon_prime(std::span<const double> g, std::span<const double> p, std::span<const double> p_t,
                            const std::vector<bool>& flags, double delta) {
  if (g.size() != p.size() || p.size() != p_t.size() || flags.size() != p.size()) {
    throw ContractViolation("diagnostic inputs must be aligned");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (flags[i] && g[i] >= delta * p[i]) e += p_t[i];
  }
  return std::clamp(e, 0.0, 1.0);
}

/// Per-point tally for lambda: (#rounds with g >= delta' p) relative to
/// (#rounds not doubled), capped at 1; a point never left undoubled has 1.
class LambdaTally {
 public:
  LambdaTally(std::size_t n, double delta_prime) : covered_(n, 0), kept_(n, 0), delta_prime_(delta_prime) {}

  void add_round(std::span<const double> g, std::span<const double> p, const std::vector<bool>& flags) {
    if (g.size() != covered_.size() || p.size() != covered_.size() || flags.size() != covered_.size()) {
      throw ContractViolation("diagnostic inputs must be aligned");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] >= delta_prime_ * p[i]) ++covered_[i];
      if (!flags[i]) ++kept_[i];
    }
  }

  double lambda(std::size_t i) const {
    if (kept_[i] == 0) return 1.0;
    return std::min(1.0, static_cast<double>(covered_[i]) / static_cast<double>(kept_[i]));
  }

  double min() const {
    double m = 1.0;
    for (std::size_t i = 0; i < covered_.size(); ++i) m = std::min(m, lambda(i));
    return m;
  }

  double weighted_mean(std::span<const double> p) const {
    double s = 0.0, tot = 0.0;
    for (std::size_t i = 0; i < covered_.size(); ++i) {
      s += p[i] * lambda(i);
      tot += p[i];
    }
    return tot > 0.0 ? std::clamp(s / tot, 0.0, 1.0) : 1.0;
  }

  double delta_prime() const noexcept { return delta_prime_; }

 private:
  std::vector<int> covered_, kept_;
  double delta_prime_;
};

}  // namespace mwcover

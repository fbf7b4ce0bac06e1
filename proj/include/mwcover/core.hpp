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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mwcover {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Invalid user-supplied configuration (bad hyperparameter, empty input).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (length mismatch and the like).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The requested operation needs something the object cannot provide,
/// e.g. an exact density from a sample-only model.
class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A failure inside a boosting round; carries the 1-based round index.
class RunError : public std::runtime_error {
 public:
  RunError(int round, const std::string& what)
      : std::runtime_error("round " + std::to_string(round) + ": " + what), round_(round), message_(what) {}
  int round() const noexcept { return round_; }
  /// The message without the round prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  int round_;
  std::string message_;
};

// ---------------------------------------------------------------------------
// PointSet
// ---------------------------------------------------------------------------

/// Points of a fixed dimension stored row-major in one flat buffer.
/// A point is viewed as std::span<const double> of length dim().
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ConfigError("point dimension must be >= 1");
  }
  PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim == 0) throw ConfigError("point dimension must be >= 1");
    if (coords_.size() % dim != 0) throw ContractViolation("coordinate count is not a multiple of dim");
    for (double c : coords_) {
      if (!std::isfinite(c)) throw ConfigError("point coordinates must be finite");
    }
  }

  /// Builds a set from nested rows; every row must have the same length.
  static PointSet from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ConfigError("no points");
    PointSet out(rows.front().size());
    for (const auto& r : rows) out.push_back(r);
    return out;
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> operator[](std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }

  void push_back(std::span<const double> p) {
    if (p.size() != dim_) throw ContractViolation("point dimension mismatch");
    for (double c : p) {
      if (!std::isfinite(c)) throw ConfigError("point coordinates must be finite");
    }
    coords_.insert(coords_.end(), p.begin(), p.end());
  }

  void reserve(std::size_t n) { coords_.reserve(n * dim_); }
  const std::vector<double>& coords() const noexcept { return coords_; }

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

/// Groups identical points; returns, per point, the index of its group and
/// the number of groups. Groups are numbered by first occurrence.
inline std::pair<std::vector<std::size_t>, std::size_t> group_identical(const PointSet& pts) {
  std::map<std::vector<double>, std::size_t> seen;
  std::vector<std::size_t> group(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto p = pts[i];
    auto [it, inserted] = seen.try_emplace(std::vector<double>(p.begin(), p.end()), seen.size());
    group[i] = it->second;
  }
  return {std::move(group), seen.size()};
}

// ---------------------------------------------------------------------------
// Log-domain helpers (base 2)
// ---------------------------------------------------------------------------

/// log2(sum_i 2^{v_i}) with max-shift; returns -inf for empty input.
inline double log2_sum_exp2(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp2(x - m);
  return m + std::log2(s);
}

// ---------------------------------------------------------------------------
// DiscreteDistribution
// ---------------------------------------------------------------------------

inline constexpr double kMassSumTolerance = 1e-9;

/// Probability masses on a finite support. The support may repeat a point
/// (multiset semantics for empirical samples); collapsed() merges repeats.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;
  DiscreteDistribution(PointSet support, std::vector<double> mass)
      : support_(std::move(support)), mass_(std::move(mass)) {
    if (support_.size() != mass_.size()) throw ContractViolation("support and mass lengths differ");
    if (mass_.empty()) throw ConfigError("distribution has empty support");
    double total = 0.0;
    for (double m : mass_) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw ConfigError("masses must be finite and >= 0");
      total += m;
    }
    if (std::abs(total - 1.0) > kMassSumTolerance) {
      throw ConfigError("masses sum to " + std::to_string(total) + ", expected 1");
    }
  }

  static DiscreteDistribution uniform(PointSet support) {
    const std::size_t n = support.size();
    if (n == 0) throw ConfigError("distribution has empty support");
    return {std::move(support), std::vector<double>(n, 1.0 / static_cast<double>(n))};
  }

  /// Normalizes arbitrary nonnegative weights.
  static DiscreteDistribution from_weights(PointSet support, std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw ConfigError("weights must have positive total");
    for (double& w : weights) w /= total;
    return {std::move(support), std::move(weights)};
  }

  const PointSet& support() const noexcept { return support_; }
  const std::vector<double>& masses() const noexcept { return mass_; }
  double mass(std::size_t i) const { return mass_.at(i); }
  std::size_t size() const noexcept { return mass_.size(); }
  std::size_t dim() const noexcept { return support_.dim(); }

  /// Merges repeated support points, summing their mass; first-occurrence order.
  DiscreteDistribution collapsed() const {
    auto [group, count] = group_identical(support_);
    PointSet pts(support_.dim());
    std::vector<double> m(count, 0.0);
    std::vector<bool> placed(count, false);
    pts.reserve(count);
    for (std::size_t i = 0; i < size(); ++i) {
      if (!placed[group[i]]) {
        pts.push_back(support_[i]);
        placed[group[i]] = true;
      }
      m[group[i]] += mass_[i];
    }
    return {std::move(pts), std::move(m)};
  }

 private:
  PointSet support_;
  std::vector<double> mass_;
};

// ---------------------------------------------------------------------------
// GridSpec
// ---------------------------------------------------------------------------

/// Axis-aligned box [lo, hi] split into `cells` equal cells along each axis.
class GridSpec {
 public:
  GridSpec() = default;
  GridSpec(std::vector<double> lo, std::vector<double> hi, std::size_t cells)
      : lo_(std::move(lo)), hi_(std::move(hi)), cells_(cells) {
    if (lo_.empty() || lo_.size() != hi_.size()) throw ConfigError("grid bounds must be non-empty and equal length");
    for (std::size_t k = 0; k < lo_.size(); ++k) {
      if (!(lo_[k] < hi_[k])) throw ConfigError("grid requires lo < hi on every axis");
    }
    if (cells_ < 2) throw ConfigError("grid requires at least 2 cells per axis");
  }

  /// Bounding box of the points, widened by `margin` cell widths on each side.
  static GridSpec bounding(const PointSet& pts, std::size_t cells, double margin = 0.5) {
    if (pts.empty()) throw ConfigError("cannot bound an empty point set");
    const std::size_t d = pts.dim();
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        lo[k] = std::min(lo[k], pts[i][k]);
        hi[k] = std::max(hi[k], pts[i][k]);
      }
    }
    for (std::size_t k = 0; k < d; ++k) {
      double span = hi[k] - lo[k];
      if (span <= 0.0) span = 1.0;
      const double pad = margin * span / static_cast<double>(cells);
      lo[k] -= pad;
      hi[k] += pad;
      if (lo[k] == hi[k]) hi[k] = lo[k] + 1.0;
    }
    return {std::move(lo), std::move(hi), cells};
  }

  std::size_t dim() const noexcept { return lo_.size(); }
  std::size_t cells() const noexcept { return cells_; }
  const std::vector<double>& lo() const noexcept { return lo_; }
  const std::vector<double>& hi() const noexcept { return hi_; }
  double width(std::size_t axis) const { return (hi_[axis] - lo_[axis]) / static_cast<double>(cells_); }

  std::size_t num_cells() const {
    std::size_t n = 1;
    for (std::size_t k = 0; k < dim(); ++k) n *= cells_;
    return n;
  }

  double cell_volume() const {
    double v = 1.0;
    for (std::size_t k = 0; k < dim(); ++k) v *= width(k);
    return v;
  }

  bool contains(std::span<const double> x) const {
    for (std::size_t k = 0; k < dim(); ++k) {
      if (x[k] < lo_[k] || x[k] > hi_[k]) return false;
    }
    return true;
  }

  /// Flat cell index (axis 0 fastest) of a point, nullopt outside the box.
  /// The upper boundary belongs to the last cell.
  std::optional<std::size_t> cell_of(std::span<const double> x) const {
    if (x.size() != dim()) throw ContractViolation("grid/point dimension mismatch");
    std::size_t flat = 0, stride = 1;
    for (std::size_t k = 0; k < dim(); ++k) {
      if (x[k] < lo_[k] || x[k] > hi_[k]) return std::nullopt;
      auto c = static_cast<std::size_t>((x[k] - lo_[k]) / width(k));
      c = std::min(c, cells_ - 1);
      flat += c * stride;
      stride *= cells_;
    }
    return flat;
  }

  /// Lower and upper corners of a flat cell index.
  std::pair<std::vector<double>, std::vector<double>> cell_bounds(std::size_t flat) const {
    std::vector<double> a(dim()), b(dim());
    for (std::size_t k = 0; k < dim(); ++k) {
      const std::size_t c = flat % cells_;
      flat /= cells_;
      a[k] = lo_[k] + width(k) * static_cast<double>(c);
      b[k] = (c + 1 == cells_) ? hi_[k] : lo_[k] + width(k) * static_cast<double>(c + 1);
    }
    return {std::move(a), std::move(b)};
  }

 private:
  std::vector<double> lo_, hi_;
  std::size_t cells_ = 0;
};

// ---------------------------------------------------------------------------
// Gaussian helpers and AnalyticDensity
// ---------------------------------------------------------------------------

inline constexpr double kLn2 = std::numbers::ln2;

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// P(a <= X <= b) for X ~ N(mean, var), accurate in both tails.
inline double normal_interval(double a, double b, double mean, double var) {
  if (!(a < b)) return 0.0;
  const double s = std::sqrt(var);
  const double za = (a - mean) / s, zb = (b - mean) / s;
  if (za > 0.0) return normal_cdf(-za) - normal_cdf(-zb);
  return normal_cdf(zb) - normal_cdf(za);
}

struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> variance;  // diagonal
};

/// Finite mixture of diagonal-covariance Gaussians with closed-form pdf,
/// log-pdf and box probabilities.
class AnalyticDensity {
 public:
  AnalyticDensity() = default;
  explicit AnalyticDensity(std::vector<GaussianComponent> comps) : comps_(std::move(comps)) {
    if (comps_.empty()) throw ConfigError("analytic density needs at least one component");
    const std::size_t d = comps_.front().mean.size();
    if (d == 0) throw ConfigError("component dimension must be >= 1");
    double total = 0.0;
    for (const auto& c : comps_) {
      if (c.mean.size() != d || c.variance.size() != d) throw ConfigError("component dimensions differ");
      if (!(c.weight >= 0.0)) throw ConfigError("component weights must be >= 0");
      for (double v : c.variance) {
        if (!(v > 0.0)) throw ConfigError("component variances must be > 0");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > kMassSumTolerance) throw ConfigError("component weights must sum to 1");
    log_norm_.reserve(comps_.size());
    for (const auto& c : comps_) {
      double ln = 0.0;
      for (double v : c.variance) ln += -0.5 * std::log(2.0 * std::numbers::pi * v);
      log_norm_.push_back(ln);
    }
  }

  /// Isotropic 1D mixture from (weight, mean) pairs sharing one variance.
  static AnalyticDensity mixture_1d(const std::vector<std::pair<double, double>>& wm, double variance = 1.0) {
    std::vector<GaussianComponent> c;
    for (auto [w, m] : wm) c.push_back({w, {m}, {variance}});
    return AnalyticDensity(std::move(c));
  }

  std::size_t dim() const noexcept { return comps_.empty() ? 0 : comps_.front().mean.size(); }
  const std::vector<GaussianComponent>& components() const noexcept { return comps_; }

  double log_pdf(std::span<const double> x) const {
    if (x.size() != dim()) throw ContractViolation("density/point dimension mismatch");
    double m = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> terms;
    terms.assign(comps_.size(), m);
    for (std::size_t j = 0; j < comps_.size(); ++j) {
      const auto& c = comps_[j];
      if (c.weight <= 0.0) continue;
      double q = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - c.mean[k];
        q += d * d / c.variance[k];
      }
      terms[j] = std::log(c.weight) + log_norm_[j] - 0.5 * q;
      m = std::max(m, terms[j]);
    }
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
  }

  double pdf(std::span<const double> x) const { return std::exp(log_pdf(x)); }
  double pdf(double x) const { return pdf(std::span<const double>(&x, 1)); }

  /// Probability of the closed box [lo, hi]; infinite bounds allowed.
  double box_probability(std::span<const double> lo, std::span<const double> hi) const {
    double total = 0.0;
    for (const auto& c : comps_) {
      double p = c.weight;
      for (std::size_t k = 0; k < dim() && p > 0.0; ++k) p *= normal_interval(lo[k], hi[k], c.mean[k], c.variance[k]);
      total += p;
    }
    return total;
  }

 private:
  std::vector<GaussianComponent> comps_;
  std::vector<double> log_norm_;
};

// ---------------------------------------------------------------------------
// WeightedDataset: multiplicative-weights state
// ---------------------------------------------------------------------------

/// Per-point weights w_t(x_i) = w_1(x_i) * 2^{k_i}, stored as log2 of the
/// initial weight plus the integer doubling count k_i so that the weights
/// survive any number of doublings and the doubling history stays exact.
class WeightedDataset {
 public:
  WeightedDataset() = default;
  WeightedDataset(PointSet points, std::vector<double> log2_initial)
      : points_(std::move(points)), log2_initial_(std::move(log2_initial)),
        doublings_(log2_initial_.size(), 0) {
    if (points_.size() != log2_initial_.size()) throw ContractViolation("points and weights lengths differ");
    if (points_.empty()) throw ConfigError("weighted dataset needs at least one point");
    for (double lw : log2_initial_) {
      if (!std::isfinite(lw)) throw ConfigError("initial weights must be strictly positive");
    }
    recompute_total();
  }

  const PointSet& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return log2_initial_.size(); }
  int round() const noexcept { return round_; }
  double log2_total() const noexcept { return log2_total_; }
  double log2_weight(std::size_t i) const { return log2_initial_[i] + static_cast<double>(doublings_[i]); }
  double log2_initial(std::size_t i) const { return log2_initial_[i]; }
  int doublings(std::size_t i) const { return doublings_[i]; }
  const std::vector<int>& doubling_counts() const noexcept { return doublings_; }

  std::vector<double> log2_weights() const {
    std::vector<double> lw(size());
    for (std::size_t i = 0; i < size(); ++i) lw[i] = log2_weight(i);
    return lw;
  }

  /// Current round distribution mass of point i, w_t(x_i) / W_t.
  double normalized(std::size_t i) const { return std::exp2(log2_weight(i) - log2_total_); }

  /// Returns a copy with the flagged weights doubled and the round advanced.
  WeightedDataset doubled(const std::vector<bool>& flags) const {
    if (flags.size() != size()) throw ContractViolation("doubling flag count does not match point count");
    WeightedDataset next = *this;
    for (std::size_t i = 0; i < size(); ++i) {
      if (flags[i]) ++next.doublings_[i];
    }
    ++next.round_;
    next.recompute_total();
    return next;
  }

 private:
  void recompute_total() {
    const auto lw = log2_weights();
    log2_total_ = log2_sum_exp2(lw);
  }

  PointSet points_;
  std::vector<double> log2_initial_;
  std::vector<int> doublings_;
  int round_ = 1;
  double log2_total_ = 0.0;
};

/// Uniform initial weights 1/n over the samples (duplicates kept apart).
inline WeightedDataset init_weights_empirical(const PointSet& points) {
  if (points.empty()) throw ConfigError("cannot initialize weights of an empty dataset");
  const double lw = -std::log2(static_cast<double>(points.size()));
  return {points, std::vector<double>(points.size(), lw)};
}

/// Initial weights w_1(x) = p(x) over the target's support. Zero-mass
/// support points are rejected since weights must stay strictly positive.
inline WeightedDataset init_weights_exact(const DiscreteDistribution& target) {
  std::vector<double> lw(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!(target.mass(i) > 0.0)) throw ConfigError("exact initialization requires positive masses");
    lw[i] = std::log2(target.mass(i));
  }
  return {target.support(), std::move(lw)};
}

inline DiscreteDistribution normalize(const WeightedDataset& ws) {
  std::vector<double> m(ws.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ws.size(); ++i) total += (m[i] = ws.normalized(i));
  // Rounding only; the log-sum-exp total is already exact to a few ulps.
  for (double& x : m) x /= total;
  return {ws.points(), std::move(m)};
}

inline WeightedDataset double_weights(const WeightedDataset& ws, const std::vector<bool>& flags) {
  return ws.doubled(flags);
}

}  // namespace mwcover

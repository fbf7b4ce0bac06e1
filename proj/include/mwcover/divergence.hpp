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

// f-divergences between discrete distributions and between analytic
// densities (trapezoidal quadrature in one or two dimensions).

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mwcover/core.hpp"

namespace mwcover {

enum class DivergenceKind { kTV, kKL, kJS, kHellinger };
enum class LogBase { kTwo, kE };

inline const char* to_string(DivergenceKind k) {
  switch (k) {
    case DivergenceKind::kTV: return "TV";
    case DivergenceKind::kKL: return "KL";
    case DivergenceKind::kJS: return "JS";
    case DivergenceKind::kHellinger: return "Hellinger";
  }
  return "?";
}

struct DivergenceValue {
  DivergenceKind kind = DivergenceKind::kTV;
  double value = 0.0;
  LogBase log_base = LogBase::kTwo;
  /// Set when some cell's integrand hit the cap (second density underflowed).
  bool saturated = false;
};

/// Raised when the quadrature box misses more than the allowed mass.
class QuadratureCoverageError : public std::runtime_error {
 public:
  QuadratureCoverageError(double captured_a, double captured_b)
      : std::runtime_error("quadrature grid captures only " + std::to_string(std::min(captured_a, captured_b)) +
                           " of the probability mass"),
        captured_a_(captured_a), captured_b_(captured_b) {}
  double captured_a() const noexcept { return captured_a_; }
  double captured_b() const noexcept { return captured_b_; }

 private:
  double captured_a_, captured_b_;
};

// ---------------------------------------------------------------------------
// Discrete forms on aligned mass vectors
// ---------------------------------------------------------------------------

namespace detail {
inline void check_aligned(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ContractViolation("mass vectors must be aligned");
}
inline double log_scale(LogBase b) { return b == LogBase::kTwo ? 1.0 / kLn2 : 1.0; }
}  // namespace detail

inline double tv_masses(std::span<const double> p, std::span<const double> q) {
  detail::check_aligned(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return std::clamp(0.5 * s, 0.0, 1.0);
}

/// KL(p || q); +inf when p puts mass where q has none.
inline double kl_masses(std::span<const double> p, std::span<const double> q, LogBase base = LogBase::kE) {
  detail::check_aligned(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(0.0, s) * detail::log_scale(base);
}

inline double js_masses(std::span<const double> p, std::span<const double> q, LogBase base = LogBase::kE) {
  detail::check_aligned(p, q);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) s += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) s += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::max(0.0, s) * detail::log_scale(base);
}

/// Hellinger distance with H^2 = 1 - sum sqrt(p q), so H lies in [0, 1].
inline double hellinger_masses(std::span<const double> p, std::span<const double> q) {
  detail::check_aligned(p, q);
  double bc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
  return std::sqrt(std::clamp(1.0 - bc, 0.0, 1.0));
}

/// Mass vectors of two distributions over the union of their supports.
/// Repeated points are merged first.
inline std::pair<std::vector<double>, std::vector<double>> align_supports(const DiscreteDistribution& p,
                                                                          const DiscreteDistribution& q) {
  if (p.dim() != q.dim()) throw ContractViolation("distributions have different dimensions");
  std::map<std::vector<double>, std::size_t> index;
  std::vector<double> a, b;
  auto add = [&](const DiscreteDistribution& d, bool first) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      auto pt = d.support()[i];
      auto [it, inserted] = index.try_emplace(std::vector<double>(pt.begin(), pt.end()), a.size());
      if (inserted) {
        a.push_back(0.0);
        b.push_back(0.0);
      }
      (first ? a : b)[it->second] += d.mass(i);
    }
  };
  add(p, true);
  add(q, false);
  return {std::move(a), std::move(b)};
}

/// Total variation 0.5 * sum |p_i - q_i|. Without `allow_fill` the two
/// supports must hold the same set of points.
inline double tv_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q, bool allow_fill = false) {
  if (!allow_fill) {
    const auto pc = p.collapsed(), qc = q.collapsed();
    if (pc.size() != qc.size()) throw ContractViolation("supports differ; pass allow_fill to zero-fill");
    auto [a, b] = align_supports(pc, qc);
    if (a.size() != pc.size()) throw ContractViolation("supports differ; pass allow_fill to zero-fill");
    return tv_masses(a, b);
  }
  auto [a, b] = align_supports(p, q);
  return tv_masses(a, b);
}

inline DivergenceValue divergence_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                           DivergenceKind kind, LogBase base = LogBase::kTwo) {
  auto [a, b] = align_supports(p, q);
  DivergenceValue out{kind, 0.0, base, false};
  switch (kind) {
    case DivergenceKind::kTV: out.value = tv_masses(a, b); break;
    case DivergenceKind::kKL: out.value = kl_masses(a, b, base); break;
    case DivergenceKind::kJS: out.value = js_masses(a, b, base); break;
    case DivergenceKind::kHellinger: out.value = hellinger_masses(a, b); break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature on analytic densities
// ---------------------------------------------------------------------------

struct QuadratureOptions {
  double min_captured_mass = 0.9999;
  /// Upper clip on the KL integrand at a node.
  double integrand_cap = 1e6;
  /// First-argument densities below this contribute nothing to KL.
  double density_floor = 1e-300;
};

namespace detail {

/// Calls f(x, weight) over trapezoidal nodes of a 1D or 2D grid. The grid's
/// `cells` count intervals per axis, so there are cells + 1 nodes.
template <class F>
void for_each_trapezoid_node(const GridSpec& grid, F&& f) {
  const std::size_t d = grid.dim();
  if (d != 1 && d != 2) throw UnsupportedOperation("quadrature supports 1D and 2D densities only");
  const std::size_t nodes = grid.cells() + 1;
  std::vector<double> x(d);
  auto axis_weight = [&](std::size_t axis, std::size_t i) {
    const double w = grid.width(axis);
    return (i == 0 || i + 1 == nodes) ? 0.5 * w : w;
  };
  if (d == 1) {
    for (std::size_t i = 0; i < nodes; ++i) {
      x[0] = grid.lo()[0] + grid.width(0) * static_cast<double>(i);
      f(std::span<const double>(x), axis_weight(0, i));
    }
    return;
  }
  for (std::size_t j = 0; j < nodes; ++j) {
    x[1] = grid.lo()[1] + grid.width(1) * static_cast<double>(j);
    const double wj = axis_weight(1, j);
    for (std::size_t i = 0; i < nodes; ++i) {
      x[0] = grid.lo()[0] + grid.width(0) * static_cast<double>(i);
      f(std::span<const double>(x), axis_weight(0, i) * wj);
    }
  }
}

}  // namespace detail

/// Integral of a divergence integrand between two analytic densities over
/// the grid box. KL(a || b) integrates a * log(a / b).
inline DivergenceValue divergence_numeric(const AnalyticDensity& a, const AnalyticDensity& b, DivergenceKind kind,
                                          const GridSpec& grid, LogBase base = LogBase::kTwo,
                                          const QuadratureOptions& opt = {}) {
  if (a.dim() != grid.dim() || b.dim() != grid.dim()) throw ContractViolation("density/grid dimension mismatch");
  const double cap_a = a.box_probability(grid.lo(), grid.hi());
  const double cap_b = b.box_probability(grid.lo(), grid.hi());
  if (cap_a < opt.min_captured_mass || cap_b < opt.min_captured_mass) throw QuadratureCoverageError(cap_a, cap_b);

  const double log_floor = std::log(opt.density_floor);
  DivergenceValue out{kind, 0.0, base, false};
  double acc = 0.0;
  detail::for_each_trapezoid_node(grid, [&](std::span<const double> x, double w) {
    const double la = a.log_pdf(x), lb = b.log_pdf(x);
    const double pa = std::exp(la), pb = std::exp(lb);
    double v = 0.0;
    switch (kind) {
      case DivergenceKind::kTV: v = 0.5 * std::abs(pa - pb); break;
      case DivergenceKind::kKL:
        if (la < log_floor) break;
        if (!std::isfinite(lb)) {
          v = opt.integrand_cap;
          out.saturated = true;
        } else {
          v = pa * (la - lb);
          if (v > opt.integrand_cap) {
            v = opt.integrand_cap;
            out.saturated = true;
          }
        }
        break;
      case DivergenceKind::kJS: {
        const double m = 0.5 * (pa + pb);
        if (m <= 0.0) break;
        const double lm = std::log(m);
        if (pa > 0.0) v += 0.5 * pa * (la - lm);
        if (pb > 0.0) v += 0.5 * pb * (lb - lm);
        break;
      }
      case DivergenceKind::kHellinger: v = std::exp(0.5 * (la + lb)); break;
    }
    acc += w * v;
  });

  switch (kind) {
    case DivergenceKind::kTV: out.value = std::clamp(acc, 0.0, 1.0); break;
    case DivergenceKind::kKL:
    case DivergenceKind::kJS: out.value = std::max(0.0, acc) * detail::log_scale(base); break;
    case DivergenceKind::kHellinger: out.value = std::sqrt(std::clamp(1.0 - acc, 0.0, 1.0)); break;
  }
  return out;
}

/// Exact probability of a union of disjoint 1D intervals.
inline double interval_probability(const AnalyticDensity& a, const std::vector<std::pair<double, double>>& intervals) {
  if (a.dim() != 1) throw ContractViolation("interval_probability needs a 1D density");
  double total = 0.0;
  for (auto [lo, hi] : intervals) {
    std::vector<double> l{lo}, h{hi};
    total += a.box_probability(l, h);
  }
  return total;
}

/// Index of the family member minimizing KL(target || member); ties go to
/// the lowest index.
inline std::size_t mle_select(const AnalyticDensity& target, const std::vector<AnalyticDensity>& family,
                              const GridSpec& grid) {
  if (family.empty()) throw ConfigError("mle_select needs a non-empty family");
  std::size_t best = 0;
  double best_kl = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double kl = divergence_numeric(target, family[i], DivergenceKind::kKL, grid).value;
    if (kl < best_kl) {
      best_kl = kl;
      best = i;
    }
  }
  return best;
}

}  // namespace mwcover

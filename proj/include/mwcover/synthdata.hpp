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

// Synthetic targets and datasets.

#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mwcover/core.hpp"
#include "mwcover/rng.hpp"

namespace mwcover {

struct LabeledDataset {
  PointSet points;
  std::vector<int> mode_id;
  /// Mode centers when the dataset has them (empty otherwise).
  PointSet centers;
  /// Per-mode standard deviation used by the coverage counting rule.
  double sigma0 = 0.0;

  std::vector<std::size_t> indices_of(int mode) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < mode_id.size(); ++i) {
      if (mode_id[i] == mode) out.push_back(i);
    }
    return out;
  }
};

/// 0.9 N(0,1) + 0.05 N(10,1) + 0.05 N(-10,1).
inline AnalyticDensity make_fig1_target() { return AnalyticDensity::mixture_1d({{0.9, 0.0}, {0.05, 10.0}, {0.05, -10.0}}); }

struct Fig6Instance {
  AnalyticDensity p, g1, g2;
};

inline Fig6Instance make_fig6_instance() {
  return {AnalyticDensity::mixture_1d({{0.98, 0.0}, {0.01, 10.0}, {0.01, -10.0}}),
          AnalyticDensity::mixture_1d({{1.0, 0.0}}),
          AnalyticDensity::mixture_1d({{0.34, 0.0}, {0.33, 10.0}, {0.33, -10.0}})};
}

struct SineSpec {
  std::size_t n_major = 40000;
  double ratio = 400.0;
  std::array<double, 2> minor_center{10.0, 0.0};
  double minor_var = 1.0;
  std::uint64_t seed = 0;
};

/// Major mode: x ~ U[-10, 10], y = x sin(4x / pi) (mode 0). Minor mode:
/// round(n_major / ratio) Gaussian points (mode 1), appended after the major ones.
inline LabeledDataset make_sine_dataset(const SineSpec& s) {
  if (!(s.ratio >= 1.0) || static_cast<double>(s.n_major) < s.ratio) throw ConfigError("sine dataset needs n_major >= ratio >= 1");
  if (!(s.minor_var > 0.0)) throw ConfigError("minor_var must be > 0");
  LabeledDataset d;
  d.points = PointSet(2);
  const auto n_minor = static_cast<std::size_t>(std::llround(static_cast<double>(s.n_major) / s.ratio));
  d.points.reserve(s.n_major + n_minor);
  Rng rng(split_seed(s.seed, Stream::kDataset, 0));
  std::uniform_real_distribution<double> ux(-10.0, 10.0);
  for (std::size_t i = 0; i < s.n_major; ++i) {
    const double x = ux(rng);
    const double p[2] = {x, x * std::sin(4.0 * x / std::numbers::pi)};
    d.points.push_back(p);
    d.mode_id.push_back(0);
  }
  std::normal_distribution<double> z(0.0, std::sqrt(s.minor_var));
  for (std::size_t i = 0; i < n_minor; ++i) {
    const double p[2] = {s.minor_center[0] + z(rng), s.minor_center[1] + z(rng)};
    d.points.push_back(p);
    d.mode_id.push_back(1);
  }
  d.centers = PointSet(2);
  const double mc[2] = {s.minor_center[0], s.minor_center[1]};
  d.centers.push_back(mc);
  d.sigma0 = std::sqrt(s.minor_var);
  return d;
}

namespace detail {
/// n samples assigned to modes round-robin, each with isotropic noise.
inline LabeledDataset gaussian_modes(const PointSet& centers, double var, std::size_t n, std::uint64_t seed) {
  LabeledDataset d;
  d.centers = centers;
  d.sigma0 = std::sqrt(var);
  d.points = PointSet(centers.dim());
  d.points.reserve(n);
  Rng rng(split_seed(seed, Stream::kDataset, 1));
  std::normal_distribution<double> z(0.0, d.sigma0);
  std::vector<double> x(centers.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = i % centers.size();
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = centers[m][k] + z(rng);
    d.points.push_back(x);
    d.mode_id.push_back(static_cast<int>(m));
  }
  return d;
}
}  // namespace detail

struct GaussGridSpec {
  std::size_t modes = 10;
  double lo = -15.0, hi = 15.0;
  double var = 0.05;
  std::size_t n = 10000;
  std::uint64_t seed = 0;
};

/// Mode centers uniform in [lo, hi]^2 (seeded).
inline LabeledDataset make_gauss_grid(const GaussGridSpec& s) {
  if (s.modes == 0) throw ConfigError("gauss grid needs at least one mode");
  if (!(s.lo < s.hi) || !(s.var > 0.0)) throw ConfigError("gauss grid needs lo < hi and var > 0");
  Rng rng(split_seed(s.seed, Stream::kDataset, 0));
  std::uniform_real_distribution<double> u(s.lo, s.hi);
  PointSet centers(2);
  for (std::size_t m = 0; m < s.modes; ++m) {
    const double c[2] = {u(rng), u(rng)};
    centers.push_back(c);
  }
  return detail::gaussian_modes(centers, s.var, s.n, s.seed);
}

/// 20 modes at (cos(i/3) i^2, sin(i/3) i^2), i = 1..20, unit variance.
inline PointSet spiral_centers() {
  PointSet c(2);
  for (int i = 1; i <= 20; ++i) {
    const double r = static_cast<double>(i * i);
    const double p[2] = {std::cos(i / 3.0) * r, std::sin(i / 3.0) * r};
    c.push_back(p);
  }
  return c;
}

inline LabeledDataset make_spiral(std::size_t n, std::uint64_t seed) {
  return detail::gaussian_modes(spiral_centers(), 1.0, n, seed);
}

/// 21 x 21 grid on [-10, 10]^2 plus one mode at (100, 100) (the last
/// center, mode id 441), variance 0.05.
inline PointSet grid_isolated_centers() {
  PointSet c(2);
  for (int j = 0; j <= 20; ++j) {
    for (int i = 0; i <= 20; ++i) {
      const double p[2] = {-10.0 + i, -10.0 + j};
      c.push_back(p);
    }
  }
  const double iso[2] = {100.0, 100.0};
  c.push_back(iso);
  return c;
}

inline constexpr int kIsolatedMode = 441;

inline LabeledDataset make_grid_isolated(std::size_t n, std::uint64_t seed) {
  return detail::gaussian_modes(grid_isolated_centers(), 0.05, n, seed);
}

}  // namespace mwcover

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

#include <limits>
#include <random>
#include <span>
#include <vector>

#include "mwcover/core.hpp"
#include "mwcover/rng.hpp"

namespace mwcover {

/// k-means++ seeding on weighted points.
inline PointSet kmeans_plus_plus(const PointSet& pts, std::span<const double> weights, std::size_t k, Rng& rng) {
  const std::size_t n = pts.size();
  if (k == 0 || n == 0) throw ConfigError("k-means needs k >= 1 and a non-empty point set");
  PointSet centers(pts.dim());
  centers.reserve(k);
  centers.push_back(pts[CategoricalSampler(weights)(rng)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<double> score(n);
  while (centers.size() < k) {
    const auto last = centers[centers.size() - 1];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(pts[i], last));
      total += (score[i] = weights[i] * d2[i]);
    }
    if (!(total > 0.0)) break;  // fewer distinct points than k
    centers.push_back(pts[CategoricalSampler(score)(rng)]);
  }
  return centers;
}

struct KMeansResult {
  PointSet centers;
  std::vector<std::size_t> assignment;
};

/// Weighted Lloyd iterations from k-means++ seeds. Empty clusters keep their
/// previous center.
inline KMeansResult kmeans(const PointSet& pts, std::span<const double> weights, std::size_t k, Rng& rng,
                           int iterations = 25) {
  KMeansResult r{kmeans_plus_plus(pts, weights, k, rng), std::vector<std::size_t>(pts.size(), 0)};
  const std::size_t d = pts.dim();
  const std::size_t kk = r.centers.size();
  for (int it = 0; it < iterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < kk; ++c) {
        const double dd = squared_distance(pts[i], r.centers[c]);
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (r.assignment[i] != best) changed = true;
      r.assignment[i] = best;
    }
    if (!changed) break;
    std::vector<double> sum(kk * d, 0.0), wsum(kk, 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::size_t c = r.assignment[i];
      wsum[c] += weights[i];
      for (std::size_t a = 0; a < d; ++a) sum[c * d + a] += weights[i] * pts[i][a];
    }
    std::vector<double> coords(r.centers.coords());
    for (std::size_t c = 0; c < kk; ++c) {
      if (wsum[c] <= 0.0) continue;
      for (std::size_t a = 0; a < d; ++a) coords[c * d + a] = sum[c * d + a] / wsum[c];
    }
    r.centers = PointSet(d, std::move(coords));
  }
  return r;
}

}  // namespace mwcover

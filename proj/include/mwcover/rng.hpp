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
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mwcover/core.hpp"

namespace mwcover {

using Rng = std::mt19937_64;

/// Stream identifiers for seed splitting. Each (purpose, index) pair gets an
/// independent stream so that adding rounds or trials never perturbs
/// earlier ones.
enum class Stream : std::uint64_t {
  kFit = 1,
  kResample = 2,
  kDiscriminator = 3,
  kGeneratorSample = 4,
  kTrial = 5,
  kDataset = 6,
  kMixtureSample = 7,
  kAdversary = 8,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t split_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream))) + index);
}

/// Inverse-CDF sampler over nonnegative weights (need not be normalized).
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> weights) : cdf_(weights.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) cdf_[i] = (acc += weights[i]);
    if (!(acc > 0.0)) throw ConfigError("categorical sampler needs positive total weight");
  }

  std::size_t operator()(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, cdf_.back());
    const double r = u(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), r);
    std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
    if (i >= cdf_.size()) i = cdf_.size() - 1;
    // Skip zero-weight entries hit through a boundary tie.
    while (i > 0 && cdf_[i] == cdf_[i - 1]) --i;
    return i;
  }

 private:
  std::vector<double> cdf_;
};

/// Flat Dirichlet draw of dimension n.
inline std::vector<double> flat_dirichlet(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) s += (x = e(rng));
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace mwcover

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mwcover/coverage.hpp"
#include "mwcover/divergence.hpp"
#include "mwcover/rng.hpp"
#include "mwcover/synthdata.hpp"

using namespace mwcover;
using Catch::Approx;

namespace {

// Closed-form values evaluated independently in double precision.
constexpr double kLemma2 = 0.2114326240;
constexpr double kTheorem1At025 = 0.0310957439;
constexpr double kTheorem1AtOpt = 0.0619725566;
constexpr double kImperfect = 0.0094046802;
constexpr double kOptDelta00 = 0.1732867951;
constexpr double kOptDelta = 0.1465539272;

PointSet normal_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  PointSet s(1);
  for (std::size_t i = 0; i < n; ++i) s.push_back(std::vector<double>{z(rng)});
  return s;
}

double scan_argmax(const std::function<double(double)>& f) {
  double best = 0.0, arg = 0.0;
  for (int i = 0; i <= 500000; ++i) {
    const double d = 0.5 * i / 500000.0;
    const double v = f(d);
    if (v > best) {
      best = v;
      arg = d;
    }
  }
  return arg;
}

}  // namespace

TEST_CASE("delta cover predicate", "[coverage]") {
  CHECK(is_delta_covered(0.3, 0.3, 1.0));
  CHECK_FALSE(is_delta_covered(0.0, 0.2, 1e-9));
  const double phi0 = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  CHECK(is_delta_covered(0.34 * phi0, 0.98 * phi0, 1.0 / 3));
  const auto f = make_fig6_instance();
  CHECK(f.g2.pdf(0.0) / f.p.pdf(0.0) == Approx(0.347).margin(5e-4));
  // exactly on the threshold counts as covered
  CHECK(is_delta_covered(0.25, 1.0, 0.25));
}

TEST_CASE("subset cover ratio", "[coverage]") {
  const auto f = make_fig6_instance();
  const std::vector<std::pair<double, double>> tails{{-14.0, -6.0}, {6.0, 14.0}};
  const double gs = interval_probability(f.g1, tails), ps = interval_probability(f.p, tails);
  CHECK(gs == Approx(1.97e-9).epsilon(0.01));
  CHECK(ps == Approx(0.0200).margin(5e-4));
  const double r = subset_cover_ratio(gs, ps);
  CHECK(r > 1e-7 / 3);
  CHECK(r < 3e-7);
  CHECK(subset_cover_ratio(0.3, 0.3) == 1.0);
  CHECK(subset_cover_ratio(0.5, 0.25) == 2.0);
  CHECK_THROWS_AS(subset_cover_ratio(0.1, 0.0), UndefinedSubsetError);
}

TEST_CASE("delta beta estimates", "[coverage]") {
  const std::vector<double> q{0.2, 0.3, 0.5};
  for (double d : {0.1, 0.5, 1.0}) CHECK(delta_beta_exact(q, q, q, d) == 1.0);

  const std::vector<double> g{1.0, 0.0}, p{5.0 / 7, 2.0 / 7};
  CHECK(delta_beta_exact(g, p, p, 0.25) == Approx(5.0 / 7).epsilon(1e-15));

  const auto target = make_fig1_target();
  const auto n01 = AnalyticDensity::mixture_1d({{1.0, 0.0}});
  const PdfFn gq = [&](std::span<const double> x) { return n01.pdf(x); };
  const PdfFn pp = [&](std::span<const double> x) { return target.pdf(x); };
  const auto est = delta_beta_estimate(gq, pp, normal_samples, 0.25, 1000000, 3);
  CHECK(est.samples == 1000000);
  CHECK(est.beta >= 1.0 - 1e-5);
  CHECK(est.std_error <= 1e-5);
  const auto self = delta_beta_estimate(gq, gq, normal_samples, 1.0, 1000, 4);
  CHECK(self.beta == 1.0);
  CHECK(self.std_error == 0.0);
}

TEST_CASE("pointwise psi", "[coverage]") {
  const std::vector<double> p{5.0 / 7, 2.0 / 7};
  const auto same = pointwise_psi(p, p, 0.1);
  CHECK(same.psi_hat == Approx(1.0).epsilon(1e-15));

  const std::vector<double> mix{(1.0 + 5.0 / 9) / 2, 2.0 / 9};
  const auto r = pointwise_psi(mix, p, 0.1);
  CHECK(r.psi_hat == Approx(7.0 / 9).epsilon(1e-14));
  CHECK(r.ratios[0] == Approx(1.0888888889).epsilon(1e-9));
  CHECK(r.worst_subset.indices == std::vector<std::size_t>{1});
  CHECK(r.worst_subset.mass >= 0.1);

  const std::vector<double> collapsed{1.0, 0.0};
  CHECK(pointwise_psi(collapsed, p, 0.1).psi_hat == 0.0);

  const auto j = to_json(r);
  CHECK(j.at("psi_hat").get<double>() == r.psi_hat);
  CHECK(j.at("worst_subset").at("indices").size() == 1);
  CHECK(j.at("ratios").size() == 2);
}

TEST_CASE("worst subset prefix search", "[coverage]") {
  const std::vector<double> eq{0.5, 0.5};
  const auto a = worst_subset(std::vector<double>{0.1, 1.0}, eq, 0.5);
  CHECK(a.indices == std::vector<std::size_t>{0});
  CHECK(a.ratio == Approx(0.1));
  const auto b = worst_subset(std::vector<double>{0.7, 0.7, 0.7, 0.7}, std::vector<double>(4, 0.25), 0.3);
  CHECK(b.ratio == Approx(0.7));
  CHECK(b.mass >= 0.3);
  CHECK_THROWS_AS(worst_subset(std::vector<double>{1.0}, std::vector<double>{1.0}, 0.0), ConfigError);
}

TEST_CASE("worst subset against exhaustive enumeration", "[coverage][property]") {
  Rng rng(split_seed(31, Stream::kTrial, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 11);
    const bool equal = t % 2 == 0;
    const std::vector<double> p = equal ? std::vector<double>(n, 1.0 / static_cast<double>(n)) : flat_dirichlet(n, rng);
    const auto g = flat_dirichlet(n, rng);
    const double lb = 0.05 + 0.9 * u(rng);
    std::vector<double> ratios(n);
    for (std::size_t i = 0; i < n; ++i) ratios[i] = g[i] / p[i];
    const auto pre = worst_subset(ratios, p, lb);
    const auto ex = worst_subset_exhaustive(g, p, lb);
    REQUIRE(pre.mass + 1e-12 >= lb);
    // a prefix is itself a feasible subset, so it never undercuts the optimum
    REQUIRE(pre.ratio >= ex.ratio - 1e-12);
    if (equal) REQUIRE(pre.ratio == Approx(ex.ratio).epsilon(1e-12));

    const double small = *std::min_element(p.begin(), p.end());
    const auto rep = pointwise_psi(g, p, small);
    REQUIRE(rep.worst_subset.ratio <= rep.psi_hat + 1e-12);
  }
}

TEST_CASE("closed-form bounds", "[coverage]") {
  CHECK(lemma1_bound(0.25, 0.1) == Approx(0.4).epsilon(1e-15));
  CHECK(lemma1_bound(0.5, 0.0) == 0.0);
  CHECK(lemma1_bound(0.1, 0.05) == Approx(0.75).epsilon(1e-15));

  CHECK(lemma2_bound(0.3, 0.0, 0.0) == 0.3);
  CHECK(lemma2_bound(0.25, 0.1, 0.01) == Approx(kLemma2).margin(1e-10));
  CHECK(lemma2_bound(0.25, 0.1, 0.01) == Approx(0.21143).margin(5e-6));
  CHECK(lemma2_bound(0.25, std::numbers::ln2 * 0.99, 0.01) == Approx(0.0).margin(1e-15));

  CHECK(theorem1_bound(0.25, 0.1, 0.01) == Approx(kTheorem1At025).margin(1e-10));
  CHECK(theorem1_bound(0.25, 0.1, 0.01) == Approx(0.031096).margin(5e-7));
  CHECK(theorem1_bound(1e-9, 0.0, 0.0) < 1e-8);
  CHECK(theorem1_bound(0.1466, 0.1, 0.01) == Approx(kTheorem1AtOpt).margin(1e-10));
  CHECK(theorem1_bound(0.1466, 0.1, 0.01) > theorem1_bound(0.25, 0.1, 0.01));

  TheoryParams t{.delta = 0.25, .gamma = 0.1, .eta = 0.01, .epsilon_prime = 0.0, .lambda = 1.0, .delta_prime = 0.25};
  CHECK(imperfect_disc_bound(t) == Approx(theorem1_bound(0.25, 0.1, 0.01)).epsilon(1e-15));
  t.epsilon_prime = 0.05;
  t.lambda = 0.9;
  t.delta_prime = 0.2;
  CHECK(imperfect_disc_bound(t) == Approx(kImperfect).margin(1e-10));
  t.lambda = 0.0;
  CHECK(imperfect_disc_bound(t) == 0.0);

  CHECK(game_bound(0.25, 0.0) == 0.125);
  CHECK(game_bound(0.25, 0.1) == Approx(0.1).epsilon(1e-15));
  CHECK(game_bound(0.5, 0.0) == 0.0);

  CHECK(is_vacuous(theorem1_bound(0.25, 0.1, 0.2)));
  CHECK(is_vacuous(0.0));
  CHECK_FALSE(is_vacuous(kTheorem1At025));
}

TEST_CASE("optimal delta", "[coverage]") {
  CHECK(optimal_delta(0.0, 0.0).delta == Approx(kOptDelta00).margin(1e-10));
  CHECK(optimal_delta(0.0, 0.0).delta == Approx(std::numbers::ln2 / 4).epsilon(1e-15));
  CHECK(optimal_delta(0.1, 0.01).delta == Approx(kOptDelta).margin(1e-10));
  CHECK_FALSE(optimal_delta(0.1, 0.01).clamped);
  const auto c = optimal_delta(0.8, 0.0);
  CHECK(c.delta == 0.0);
  CHECK(c.clamped);
}

TEST_CASE("optimal delta maximizes the theorem bound", "[coverage][property]") {
  Rng rng(split_seed(32, Stream::kTrial, 0));
  std::uniform_real_distribution<double> ug(0.0, 0.4), ue(0.0, 0.3);
  for (int i = 0; i < 50; ++i) {
    const double gamma = ug(rng), eta = ue(rng);
    const auto o = optimal_delta(gamma, eta);
    if (o.clamped) continue;
    const double arg = scan_argmax([&](double d) { return theorem1_bound(d, gamma, eta); });
    REQUIRE(arg == Approx(o.delta).margin(1e-6));
  }
}

TEST_CASE("game bound maximizer", "[coverage][property]") {
  Rng rng(split_seed(33, Stream::kTrial, 0));
  std::uniform_real_distribution<double> ug(0.0, 0.9);
  for (int i = 0; i < 50; ++i) {
    const double gamma = ug(rng);
    const double arg = scan_argmax([&](double d) { return game_bound(d, gamma); });
    REQUIRE(arg == Approx((1.0 - gamma) / 4).margin(1e-6));
  }
  CHECK(game_bound(scan_argmax([](double d) { return game_bound(d, 0.0); }), 0.0) == 0.125);
}

TEST_CASE("theorem bound never exceeds the lemma bound it composes", "[coverage][property]") {
  Rng rng(split_seed(34, Stream::kTrial, 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double d = 0.5 * u(rng), g = u(rng), e = u(rng);
    REQUIRE(theorem1_bound(d, g, e) <= lemma2_bound(d, g + 2.0 * d, e) + 1e-15);
  }
}

TEST_CASE("generalization sample size", "[coverage]") {
  CHECK(generalization_sample_size(0.1, 10, 20, 1) == Approx(2000.0).epsilon(1e-15));
  CHECK(generalization_sample_size(1.0, 1, 1, 1) == 1.0);
  CHECK(generalization_sample_size(0.1, 20, 20, 1) == Approx(2.0 * generalization_sample_size(0.1, 10, 20, 1)));
  CHECK_THROWS_AS(generalization_sample_size(0.0, 1, 1, 1), ConfigError);
  CHECK_THROWS_AS(generalization_sample_size(0.5, 0, 1, 1), ConfigError);
}

TEST_CASE("mode coverage counting rule", "[coverage]") {
  PointSet centers(2);
  for (int c = 0; c < 10; ++c) centers.push_back(std::vector<double>{10.0 * c, 0.0});

  PointSet one(2);
  for (int i = 0; i < 1000; ++i) one.push_back(std::vector<double>{30.0, 0.0});
  CHECK(mode_coverage_count(one, centers, 0.2) == 1);

  // threshold 0.01 * 1000 / 10 = 1 sample per mode
  PointSet spread(2);
  for (int c = 0; c < 10; ++c)
    for (int k = 0; k < 11; ++k) spread.push_back(std::vector<double>{10.0 * c, 0.1});
  for (int i = 0; i < 890; ++i) spread.push_back(std::vector<double>{500.0, 500.0});
  CHECK(spread.size() == 1000);
  CHECK(mode_coverage_count(spread, centers, 0.2) == 10);

  CHECK(mode_coverage_count(PointSet(2), centers, 0.2) == 0);
  CHECK_THROWS_AS(mode_coverage_count(one, centers, 0.0), ConfigError);

  // the radius is 3 sigma0, inclusive
  PointSet edge(2);
  edge.push_back(std::vector<double>{0.6, 0.0});
  CHECK(covered_modes(edge, centers, 0.2, 0.01)[0]);
  PointSet out(2);
  out.push_back(std::vector<double>{0.61, 0.0});
  CHECK_FALSE(covered_modes(out, centers, 0.2, 0.01)[0]);
}

TEST_CASE("minority weight ratio", "[coverage]") {
  std::vector<double> uniform(60100, -std::log2(60100.0));
  std::vector<std::size_t> minority(100);
  std::iota(minority.begin(), minority.end(), 0);
  const auto r0 = minority_weight_ratio(uniform, {}, minority);
  CHECK(r0[0] == Approx(100.0 / 60100).epsilon(1e-12));
  CHECK(r0[0] == Approx(0.0016639).margin(5e-8));

  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::vector<bool>> mixed{{true, false, true, false, false, true, true, true, false, false},
                                       {false, true, false, true, true, true, true, false, false, true}};
  for (double v : minority_weight_ratio(std::vector<double>(10, 0.0), mixed, all)) CHECK(v == Approx(1.0).epsilon(1e-15));

  const std::vector<double> init(601, -std::log2(601.0));
  std::vector<bool> only_first(601, false);
  only_first[0] = true;
  const auto series = minority_weight_ratio(init, std::vector<std::vector<bool>>(6, only_first), {0});
  for (std::size_t t = 1; t <= series.size(); ++t) {
    const double e = std::exp2(double(t) - 1.0);
    CHECK(series[t - 1] == Approx(e / (600.0 + e)).epsilon(1e-12));
  }
  CHECK(series[0] == Approx(0.0016639).margin(5e-8));
  CHECK(series[3] == Approx(0.0131579).margin(5e-8));

  CHECK_THROWS_AS(minority_weight_ratio(init, {}, {601}), ConfigError);
}

TEST_CASE("minority ratio grows under one-sided doubling", "[coverage][property]") {
  Rng rng(split_seed(35, Stream::kTrial, 0));
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(trial % 20);
    const auto p = flat_dirichlet(n, rng);
    std::vector<double> lw(n);
    for (std::size_t i = 0; i < n; ++i) lw[i] = std::log2(p[i]);
    std::vector<std::size_t> minority;
    std::vector<bool> flags(n, false);
    for (std::size_t i = 0; i < n; i += 3) {
      minority.push_back(i);
      flags[i] = true;
    }
    const auto s = minority_weight_ratio(lw, std::vector<std::vector<bool>>(10, flags), minority);
    for (std::size_t t = 1; t < s.size(); ++t) REQUIRE(s[t] >= s[t - 1]);
  }
}

TEST_CASE("KDE mean log likelihood", "[coverage]") {
  PointSet c(1), e(1);
  c.push_back(std::vector<double>{0.0});
  e.push_back(std::vector<double>{0.0});
  CHECK(kde_mean_loglik(c, e) == Approx(std::log(3.98942280401)).epsilon(1e-10));
  CHECK(kde_mean_loglik(c, e) == Approx(1.3836466).margin(5e-7));

  PointSet far(1);
  far.push_back(std::vector<double>{5.0});
  CHECK(kde_mean_loglik(c, far) < -100.0);

  const auto ds = make_sine_dataset({});
  PointSet minor(2);
  for (std::size_t i : ds.indices_of(1)) minor.push_back(ds.points[i]);
  const double self = kde_mean_loglik(minor, minor);
  CHECK(std::isfinite(self));
  CHECK(self > -3.0);

  CHECK_THROWS_AS(kde_mean_loglik(c, e, 0.0), ConfigError);
  CHECK_THROWS_AS(kde_mean_loglik(PointSet(1), e), ConfigError);
}

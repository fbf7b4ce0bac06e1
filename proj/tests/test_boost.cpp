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
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "mwcover/boost.hpp"
#include "mwcover/coverage.hpp"
#include "mwcover/synthdata.hpp"

using namespace mwcover;
using Catch::Approx;

namespace {

PointSet line(std::initializer_list<double> xs) {
  PointSet p(1);
  for (double x : xs) p.push_back(std::vector<double>{x});
  return p;
}

std::vector<double> at(double x) { return {x}; }

GeneratorPtr point_mass(double x) {
  return std::make_shared<AtomicGenerator>(DiscreteDistribution::uniform(line({x})));
}

// Round 1 collapses onto A (x = 0); later rounds fit the round distribution exactly.
GeneratorFactory collapse_then_exact() {
  return schedule_factory({[](const DiscreteDistribution&, const FitContext&) { return point_mass(0.0); },
                           atomic_factory()});
}

class NoPdf final : public WeakGenerator {
 public:
  std::string kind() const override { return "sampler_only"; }
  std::size_t dim() const override { return 1; }
  bool supports_exact_pdf() const override { return false; }
  double pdf(std::span<const double>) const override { throw UnsupportedOperation("no pdf"); }
  double box_mass(std::span<const double>, std::span<const double>) const override { return 0.0; }
  PointSet sample(std::size_t count, std::uint64_t) const override {
    PointSet p(1);
    for (std::size_t i = 0; i < count; ++i) p.push_back(std::vector<double>{0.0});
    return p;
  }
  nlohmann::json to_json() const override { return {{"kind", kind()}}; }
};

BoostConfig two_round_config() {
  BoostConfig c;
  c.rounds = 2;
  c.delta = 0.25;
  c.eta = 0.5;
  c.projection_cells = 2;
  return c;
}

}  // namespace

TEST_CASE("exact loop on the two-point example", "[boost]") {
  const DiscreteDistribution p(line({0, 1}), {5.0 / 7, 2.0 / 7});
  const auto res = run_exact(p, two_round_config(), collapse_then_exact());
  REQUIRE(res.trace.rounds.size() == 2);
  CHECK(res.trace.rounds[0].flags == std::vector<bool>{false, true});
  CHECK(res.trace.rounds[0].doubled_mass == Approx(2.0 / 7).epsilon(1e-15));
  // P_2 = {5/9, 4/9}: G_2 fits it exactly
  CHECK(res.projected[1][0] == Approx(5.0 / 9).epsilon(1e-15));
  CHECK(res.projected[1][1] == Approx(4.0 / 9).epsilon(1e-15));
  CHECK(res.trace.rounds[1].log2_W == Approx(std::log2(9.0 / 7)).epsilon(1e-15));
  // g*(B) = (0 + 4/9) / 2 = 2/9 >= (1/4)(2/7)
  CHECK(res.mixture.pdf(at(1.0)) == Approx(2.0 / 9).epsilon(1e-15));
  CHECK(res.mixture.pdf(at(0.0)) == Approx((1.0 + 5.0 / 9) / 2).epsilon(1e-15));
  CHECK(is_delta_covered(res.mixture.pdf(at(1.0)), 2.0 / 7, 0.25));
  CHECK(res.final_weights.doubling_counts() == std::vector<int>{0, 1});
}

TEST_CASE("exact loop with a perfect generator", "[boost]") {
  const DiscreteDistribution p(line({0, 1, 2}), {0.2, 0.3, 0.5});
  BoostConfig c;
  c.rounds = 1;
  const auto res = run_exact(p, c, atomic_factory());
  CHECK(res.trace.rounds[0].n_doubled == 0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(res.mixture.pdf(p.support()[i]) == Approx(p.mass(i)).epsilon(1e-15));
  CHECK(res.trace.rounds[0].tv_gen_vs_pt.value() == Approx(0.0).margin(1e-15));
}

TEST_CASE("exact loop against a gamma-perturbing adversary meets the subset bound", "[boost]") {
  PointSet s(1);
  for (int i = 0; i < 8; ++i) s.push_back(at(double(i)));
  const auto p = DiscreteDistribution::uniform(s);
  BoostConfig c;
  c.rounds = 24;
  c.delta = 0.25;
  c.eta = 0.01;
  AdversarialConfig adv;
  adv.gamma = 0.1;
  const auto res = run_exact(p, c, adversarial_factory(adv));
  CHECK(res.trace.max_tv() <= 0.1 + 1e-12);
  const double bound = theorem1_bound(c.delta, 0.1, c.eta);
  const double mass_lb = std::exp2(-c.eta * c.rounds);
  const auto worst = worst_subset_exhaustive(res.mixture_projected, p.masses(), mass_lb);
  CHECK(worst.ratio >= bound - 1e-12);
}

TEST_CASE("total weight identity in the exact loop", "[boost][property]") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 4 + seed % 8;
    PointSet s(1);
    for (std::size_t i = 0; i < n; ++i) s.push_back(at(double(i)));
    const DiscreteDistribution p(s, flat_dirichlet(n, rng));
    BoostConfig c;
    c.rounds = 16;
    c.seed = seed;
    AdversarialConfig adv;
    adv.gamma = 0.05 * static_cast<double>(seed % 5);
    adv.rule = seed % 2 ? RegionRule::kRandom : RegionRule::kLowestCoverage;
    const auto res = run_exact(p, c, adversarial_factory(adv));
    double eps = 0.0;
    for (std::size_t t = 0; t < res.trace.rounds.size(); ++t) {
      const auto& r = res.trace.rounds[t];
      const double next = t + 1 < res.trace.rounds.size() ? res.trace.rounds[t + 1].log2_W : res.trace.final_log2_W;
      REQUIRE(next - r.log2_W == Approx(std::log2(1.0 + r.doubled_mass)).epsilon(1e-9).margin(1e-15));
      eps = std::max(eps, r.doubled_mass);
    }
    // measured premise: every round doubled at most eps of P_t
    REQUIRE(res.trace.final_log2_W - res.trace.rounds[0].log2_W <= c.rounds * std::log2(1.0 + eps) + 1e-12);
  }
}

TEST_CASE("mixture pdf is the arithmetic mean", "[boost]") {
  const DiscreteDistribution a(line({0, 1}), {0.2, 0.8}), b(line({0, 1}), {0.4, 0.6});
  GeneratorMixture m;
  m.add(std::make_shared<AtomicGenerator>(a));
  CHECK(m.pdf(at(0.0)) == 0.2);
  m.add(std::make_shared<AtomicGenerator>(b));
  CHECK(m.pdf(at(0.0)) == Approx(0.3).epsilon(1e-15));
  m.add(std::make_shared<NoPdf>());
  CHECK_THROWS_AS(m.pdf(at(0.0)), UnsupportedOperation);
  CHECK_THROWS_AS(GeneratorMixture().pdf(at(0.0)), ContractViolation);
}

TEST_CASE("mixture pdf integrates to one", "[boost][property]") {
  const auto ds = make_gauss_grid({.modes = 5, .n = 500, .seed = 3});
  const auto target = DiscreteDistribution::uniform(ds.points);
  BoostConfig c;
  c.rounds = 6;
  c.projection_cells = 16;
  HistogramConfig hc;
  hc.cells = 16;
  const auto res = run_exact(target, c, histogram_factory(hc));
  const SupportProjection proj(target, 16);
  const GridSpec& g = proj.grid();
  double total = 0.0;
  for (std::size_t k = 0; k < g.num_cells(); ++k) {
    auto [lo, hi] = g.cell_bounds(k);
    std::vector<double> mid(2);
    for (std::size_t d = 0; d < 2; ++d) mid[d] = 0.5 * (lo[d] + hi[d]);
    total += res.mixture.pdf(mid) * g.cell_volume();
  }
  CHECK(total == Approx(1.0).margin(1e-6));
  const double s = std::accumulate(res.mixture_projected.begin(), res.mixture_projected.end(), 0.0);
  CHECK(s == Approx(1.0).margin(1e-6));
}

TEST_CASE("mixture sampling picks members uniformly", "[boost]") {
  GeneratorMixture m;
  m.add(point_mass(0.0));
  m.add(point_mass(1.0));
  const auto s = m.sample(100000, 5);
  double a = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) a += s[i][0] == 0.0 ? 1.0 : 0.0;
  CHECK(a / 1e5 == Approx(0.5).margin(0.01));
  CHECK(m.sample(0, 5).empty());

  const auto again = m.sample(100000, 5);
  CHECK(again.coords() == s.coords());

  GeneratorMixture one;
  one.add(point_mass(2.0));
  const auto o = one.sample(10, 1);
  for (std::size_t i = 0; i < o.size(); ++i) CHECK(o[i][0] == 2.0);
}

TEST_CASE("empirical loop on the two-point multiset", "[boost]") {
  const auto pts = line({0, 0, 0, 0, 0, 1, 1});
  auto c = two_round_config();
  c.resample_size = 20000;
  const auto res = run_empirical(pts, c, collapse_then_exact(), oracle_factory(1e-6), 64);
  CHECK(res.trace.rounds[0].flags == std::vector<bool>{false, false, false, false, false, true, true});
  const auto& dc = res.final_weights.doubling_counts();
  // after round 1: A = 5 x 1/7, B = 2 x 2/7
  CHECK(std::vector<int>(dc.begin(), dc.end()) == std::vector<int>{0, 0, 0, 0, 0, 1, 1});
  CHECK(res.trace.rounds[0].epsilon_prime.value() == 0.0);
  CHECK(res.trace.rounds[1].log2_W == Approx(std::log2(9.0 / 7)).epsilon(1e-15));
}

TEST_CASE("empirical loop on a single Gaussian", "[boost]") {
  Rng rng(21);
  std::normal_distribution<double> z(0.0, 1.0);
  PointSet pts(2);
  for (int i = 0; i < 2000; ++i) pts.push_back(std::vector<double>{z(rng), z(rng)});
  BoostConfig c;
  c.rounds = 3;
  c.delta = 0.25;
  c.projection_cells = 8;
  c.seed = 4;
  GmmConfig gc;
  gc.components = 1;
  DiscriminatorSpec ds;
  ds.centers = 32;
  const auto res = run_empirical(pts, c, gmm_factory(gc), logistic_factory(ds), 2000);
  for (const auto& r : res.trace.rounds) {
    const double gamma = r.tv_gen_vs_pt.value();
    CHECK(r.doubled_mass < 2.0 * c.delta + gamma + 0.1);
  }
}

TEST_CASE("round failures carry the round index", "[boost]") {
  const DiscreteDistribution p(line({0, 1}), {0.5, 0.5});
  const GeneratorFactory fails_in_round_2 = [](const DiscreteDistribution& t, const FitContext& ctx) -> GeneratorPtr {
    if (ctx.round == 2) throw std::runtime_error("fit diverged");
    return std::make_shared<AtomicGenerator>(t);
  };
  try {
    run_exact(p, two_round_config(), fails_in_round_2);
    FAIL("expected a RunError");
  } catch (const RunError& e) {
    CHECK(e.round() == 2);
  }

  const DiscriminatorFactory bad_disc = [](const PointSet&, const PointSet&, const DiscreteDistribution&,
                                           const GeneratorPtr&, const SupportProjection&,
                                           const FitContext&) -> RatioModelPtr {
    throw std::runtime_error("solver failed");
  };
  try {
    run_empirical(line({0, 1}), two_round_config(), atomic_factory(), bad_disc, 8);
    FAIL("expected a RunError");
  } catch (const RunError& e) {
    CHECK(e.round() == 1);
  }
}

TEST_CASE("a degenerate discriminator fit reports its round", "[boost]") {
  try {
    run_empirical(line({1, 1, 1}), two_round_config(), atomic_factory(), logistic_factory({}), 16);
    FAIL("expected a RunError");
  } catch (const RunError& e) {
    CHECK(e.round() == 1);
    CHECK(std::string(e.what()).rfind("round 1: ", 0) == 0);
  }
}

TEST_CASE("loop configuration errors", "[boost]") {
  const DiscreteDistribution p(line({0, 1}), {0.5, 0.5});
  auto c = two_round_config();
  c.delta = 1.5;
  CHECK_THROWS_AS(run_exact(p, c, atomic_factory()), ConfigError);
  c = two_round_config();
  c.rounds = 0;
  CHECK_THROWS_AS(run_exact(p, c, atomic_factory()), ConfigError);
  CHECK_THROWS_AS(run_empirical(line({0}), two_round_config(), atomic_factory(), oracle_factory()), ConfigError);
  const GeneratorFactory no_pdf = [](const DiscreteDistribution&, const FitContext&) -> GeneratorPtr {
    return std::make_shared<NoPdf>();
  };
  CHECK_THROWS_AS(run_exact(p, two_round_config(), no_pdf), ConfigError);
}

TEST_CASE("trace CSV is deterministic", "[boost]") {
  const auto ds = make_gauss_grid({.modes = 4, .n = 400, .seed = 8});
  auto run = [&] {
    BoostConfig c;
    c.rounds = 5;
    c.seed = 99;
    c.projection_cells = 16;
    GmmConfig gc;
    gc.components = 2;
    DiscriminatorSpec spec;
    spec.centers = 16;
    const auto res = run_empirical(ds.points, c, gmm_factory(gc), logistic_factory(spec), 512);
    std::ostringstream os;
    write_trace_csv(os, res.trace);
    return os.str() + res.mixture.to_json().dump();
  };
  const auto a = run();
  CHECK(a == run());
  CHECK(a.rfind("round,log2_W,n_doubled,tv_gen_vs_pt,minority_ratio,epsilon_prime,lambda_min\n", 0) == 0);
}

TEST_CASE("support projection splits group mass by target mass", "[boost]") {
  const DiscreteDistribution p(line({0.0, 0.1, 5.0}), {0.2, 0.6, 0.2});
  const SupportProjection proj(p, 2);
  // points 0 and 1 share the first cell
  const GmmGenerator g(AnalyticDensity::mixture_1d({{1.0, 0.0}}, 1e-4), {});
  const auto gm = proj.group_masses(g);
  CHECK_FALSE(gm.atomic);
  const auto v = proj.project(gm);
  CHECK(v[0] / p.mass(0) == Approx(v[1] / p.mass(1)));
  CHECK(v[0] + v[1] == Approx(1.0).margin(1e-9));
  CHECK(v[2] == Approx(0.0).margin(1e-12));

  const AtomicGenerator a(DiscreteDistribution(line({0.0, 0.1}), {0.5, 0.5}));
  const auto av = proj.project(a);
  CHECK(av == std::vector<double>{0.5, 0.5, 0.0});
  // mass outside the support counts in full
  const AtomicGenerator off(DiscreteDistribution(line({0.0, 3.0}), {0.5, 0.5}));
  CHECK(proj.group_tv(proj.group_masses(off), p.masses()) == Approx(0.5 * (0.3 + 0.6 + 0.2 + 0.5)));
}

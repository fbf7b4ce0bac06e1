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

// Command-line front end: dataset generation, boosting runs, oracle suites
// and the pinned reproduction recipes.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 verification or
// tolerance failure, 3 runtime failure.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mwcover/mwcover.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mwcover;

namespace {

enum Exit { kOk = 0, kConfigExit = 1, kToleranceExit = 2, kRuntimeExit = 3 };

class ToleranceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

void write_meta(const fs::path& dir, const std::string& command) {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  write_file(dir / "meta.json", pretty({{"command", command}, {"timestamp", buf}}));
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Tolerance checks for reproduction recipes
// ---------------------------------------------------------------------------

class Checks {
 public:
  void near(const std::string& name, double v, double expected, double tol) {
    add(name, v, std::abs(v - expected) <= tol, {{"relation", "near"}, {"expected", expected}, {"tolerance", tol}});
  }
  void le(const std::string& name, double v, double bound) {
    add(name, v, v <= bound, {{"relation", "<="}, {"bound", bound}});
  }
  void ge(const std::string& name, double v, double bound) {
    add(name, v, v >= bound, {{"relation", ">="}, {"bound", bound}});
  }
  void lt(const std::string& name, double v, double bound) {
    add(name, v, v < bound, {{"relation", "<"}, {"bound", bound}});
  }
  void gt(const std::string& name, double v, double bound) {
    add(name, v, v > bound, {{"relation", ">"}, {"bound", bound}});
  }
  void within_factor(const std::string& name, double v, double expected, double factor) {
    add(name, v, v >= expected / factor && v <= expected * factor,
        {{"relation", "within_factor"}, {"expected", expected}, {"factor", factor}});
  }
  void exact(const std::string& name, const json& v, const json& expected) {
    json e{{"name", name}, {"value", v}, {"relation", "=="}, {"expected", expected}, {"ok", v == expected}};
    ok_ = ok_ && v == expected;
    items_.push_back(std::move(e));
  }
  void truth(const std::string& name, bool v) {
    json e{{"name", name}, {"value", v}, {"relation", "true"}, {"ok", v}};
    ok_ = ok_ && v;
    items_.push_back(std::move(e));
  }

  bool ok() const noexcept { return ok_; }
  json to_json(const std::string& recipe) const { return {{"recipe", recipe}, {"ok", ok_}, {"quantities", items_}}; }
  std::vector<std::string> failures() const {
    std::vector<std::string> f;
    for (const auto& i : items_) {
      if (!i["ok"].get<bool>()) f.push_back(i["name"].get<std::string>());
    }
    return f;
  }

 private:
  void add(const std::string& name, double v, bool ok, json extra) {
    extra["name"] = name;
    extra["value"] = v;
    extra["ok"] = ok;
    ok_ = ok_ && ok;
    items_.push_back(std::move(extra));
  }
  bool ok_ = true;
  json items_ = json::array();
};

// ---------------------------------------------------------------------------
// boost
// ---------------------------------------------------------------------------

struct BoostRun {
  BoostResult result;
  DatasetSetup dataset;
  DiscreteDistribution target;
  BoostConfig config;
  json summary;
};

std::vector<std::vector<bool>> trace_flags(const RoundTrace& t) {
  std::vector<std::vector<bool>> f;
  for (const auto& r : t.rounds) f.push_back(r.flags);
  return f;
}

BoostRun run_boost(const json& config, const fs::path& base_dir, std::optional<std::uint64_t> seed,
                   const fs::path& out) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  BoostRun run;
  run.config = boost_config_from_json(config);
  if (seed) run.config.seed = *seed;
  const auto mode = cfg::get<std::string>(config, "mode", "exact", "");
  if (mode != "exact" && mode != "empirical") throw ConfigError("field 'mode' must be exact or empirical");
  if (!config.contains("dataset")) throw ConfigError("missing field 'dataset'");
  if (!config.contains("generator")) throw ConfigError("missing field 'generator'");
  run.dataset = dataset_from_json(config.at("dataset"), base_dir, run.config.seed);
  const auto& data = run.dataset.data;

  std::optional<int> minority_mode;
  if (config.contains("minority_mode")) {
    minority_mode = cfg::get<int>(config, "minority_mode", 0, "");
    if (data.mode_id.empty()) throw ConfigError("field 'minority_mode' needs a dataset with mode ids");
    run.config.minority = data.indices_of(*minority_mode);
    if (run.config.minority.empty()) throw ConfigError("field 'minority_mode' matches no points");
  }
  const auto gen = generator_factory_from_json(config.at("generator"));
  const json cov_cfg = config.value("coverage", json::object());
  const auto cov_samples = cfg::get<std::size_t>(cov_cfg, "samples", 20000, "coverage.");
  const auto cov_frac = cfg::get<double>(cov_cfg, "frac", 0.01, "coverage.");
  const auto per_round = cfg::get<bool>(cov_cfg, "per_round", false, "coverage.");

  try {
    run.target = run.dataset.masses.empty() ? DiscreteDistribution::uniform(data.points)
                                            : DiscreteDistribution(data.points, run.dataset.masses);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("field 'dataset.masses': ") + e.what());
  }

  json disc_summary;
  if (mode == "exact") {
    run.result = run_exact(run.target, run.config, gen);
  } else {
    if (!run.dataset.masses.empty()) throw ConfigError("empirical mode takes unweighted points; drop 'dataset.masses'");
    const auto disc = discriminator_from_json(config.value("discriminator", json()));
    run.result = run_empirical(data.points, run.config, gen, disc.factory, disc.samples);
    double max_eps = 0.0;
    std::optional<double> lambda_min;
    for (const auto& r : run.result.trace.rounds) {
      if (r.epsilon_prime) max_eps = std::max(max_eps, *r.epsilon_prime);
      if (r.lambda_min) lambda_min = r.lambda_min;
    }
    const double dprime = run.config.delta_prime > 0.0 ? run.config.delta_prime : run.config.delta;
    disc_summary = {{"kind", disc.kind},
                    {"samples", disc.samples},
                    {"max_epsilon_prime", max_eps},
                    {"lambda_min", lambda_min ? json(*lambda_min) : json()},
                    {"lambda_mean", run.result.trace.lambda_mean ? json(*run.result.trace.lambda_mean) : json()},
                    {"delta_prime", dprime}};
    if (lambda_min) {
      TheoryParams tp;
      tp.delta = run.config.delta;
      tp.gamma = run.result.trace.max_tv();
      tp.eta = run.config.eta;
      tp.epsilon_prime = max_eps;
      tp.lambda = *lambda_min;
      tp.delta_prime = dprime;
      disc_summary["imperfect_bound"] = imperfect_disc_bound(tp);
    }
  }
  const auto& res = run.result;
  const double mass_lb = std::exp2(-run.config.eta * static_cast<double>(run.config.rounds));

  json summary{{"command", "boost"},
               {"mode", mode},
               {"rounds", run.config.rounds},
               {"delta", run.config.delta},
               {"eta", run.config.eta},
               {"seed", run.config.seed},
               {"n_points", data.points.size()},
               {"dim", data.points.dim()},
               {"mass_lb", mass_lb},
               {"round1_doubled", res.trace.rounds.front().n_doubled},
               {"final_log2_W", res.trace.final_log2_W}};

  json coverage_report;
  if (res.mixture_projected.size() == run.target.size()) {
    const auto rep = pointwise_psi(res.mixture_projected, res.target_mass, mass_lb);
    coverage_report = to_json(rep);
    const double gamma = res.trace.max_tv();
    summary["psi_hat"] = rep.psi_hat;
    summary["worst_subset_ratio"] = rep.worst_subset.ratio;
    summary["worst_subset_mass"] = rep.worst_subset.mass;
    summary["max_gamma"] = gamma;
    summary["theorem1_bound"] = theorem1_bound(run.config.delta, gamma, run.config.eta);
    summary["theorem1_vacuous"] = is_vacuous(theorem1_bound(run.config.delta, gamma, run.config.eta));
    if (!data.mode_id.empty()) {
      std::map<int, double> mins;
      for (std::size_t i = 0; i < data.mode_id.size(); ++i) {
        auto [it, inserted] = mins.try_emplace(data.mode_id[i], rep.ratios[i]);
        if (!inserted) it->second = std::min(it->second, rep.ratios[i]);
      }
      json mm = json::object();
      for (auto [m, v] : mins) mm[std::to_string(m)] = v;
      coverage_report["mode_min_ratio"] = mm;
    }
  } else {
    coverage_report = {{"psi_hat", nullptr}, {"worst_subset", nullptr}, {"ratios", json::array()}};
    summary["psi_hat"] = nullptr;
  }

  if (minority_mode) {
    std::vector<double> log2_init(res.final_weights.size());
    for (std::size_t i = 0; i < log2_init.size(); ++i) log2_init[i] = res.final_weights.log2_initial(i);
    const auto series = minority_weight_ratio(log2_init, trace_flags(res.trace), run.config.minority);
    double share = 0.0, gmass = 0.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t i : run.config.minority) {
      share += res.target_mass[i];
      if (!res.mixture_projected.empty()) {
        gmass += res.mixture_projected[i];
        min_ratio = std::min(min_ratio, res.mixture_projected[i] / res.target_mass[i]);
      }
    }
    summary["minority"] = {{"mode", *minority_mode},
                           {"size", run.config.minority.size()},
                           {"ratio_series", series},
                           {"data_share", share},
                           {"mixture_mass", res.mixture_projected.empty() ? json() : json(gmass)},
                           {"min_ratio", res.mixture_projected.empty() ? json() : json(min_ratio)}};
  }

  if (!data.centers.empty() && data.sigma0 > 0.0) {
    const auto sample_seed = split_seed(run.config.seed, Stream::kGeneratorSample, 1ULL << 40);
    const auto samples = res.mixture.sample(cov_samples, sample_seed);
    const auto flags = covered_modes(samples, data.centers, data.sigma0, cov_frac);
    json mc{{"covered", std::count(flags.begin(), flags.end(), true)},
            {"modes", data.centers.size()},
            {"samples", cov_samples},
            {"frac", cov_frac},
            {"radius", 3.0 * data.sigma0}};
    if (per_round) {
      json counts = json::array(), firsts = json::array();
      std::vector<int> first(data.centers.size(), 0);
      for (std::size_t t = 1; t <= res.mixture.size(); ++t) {
        GeneratorMixture prefix(std::vector<GeneratorPtr>(res.mixture.generators().begin(),
                                                          res.mixture.generators().begin() + static_cast<std::ptrdiff_t>(t)));
        const auto f = covered_modes(prefix.sample(cov_samples, sample_seed), data.centers, data.sigma0, cov_frac);
        counts.push_back(std::count(f.begin(), f.end(), true));
        for (std::size_t m = 0; m < f.size(); ++m) {
          if (f[m] && first[m] == 0) first[m] = static_cast<int>(t);
        }
      }
      for (int v : first) firsts.push_back(v == 0 ? json() : json(v));
      mc["covered_per_round"] = counts;
      mc["first_covered_round"] = firsts;
    }
    summary["mode_coverage"] = mc;
  }

  // Small supports: the round-2 distribution, merged over identical points.
  if (res.trace.rounds.size() >= 1) {
    const auto merged = run.target.collapsed();
    if (merged.size() <= 16) {
      WeightedDataset ws = mode == "exact" ? init_weights_exact(run.target) : init_weights_empirical(data.points);
      ws = ws.doubled(res.trace.rounds.front().flags);
      const auto p2 = normalize(ws).collapsed();
      json arr = json::array();
      for (std::size_t i = 0; i < p2.size(); ++i) {
        auto x = p2.support()[i];
        arr.push_back({{"point", std::vector<double>(x.begin(), x.end())}, {"mass", p2.mass(i)}});
      }
      summary["distribution_round2"] = arr;
    }
  }
  if (!disc_summary.is_null()) summary["discriminator"] = disc_summary;

  prepare_dir(out);
  {
    std::ostringstream csv;
    write_trace_csv(csv, res.trace);
    write_file(out / "trace.csv", csv.str());
  }
  write_file(out / "mixture.json", pretty(res.mixture.to_json()));
  write_file(out / "coverage_report.json", pretty(coverage_report));
  write_file(out / "summary.json", pretty(summary));
  write_meta(out, "boost");
  run.summary = std::move(summary);
  return run;
}

// ---------------------------------------------------------------------------
// Bundled recipes
// ---------------------------------------------------------------------------

json appendix_b_config(const std::string& mode) {
  json c{{"mode", mode},
         {"rounds", 2},
         {"delta", 0.25},
         {"eta", 0.5},
         {"seed", 7},
         {"projection_cells", 2},
         {"dataset",
          {{"kind", "points"},
           {"points", {{0.0}, {0.0}, {0.0}, {0.0}, {0.0}, {1.0}, {1.0}}},
           {"mode_id", {0, 0, 0, 0, 0, 1, 1}}}},
         {"generator",
          {{"kind", "schedule"},
           {"rounds", {{{"kind", "fixed_atoms"}, {"support", {{0.0}}}, {"mass", {1.0}}}, {{"kind", "discrete"}}}}}},
         {"minority_mode", 1}};
  if (mode == "empirical") c["discriminator"] = {{"kind", "oracle"}, {"clamp", 1e-6}, {"samples", 64}};
  return c;
}

json sine_config(int rounds) {
  return {{"mode", "exact"},
          {"rounds", rounds},
          {"delta", 0.25},
          {"eta", 0.01},
          {"seed", 2024},
          {"projection_cells", 256},
          {"dataset", {{"kind", "sine"}, {"n_major", 40000}, {"ratio", 400}, {"minor_center", {10.0, 0.0}}}},
          {"generator", {{"kind", "histogram"}, {"cells", 256}, {"alpha", 1e-9}, {"min_bin_mass", 2e-4}}},
          {"minority_mode", 1}};
}

json spiral_config(std::uint64_t seed) {
  return {{"mode", "exact"},
          {"rounds", 25},
          {"delta", 0.25},
          {"eta", 0.01},
          {"seed", seed},
          {"projection_cells", 64},
          {"dataset", {{"kind", "spiral"}, {"n", 10000}}},
          {"generator", {{"kind", "gmm"}, {"components", 8}}},
          {"coverage", {{"samples", 20000}, {"per_round", true}}}};
}

json grid_isolated_config() {
  return {{"mode", "exact"},
          {"rounds", 25},
          {"delta", 0.25},
          {"eta", 0.01},
          {"seed", 11},
          {"projection_cells", 32},
          {"dataset", {{"kind", "grid_isolated"}, {"n", 44200}}},
          {"generator", {{"kind", "histogram"}, {"cells", 32}, {"alpha", 1e-9}, {"min_bin_mass", 5e-3}}},
          {"minority_mode", kIsolatedMode},
          {"coverage", {{"samples", 100000}, {"per_round", true}}}};
}

std::string recipe_config_json(const std::string& name) {
  if (name == "appendix-b") return pretty(appendix_b_config("exact"));
  if (name == "appendix-b-empirical") return pretty(appendix_b_config("empirical"));
  if (name == "sine") return pretty(sine_config(20));
  if (name == "spiral") return pretty(spiral_config(1));
  if (name == "grid-isolated") return pretty(grid_isolated_config());
  throw ConfigError("no bundled config named '" + name + "'");
}

void density_csv(const fs::path& path, const std::vector<std::pair<std::string, const AnalyticDensity*>>& cols,
                 double lo, double hi, double step) {
  std::ostringstream os;
  os << "x";
  for (const auto& c : cols) os << ',' << c.first;
  os << '\n';
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = lo + step * static_cast<double>(i);
    os << format_number(x);
    for (const auto& c : cols) os << ',' << format_number(c.second->pdf(x));
    os << '\n';
  }
  write_file(path, os.str());
}

Checks repro_fig1(const fs::path& out) {
  const auto P = make_fig1_target();
  const auto Q = AnalyticDensity::mixture_1d({{1.0, 0.0}});
  const GridSpec grid({-20.0}, {20.0}, 4000);
  Checks c;
  c.near("tv_q_p", divergence_numeric(Q, P, DivergenceKind::kTV, grid).value, 0.1, 0.005);
  c.le("kl_q_p_bits", divergence_numeric(Q, P, DivergenceKind::kKL, grid).value, 0.16);
  const std::vector<std::pair<double, double>> S{{-14.0, -6.0}, {6.0, 14.0}};
  c.near("prob_p_tails", interval_probability(P, S), 0.1, 0.005);
  c.le("prob_q_tails", interval_probability(Q, S), 1e-8);
  density_csv(out / "fig1_density.csv", {{"p", &P}, {"q", &Q}}, -20.0, 20.0, 0.05);
  return c;
}

Checks repro_fig6(const fs::path& out) {
  const auto inst = make_fig6_instance();
  const GridSpec grid({-20.0}, {20.0}, 4000);
  auto kl = [&](const AnalyticDensity& a, const AnalyticDensity& b) {
    return divergence_numeric(a, b, DivergenceKind::kKL, grid).value;
  };
  Checks c;
  c.near("kl_p_g1_bits", kl(inst.p, inst.g1), 1.28, 0.05);
  c.near("kl_p_g2_bits", kl(inst.p, inst.g2), 1.40, 0.05);
  c.near("kl_g1_p_bits", kl(inst.g1, inst.p), 0.029, 0.05);
  c.near("kl_g2_p_bits", kl(inst.g2, inst.p), 2.81, 0.05);
  c.exact("mle_select", static_cast<int>(mle_select(inst.p, {inst.g1, inst.g2}, grid)), 0);
  const std::vector<std::pair<double, double>> S{{-14.0, -6.0}, {6.0, 14.0}};
  c.within_factor("g1_subset_ratio", subset_cover_ratio(interval_probability(inst.g1, S), interval_probability(inst.p, S)),
                  1e-7, 3.0);
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int i = -1400; i <= 1400; ++i) {
    const double x = i / 100.0;
    min_ratio = std::min(min_ratio, inst.g2.pdf(x) / inst.p.pdf(x));
  }
  c.gt("g2_min_pointwise_ratio", min_ratio, 1.0 / 3.0);
  density_csv(out / "fig6_density.csv", {{"p", &inst.p}, {"g1", &inst.g1}, {"g2", &inst.g2}}, -20.0, 20.0, 0.05);
  return c;
}

Checks repro_appendix_b(const fs::path& out) {
  Checks c;
  const auto exact = run_boost(appendix_b_config("exact"), fs::current_path(), std::nullopt, out / "exact");
  const auto& pts = exact.dataset.data.points;

  // Weights are 2^count / 7, so group totals are exact integers over 7.
  auto after_round = [&](std::size_t rounds) {
    std::vector<long long> num(2, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int cnt = 0;
      for (std::size_t t = 0; t < rounds; ++t) cnt += exact.result.trace.rounds[t].flags[i] ? 1 : 0;
      num[pts[i][0] == 0.0 ? 0 : 1] += 1LL << cnt;
    }
    return num;
  };
  const auto r1 = after_round(1);
  c.exact("round1_total_A", json::array({r1[0], 7}), json::array({5, 7}));
  c.exact("round1_total_B", json::array({r1[1], 7}), json::array({4, 7}));
  const long long tot = r1[0] + r1[1];
  const long long g = std::gcd(r1[0], tot), h = std::gcd(r1[1], tot);
  c.exact("p2_A", json::array({r1[0] / g, tot / g}), json::array({5, 9}));
  c.exact("p2_B", json::array({r1[1] / h, tot / h}), json::array({4, 9}));
  std::vector<int> flagged;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (exact.result.trace.rounds[0].flags[i]) flagged.push_back(static_cast<int>(i));
  }
  c.exact("round1_doubled_indices", flagged, std::vector<int>{5, 6});
  c.near("psi_hat", exact.summary["psi_hat"].get<double>(), 7.0 / 9.0, 1e-12);

  const auto emp = run_boost(appendix_b_config("empirical"), fs::current_path(), std::nullopt, out / "empirical");
  std::vector<int> eflag;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (emp.result.trace.rounds[0].flags[i]) eflag.push_back(static_cast<int>(i));
  }
  c.exact("empirical_round1_doubled_indices", eflag, std::vector<int>{5, 6});

  // Ideal discriminator of round 1 against the collapsed generator.
  const auto p1 = DiscreteDistribution::uniform(pts);
  const SupportProjection proj(p1, 2);
  const auto d1 = oracle_factory(1e-6)(pts, pts, p1, exact.result.mixture.generators()[0], proj, FitContext{});
  const double a[1] = {0.0}, b[1] = {1.0};
  c.near("ideal_D1_A", d1->predict(a), 5.0 / 12.0, 1e-12);
  c.near("ideal_D1_B", d1->predict(b), 1.0 - 1e-6, 1e-12);
  c.near("ideal_ratio_A", d1->ratio(a), 1.4, 1e-12);
  return c;
}

Checks repro_sine(const fs::path& out) {
  Checks c;
  const auto full = run_boost(sine_config(20), fs::current_path(), std::nullopt, out / "boost");
  const auto base = run_boost(sine_config(1), fs::current_path(), std::nullopt, out / "baseline");
  c.ge("minor_min_ratio", full.summary["minority"]["min_ratio"].get<double>(), 0.05);
  const auto& bm = base.summary["minority"];
  c.lt("baseline_minor_mass_fraction", bm["mixture_mass"].get<double>() / bm["data_share"].get<double>(), 0.10);
  return c;
}

Checks repro_spiral(const fs::path& out) {
  Checks c;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto run = run_boost(spiral_config(seed), fs::current_path(), std::nullopt,
                               out / ("seed" + std::to_string(seed)));
    const auto& mc = run.summary["mode_coverage"];
    c.exact("seed" + std::to_string(seed) + "_modes_covered", mc["covered"], 20);
  }
  return c;
}

Checks repro_grid_isolated(const fs::path& out) {
  Checks c;
  const auto run = run_boost(grid_isolated_config(), fs::current_path(), std::nullopt, out);
  const auto& first = run.summary["mode_coverage"]["first_covered_round"][kIsolatedMode];
  c.truth("isolated_mode_covered", !first.is_null());
  if (!first.is_null()) {
    const int t = first.get<int>();
    const auto series = run.summary["minority"]["ratio_series"].get<std::vector<double>>();
    bool increasing = true;
    for (int k = 1; k < t; ++k) increasing = increasing && series[static_cast<std::size_t>(k)] > series[static_cast<std::size_t>(k - 1)];
    c.truth("isolated_ratio_increasing_until_covered", increasing);
    c.le("isolated_first_covered_round", t, 25);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Command handlers
// ---------------------------------------------------------------------------

int cmd_gen(const std::string& config_path, std::optional<std::uint64_t> seed, const fs::path& out) {
  const json config = read_json_file(config_path);
  const json ds_cfg = config.contains("dataset") ? config.at("dataset") : config;
  const auto s = seed ? *seed : cfg::get<std::uint64_t>(config, "seed", 0, "");
  const auto ds = dataset_from_json(ds_cfg, fs::path(config_path).parent_path(), s);
  prepare_dir(out);
  std::ostringstream os;
  write_dataset_csv(os, ds.data);
  write_file(out / "dataset.csv", os.str());
  write_meta(out, "gen");
  std::cout << json{{"command", "gen"}, {"points", ds.data.points.size()}, {"dim", ds.data.points.dim()},
                    {"out", (out / "dataset.csv").string()}}.dump()
            << "\n";
  return kOk;
}

int cmd_boost(const std::string& config_path, std::optional<std::uint64_t> seed, const fs::path& out) {
  const json config = read_json_file(config_path);
  const auto run = run_boost(config, fs::path(config_path).parent_path(), seed, out);
  json line = run.summary;
  line.erase("minority");
  std::cout << line.dump() << "\n";
  return kOk;
}

int cmd_repro(const std::string& name, const fs::path& out) {
  prepare_dir(out);
  Checks c;
  if (name == "fig1") {
    c = repro_fig1(out);
  } else if (name == "fig6") {
    c = repro_fig6(out);
  } else if (name == "appendix-b") {
    c = repro_appendix_b(out);
  } else if (name == "sine") {
    c = repro_sine(out);
  } else if (name == "spiral") {
    c = repro_spiral(out);
  } else if (name == "grid-isolated") {
    c = repro_grid_isolated(out);
  } else {
    throw ConfigError("unknown recipe '" + name + "'");
  }
  const json values = c.to_json(name);
  write_file(out / "values.json", pretty(values));
  write_meta(out, "repro " + name);
  std::cout << json{{"command", "repro"}, {"recipe", name}, {"ok", c.ok()}, {"failures", c.failures()}}.dump() << "\n";
  return c.ok() ? kOk : kToleranceExit;
}

struct VerifyArgs {
  std::string suite;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::optional<std::size_t> support;
  std::optional<int> rounds;
  std::optional<double> delta, gamma, eta, epsilon;
  double shift = 0.0;
};

int cmd_verify(const VerifyArgs& a) {
  OracleReport rep;
  if (a.suite == "lemma1") {
    Lemma1Options o;
    o.trials = a.trials.value_or(1000);
    o.support_size = a.support.value_or(10);
    o.delta = a.delta.value_or(0.25);
    o.gamma = a.gamma.value_or(0.1);
    o.threshold_shift = a.shift;
    o.seed = a.seed;
    o.threads = a.threads;
    rep = check_lemma1(o);
  } else if (a.suite == "eq3") {
    rep = check_eq3(a.trials.value_or(1000), a.seed, a.threads);
  } else if (a.suite == "dynamics") {
    DynamicsOptions o;
    o.trials = a.trials.value_or(500);
    o.support_size = a.support.value_or(16);
    o.rounds = a.rounds.value_or(30);
    o.delta = a.delta.value_or(0.25);
    o.epsilon = a.epsilon.value_or(0.3);
    o.seed = a.seed;
    o.threads = a.threads;
    rep = check_weight_dynamics(o);
  } else if (a.suite == "theorem1") {
    Theorem1Options o;
    o.trials = a.trials.value_or(100);
    o.support_size = a.support.value_or(8);
    o.rounds = a.rounds.value_or(24);
    o.delta = a.delta.value_or(0.25);
    o.gamma = a.gamma.value_or(0.1);
    o.eta = a.eta.value_or(0.2);
    o.seed = a.seed;
    o.threads = a.threads;
    rep = check_theorem1_exhaustive(o);
  } else {
    throw ConfigError("unknown suite '" + a.suite + "'");
  }
  std::cout << rep.to_json().dump() << "\n";
  return rep.ok() ? kOk : kToleranceExit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplicative-weights mixtures of weak generators with pointwise coverage"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;

  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset as CSV");
  gen->add_option("--config", config_path, "JSON config holding a 'dataset' object")->required();
  gen->add_option("--seed", seed, "Dataset seed override");
  gen->add_option("--out", out_dir, "Output directory");

  auto* boost = app.add_subcommand("boost", "Run the boosting loop from a JSON config");
  boost->add_option("--config", config_path, "JSON run config")->required();
  boost->add_option("--seed", seed, "Master seed override");
  boost->add_option("--out", out_dir, "Output directory");
  boost->add_option("--threads", threads, "Worker threads (unused by the sequential loop)");

  std::string recipe;
  auto* repro = app.add_subcommand("repro", "Run a pinned reproduction recipe");
  repro->add_option("name", recipe, "fig1 | fig6 | appendix-b | sine | spiral | grid-isolated")->required();
  repro->add_option("--out", out_dir, "Output directory");

  std::string dump_name;
  auto* dump = app.add_subcommand("config", "Print a bundled run config");
  dump->add_option("name", dump_name, "appendix-b | appendix-b-empirical | sine | spiral | grid-isolated")->required();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Run an oracle suite");
  verify->add_option("suite", va.suite, "lemma1 | eq3 | dynamics | theorem1")->required();
  verify->add_option("--trials", va.trials, "Trial count");
  verify->add_option("--seed", va.seed, "Master seed");
  verify->add_option("--threads", va.threads, "Worker threads");
  verify->add_option("--support", va.support, "Support size");
  verify->add_option("--rounds", va.rounds, "Rounds T");
  verify->add_option("--delta", va.delta, "Covering threshold");
  verify->add_option("--gamma", va.gamma, "TV budget");
  verify->add_option("--eta", va.eta, "Subset-mass exponent");
  verify->add_option("--epsilon", va.epsilon, "Doubling-mass budget");
  verify->add_option("--shift", va.shift, "Added to the lemma1 threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigExit;
  }

  try {
    if (*gen) return cmd_gen(config_path, seed, out_dir);
    if (*boost) return cmd_boost(config_path, seed, out_dir);
    if (*repro) return cmd_repro(recipe, out_dir);
    if (*dump) {
      std::cout << recipe_config_json(dump_name);
      return kOk;
    }
    if (*verify) {
      va.threads = std::max(1U, va.threads);
      return cmd_verify(va);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const RunError& e) {
    std::cerr << "run error in round " << e.round() << ": " << e.message() << "\n";
    return kRuntimeExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeExit;
  }
  return kConfigExit;
}

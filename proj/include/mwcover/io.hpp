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

// Dataset CSV files and JSON run configuration.

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mwcover/boost.hpp"
#include "mwcover/discriminator.hpp"
#include "mwcover/generators.hpp"
#include "mwcover/synthdata.hpp"

namespace mwcover {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Header row, then one point per row; an optional last column named
/// `mode_id` holds integer labels.
inline LabeledDataset read_dataset_csv(std::istream& in, const std::string& name = "<csv>") {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(name + ": missing header row");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      header.push_back(cell);
    }
  }
  const bool has_mode = !header.empty() && header.back() == "mode_id";
  const std::size_t d = header.size() - (has_mode ? 1 : 0);
  if (d == 0) throw ConfigError(name + ": no coordinate columns");
  LabeledDataset ds;
  ds.points = PointSet(d);
  std::vector<double> x(d);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    int mode = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= header.size()) throw ConfigError(name + ": too many columns on row " + std::to_string(row));
      try {
        std::size_t used = 0;
        if (col < d) {
          x[col] = std::stod(cell, &used);
        } else {
          mode = std::stoi(cell, &used);
        }
      } catch (const std::exception&) {
        throw ConfigError(name + ": bad number '" + cell + "' on row " + std::to_string(row));
      }
      ++col;
    }
    if (col != header.size()) throw ConfigError(name + ": wrong column count on row " + std::to_string(row));
    for (double v : x) {
      if (!std::isfinite(v)) throw ConfigError(name + ": non-finite coordinate on row " + std::to_string(row));
    }
    ds.points.push_back(x);
    if (has_mode) ds.mode_id.push_back(mode);
  }
  if (ds.points.empty()) throw ConfigError(name + ": dataset is empty");
  return ds;
}

inline LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path.string() + "'");
  return read_dataset_csv(in, path.string());
}

inline void write_dataset_csv(std::ostream& os, const LabeledDataset& ds) {
  const std::size_t d = ds.points.dim();
  const bool modes = !ds.mode_id.empty();
  for (std::size_t k = 0; k < d; ++k) os << (k ? "," : "") << 'x' << k;
  if (modes) os << ",mode_id";
  os << '\n';
  for (std::size_t i = 0; i < ds.points.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) os << (k ? "," : "") << format_number(ds.points[i][k]);
    if (modes) os << ',' << ds.mode_id[i];
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

namespace cfg {

using json = nlohmann::json;

template <class T>
T get(const json& j, const std::string& key, const T& fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + key + "' has the wrong type");
  }
}

template <class T>
T require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("missing field '" + where + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + key + "' has the wrong type");
  }
}

inline PointSet points_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) throw ConfigError("field '" + where + "' must be a non-empty array of points");
  std::vector<std::vector<double>> rows;
  for (const auto& r : arr) {
    if (r.is_number()) {
      rows.push_back({r.get<double>()});
    } else if (r.is_array()) {
      try {
        rows.push_back(r.get<std::vector<double>>());
      } catch (const json::exception&) {
        throw ConfigError("field '" + where + "' holds a non-numeric coordinate");
      }
    } else {
      throw ConfigError("field '" + where + "' must hold numbers or arrays of numbers");
    }
  }
  try {
    return PointSet::from_rows(rows);
  } catch (const std::exception& e) {
    throw ConfigError("field '" + where + "': " + e.what());
  }
}

inline AnalyticDensity density_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) throw ConfigError("field '" + where + "' must list mixture components");
  std::vector<GaussianComponent> comps;
  for (const auto& c : arr) {
    GaussianComponent g;
    g.weight = require<double>(c, "weight", where + ".");
    const auto& m = c.at("mean");
    g.mean = m.is_number() ? std::vector<double>{m.get<double>()} : m.get<std::vector<double>>();
    if (c.contains("variance")) {
      const auto& v = c.at("variance");
      g.variance = v.is_number() ? std::vector<double>(g.mean.size(), v.get<double>()) : v.get<std::vector<double>>();
    } else {
      g.variance.assign(g.mean.size(), 1.0);
    }
    comps.push_back(std::move(g));
  }
  try {
    return AnalyticDensity(std::move(comps));
  } catch (const std::exception& e) {
    throw ConfigError("field '" + where + "': " + e.what());
  }
}

}  // namespace cfg

// ---------------------------------------------------------------------------
// Generators, discriminators, datasets, boost settings
// ---------------------------------------------------------------------------

inline GeneratorFactory generator_factory_from_json(const nlohmann::json& j, const std::string& where = "generator.") {
  using cfg::get;
  if (!j.is_object()) throw ConfigError("field '" + where.substr(0, where.size() - 1) + "' must be an object");
  const auto kind = cfg::require<std::string>(j, "kind", where);
  if (kind == "histogram") {
    HistogramConfig h;
    h.cells = get<std::size_t>(j, "cells", h.cells, where);
    h.alpha = get<double>(j, "alpha", h.alpha, where);
    h.min_bin_mass = get<double>(j, "min_bin_mass", h.min_bin_mass, where);
    if (h.cells < 2) throw ConfigError("field '" + where + "cells' must be >= 2");
    if (!(h.alpha >= 0.0 && h.alpha <= 1.0)) throw ConfigError("field '" + where + "alpha' must lie in [0, 1]");
    if (h.min_bin_mass < 0.0) throw ConfigError("field '" + where + "min_bin_mass' must be >= 0");
    return histogram_factory(h);
  }
  if (kind == "gmm") {
    GmmConfig g;
    g.components = get<std::size_t>(j, "components", g.components, where);
    g.max_iterations = get<int>(j, "max_iterations", g.max_iterations, where);
    g.variance_floor = get<double>(j, "variance_floor", g.variance_floor, where);
    g.restarts = get<int>(j, "restarts", g.restarts, where);
    if (g.components == 0) throw ConfigError("field '" + where + "components' must be >= 1");
    return gmm_factory(g);
  }
  if (kind == "kde") {
    KdeConfig k;
    k.bandwidth = get<double>(j, "bandwidth", k.bandwidth, where);
    if (!(k.bandwidth > 0.0)) throw ConfigError("field '" + where + "bandwidth' must be > 0");
    return kde_factory(k);
  }
  if (kind == "fixed_family") {
    const auto& c = j.contains("candidates") ? j.at("candidates") : nlohmann::json();
    if (!c.is_array() || c.empty()) throw ConfigError("field '" + where + "candidates' must be a non-empty array");
    std::vector<AnalyticDensity> cands;
    for (std::size_t i = 0; i < c.size(); ++i) {
      cands.push_back(cfg::density_from_json(c[i], where + "candidates[" + std::to_string(i) + "]"));
    }
    return fixed_family_factory(std::move(cands));
  }
  if (kind == "discrete") return atomic_factory();
  if (kind == "fixed_atoms") {
    auto pts = cfg::points_from_json(j.contains("support") ? j.at("support") : nlohmann::json(), where + "support");
    auto mass = cfg::require<std::vector<double>>(j, "mass", where);
    std::shared_ptr<const WeakGenerator> g;
    try {
      g = std::make_shared<AtomicGenerator>(DiscreteDistribution(std::move(pts), std::move(mass)), "fixed_atoms");
    } catch (const std::exception& e) {
      throw ConfigError("field '" + where + "mass': " + e.what());
    }
    return [g](const DiscreteDistribution&, const FitContext&) { return g; };
  }
  if (kind == "adversarial") {
    AdversarialConfig a;
    a.gamma = get<double>(j, "gamma", a.gamma, where);
    const auto rule = get<std::string>(j, "rule", "lowest_coverage", where);
    if (rule == "lowest_coverage") {
      a.rule = RegionRule::kLowestCoverage;
    } else if (rule == "random") {
      a.rule = RegionRule::kRandom;
    } else if (rule == "explicit") {
      a.rule = RegionRule::kExplicit;
      a.region = cfg::require<std::vector<std::size_t>>(j, "region", where);
    } else {
      throw ConfigError("field '" + where + "rule' must be lowest_coverage, random or explicit");
    }
    if (!(a.gamma >= 0.0 && a.gamma <= 1.0)) throw ConfigError("field '" + where + "gamma' must lie in [0, 1]");
    return adversarial_factory(a);
  }
  if (kind == "schedule") {
    const auto& s = j.contains("rounds") ? j.at("rounds") : nlohmann::json();
    if (!s.is_array() || s.empty()) throw ConfigError("field '" + where + "rounds' must be a non-empty array");
    std::vector<GeneratorFactory> fs;
    for (std::size_t i = 0; i < s.size(); ++i) {
      fs.push_back(generator_factory_from_json(s[i], where + "rounds[" + std::to_string(i) + "]."));
    }
    return schedule_factory(std::move(fs));
  }
  throw ConfigError("field '" + where + "kind' has unknown value '" + kind + "'");
}

struct DiscriminatorSetup {
  DiscriminatorFactory factory;
  std::size_t samples = 4096;
  std::string kind = "logistic";
};

inline DiscriminatorSetup discriminator_from_json(const nlohmann::json& j) {
  using cfg::get;
  const std::string where = "discriminator.";
  DiscriminatorSetup out;
  if (j.is_null()) {
    out.factory = logistic_factory({});
    return out;
  }
  out.kind = get<std::string>(j, "kind", "logistic", where);
  DiscriminatorSpec s;
  s.clamp = get<double>(j, "clamp", s.clamp, where);
  if (!(s.clamp > 0.0 && s.clamp <= 0.01)) throw ConfigError("field 'discriminator.clamp' must lie in (0, 0.01]");
  out.samples = get<std::size_t>(j, "samples", s.sample_size, where);
  if (out.samples == 0) throw ConfigError("field 'discriminator.samples' must be >= 1");
  if (out.kind == "oracle") {
    out.factory = oracle_factory(s.clamp);
    return out;
  }
  if (out.kind != "logistic") throw ConfigError("field 'discriminator.kind' must be logistic or oracle");
  const auto feat = get<std::string>(j, "features", "rbf", where);
  if (feat == "rbf") {
    s.features = FeatureKind::kRbf;
  } else if (feat == "affine") {
    s.features = FeatureKind::kAffine;
  } else {
    throw ConfigError("field 'discriminator.features' must be rbf or affine");
  }
  const auto scale = get<std::string>(j, "scale", "median_pairwise", where);
  if (scale == "median_pairwise") {
    s.scale = RbfScale::kMedianPairwise;
  } else if (scale == "median_nearest") {
    s.scale = RbfScale::kMedianNearest;
  } else {
    throw ConfigError("field 'discriminator.scale' must be median_pairwise or median_nearest");
  }
  s.centers = get<std::size_t>(j, "centers", s.centers, where);
  s.l2 = get<double>(j, "l2", s.l2, where);
  s.max_iterations = get<int>(j, "max_iterations", s.max_iterations, where);
  if (s.centers == 0) throw ConfigError("field 'discriminator.centers' must be >= 1");
  if (s.l2 < 0.0) throw ConfigError("field 'discriminator.l2' must be >= 0");
  out.factory = logistic_factory(s);
  return out;
}

struct DatasetSetup {
  LabeledDataset data;
  /// Explicit target masses (exact mode); empty means uniform.
  std::vector<double> masses;
  std::string kind;
};

inline DatasetSetup dataset_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                      std::uint64_t seed) {
  using cfg::get;
  const std::string where = "dataset.";
  if (!j.is_object()) throw ConfigError("field 'dataset' must be an object");
  DatasetSetup out;
  out.kind = cfg::require<std::string>(j, "kind", where);
  const auto ds_seed = get<std::uint64_t>(j, "seed", seed, where);
  if (out.kind == "csv") {
    const auto path = cfg::require<std::string>(j, "path", where);
    if (path.empty()) throw ConfigError("field 'dataset.path' is empty");
    std::filesystem::path p(path);
    if (p.is_relative()) p = base_dir / p;
    out.data = read_dataset_csv(p);
  } else if (out.kind == "points") {
    out.data.points = cfg::points_from_json(j.contains("points") ? j.at("points") : nlohmann::json(), where + "points");
    out.masses = get<std::vector<double>>(j, "masses", {}, where);
    out.data.mode_id = get<std::vector<int>>(j, "mode_id", {}, where);
    if (!out.masses.empty() && out.masses.size() != out.data.points.size()) {
      throw ConfigError("field 'dataset.masses' must match the number of points");
    }
    if (!out.data.mode_id.empty() && out.data.mode_id.size() != out.data.points.size()) {
      throw ConfigError("field 'dataset.mode_id' must match the number of points");
    }
  } else if (out.kind == "sine") {
    SineSpec s;
    s.n_major = get<std::size_t>(j, "n_major", s.n_major, where);
    s.ratio = get<double>(j, "ratio", s.ratio, where);
    s.minor_var = get<double>(j, "minor_var", s.minor_var, where);
    if (j.contains("minor_center")) {
      const auto c = get<std::vector<double>>(j, "minor_center", {}, where);
      if (c.size() != 2) throw ConfigError("field 'dataset.minor_center' must have 2 coordinates");
      s.minor_center = {c[0], c[1]};
    }
    s.seed = ds_seed;
    out.data = make_sine_dataset(s);
  } else if (out.kind == "gauss_grid") {
    GaussGridSpec s;
    s.modes = get<std::size_t>(j, "modes", s.modes, where);
    s.n = get<std::size_t>(j, "n", s.n, where);
    s.var = get<double>(j, "var", s.var, where);
    s.seed = ds_seed;
    out.data = make_gauss_grid(s);
  } else if (out.kind == "spiral") {
    out.data = make_spiral(get<std::size_t>(j, "n", 10000, where), ds_seed);
  } else if (out.kind == "grid_isolated") {
    out.data = make_grid_isolated(get<std::size_t>(j, "n", 44200, where), ds_seed);
  } else {
    throw ConfigError("field 'dataset.kind' has unknown value '" + out.kind + "'");
  }
  if (out.data.points.empty()) throw ConfigError("dataset is empty");
  return out;
}

inline BoostConfig boost_config_from_json(const nlohmann::json& j) {
  using cfg::get;
  BoostConfig c;
  c.rounds = get<int>(j, "rounds", c.rounds, "");
  c.delta = get<double>(j, "delta", c.delta, "");
  c.eta = get<double>(j, "eta", c.eta, "");
  c.seed = get<std::uint64_t>(j, "seed", c.seed, "");
  c.projection_cells = get<std::size_t>(j, "projection_cells", c.projection_cells, "");
  c.resample_size = get<std::size_t>(j, "resample_size", c.resample_size, "");
  c.delta_prime = get<double>(j, "delta_prime", c.delta_prime, "");
  if (c.rounds < 1) throw ConfigError("field 'rounds' must be >= 1");
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("field 'delta' must lie in (0, 1)");
  if (!(c.eta > 0.0 && c.eta < 1.0)) throw ConfigError("field 'eta' must lie in (0, 1)");
  if (c.projection_cells < 2) throw ConfigError("field 'projection_cells' must be >= 2");
  if (c.delta_prime < 0.0 || c.delta_prime > 1.0) throw ConfigError("field 'delta_prime' must lie in [0, 1]");
  return c;
}

}  // namespace mwcover

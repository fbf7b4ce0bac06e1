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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mwcover/io.hpp"

using namespace mwcover;
using nlohmann::json;

namespace {

LabeledDataset parse(const std::string& text) {
  std::istringstream in(text);
  return read_dataset_csv(in);
}

}  // namespace

TEST_CASE("CSV round trip is exact", "[io]") {
  const auto d = make_spiral(200, 4);
  std::ostringstream os;
  write_dataset_csv(os, d);
  const auto back = parse(os.str());
  CHECK(back.points.coords() == d.points.coords());
  CHECK(back.mode_id == d.mode_id);
  CHECK(os.str().rfind("x0,x1,mode_id\n", 0) == 0);

  std::ostringstream again;
  write_dataset_csv(again, back);
  CHECK(again.str() == os.str());
}

TEST_CASE("CSV without labels", "[io]") {
  const auto d = parse("a,b,c\n1,2,3\n4,5,6\r\n");
  CHECK(d.points.dim() == 3);
  CHECK(d.points.size() == 2);
  CHECK(d.mode_id.empty());
  CHECK(d.points[1][2] == 6.0);
}

TEST_CASE("CSV errors", "[io]") {
  CHECK_THROWS_AS(parse(""), ConfigError);
  CHECK_THROWS_AS(parse("x0,x1\n"), ConfigError);
  CHECK_THROWS_AS(parse("x0,x1\n1,abc\n"), ConfigError);
  CHECK_THROWS_AS(parse("x0,x1\n1\n"), ConfigError);
  CHECK_THROWS_AS(parse("x0,x1\n1,2,3\n"), ConfigError);
  CHECK_THROWS_AS(parse("x0,x1\n1,inf\n"), ConfigError);
  CHECK_THROWS_AS(parse("mode_id\n1\n"), ConfigError);
  CHECK_THROWS_AS(read_dataset_csv(std::filesystem::path("/nonexistent/data.csv")), ConfigError);
}

TEST_CASE("boost settings from JSON", "[io]") {
  const auto c = boost_config_from_json(json{{"rounds", 7}, {"delta", 0.2}, {"eta", 0.05}, {"seed", 11}});
  CHECK(c.rounds == 7);
  CHECK(c.delta == 0.2);
  CHECK(c.eta == 0.05);
  CHECK(c.seed == 11);
  CHECK_THROWS_AS(boost_config_from_json(json{{"delta", 1.5}}), ConfigError);
  CHECK_THROWS_AS(boost_config_from_json(json{{"rounds", 0}}), ConfigError);
  CHECK_THROWS_AS(boost_config_from_json(json{{"eta", "x"}}), ConfigError);
  CHECK_THROWS_AS(boost_config_from_json(json{{"projection_cells", 1}}), ConfigError);
}

TEST_CASE("datasets from JSON", "[io]") {
  const auto tmp = std::filesystem::temp_directory_path() / "mwcover_test_io";
  std::filesystem::create_directories(tmp);
  {
    std::ofstream f(tmp / "d.csv");
    f << "x0\n0\n1\n";
  }
  const auto csv = dataset_from_json(json{{"kind", "csv"}, {"path", "d.csv"}}, tmp, 0);
  CHECK(csv.data.points.size() == 2);
  CHECK_THROWS_AS(dataset_from_json(json{{"kind", "csv"}, {"path", ""}}, tmp, 0), ConfigError);
  {
    std::ofstream f(tmp / "empty.csv");
    f << "x0\n";
  }
  CHECK_THROWS_AS(dataset_from_json(json{{"kind", "csv"}, {"path", "empty.csv"}}, tmp, 0), ConfigError);

  const auto pts = dataset_from_json(json{{"kind", "points"}, {"points", {0, 1}}, {"masses", {0.7, 0.3}}}, tmp, 0);
  CHECK(pts.masses == std::vector<double>{0.7, 0.3});
  CHECK_THROWS_AS(dataset_from_json(json{{"kind", "points"}, {"points", {0, 1}}, {"masses", {1.0}}}, tmp, 0),
                  ConfigError);

  const auto sine = dataset_from_json(json{{"kind", "sine"}, {"n_major", 800}}, tmp, 3);
  CHECK(sine.data.points.size() == 802);
  // the run seed reaches the generator unless the dataset overrides it
  CHECK(sine.data.points.coords() == make_sine_dataset({.n_major = 800, .seed = 3}).points.coords());
  const auto spiral = dataset_from_json(json{{"kind", "spiral"}, {"n", 40}, {"seed", 9}}, tmp, 3);
  CHECK(spiral.data.points.coords() == make_spiral(40, 9).points.coords());
  CHECK(dataset_from_json(json{{"kind", "grid_isolated"}, {"n", 442}}, tmp, 1).data.centers.size() == 442);
  CHECK(dataset_from_json(json{{"kind", "gauss_grid"}, {"n", 30}, {"modes", 3}}, tmp, 1).data.centers.size() == 3);
  CHECK_THROWS_AS(dataset_from_json(json{{"kind", "mnist"}}, tmp, 0), ConfigError);
  CHECK_THROWS_AS(dataset_from_json(json::array(), tmp, 0), ConfigError);
  std::filesystem::remove_all(tmp);
}

TEST_CASE("generator factories from JSON", "[io]") {
  const DiscreteDistribution p(PointSet(1, {0.0, 1.0}), {5.0 / 7, 2.0 / 7});
  const SupportProjection proj(p, 4);
  const FitContext ctx{1, 1, &p, &proj.grid(), 0.25};

  CHECK(generator_factory_from_json(json{{"kind", "histogram"}, {"cells", 4}})(p, ctx)->kind() == "histogram");
  CHECK(generator_factory_from_json(json{{"kind", "discrete"}})(p, ctx)->kind() == "atomic");
  const auto fixed = generator_factory_from_json(json{{"kind", "fixed_atoms"}, {"support", {0}}, {"mass", {1.0}}});
  CHECK(fixed(p, ctx)->pdf(std::vector<double>{0.0}) == 1.0);
  const auto sched = generator_factory_from_json(
      json{{"kind", "schedule"}, {"rounds", {{{"kind", "fixed_atoms"}, {"support", {0}}, {"mass", {1.0}}}, {{"kind", "discrete"}}}}});
  CHECK(sched(p, ctx)->pdf(std::vector<double>{1.0}) == 0.0);
  FitContext ctx2 = ctx;
  ctx2.round = 2;
  CHECK(sched(p, ctx2)->pdf(std::vector<double>{1.0}) == 2.0 / 7);

  CHECK_THROWS_AS(generator_factory_from_json(json{{"kind", "vae"}}), ConfigError);
  CHECK_THROWS_AS(generator_factory_from_json(json{{"kind", "histogram"}, {"cells", 1}}), ConfigError);
  CHECK_THROWS_AS(generator_factory_from_json(json{{"kind", "gmm"}, {"components", 0}}), ConfigError);
  CHECK_THROWS_AS(generator_factory_from_json(json{{"kind", "kde"}, {"bandwidth", 0.0}}), ConfigError);
  CHECK_THROWS_AS(generator_factory_from_json(json{{"kind", "adversarial"}, {"rule", "worst"}}), ConfigError);
  CHECK_THROWS_AS(generator_factory_from_json(json{{"kind", "fixed_atoms"}, {"support", {0}}, {"mass", {0.5}}}),
                  ConfigError);
  CHECK_THROWS_AS(generator_factory_from_json(json{{"kind", "fixed_family"}, {"candidates", json::array()}}),
                  ConfigError);
  CHECK_THROWS_AS(generator_factory_from_json(json{{"cells", 4}}), ConfigError);
}

TEST_CASE("discriminator settings from JSON", "[io]") {
  CHECK(discriminator_from_json(json()).kind == "logistic");
  const auto o = discriminator_from_json(json{{"kind", "oracle"}, {"samples", 64}});
  CHECK(o.kind == "oracle");
  CHECK(o.samples == 64);
  CHECK(static_cast<bool>(discriminator_from_json(json{{"features", "affine"}, {"scale", "median_nearest"}}).factory));
  CHECK_THROWS_AS(discriminator_from_json(json{{"clamp", 0.2}}), ConfigError);
  CHECK_THROWS_AS(discriminator_from_json(json{{"kind", "svm"}}), ConfigError);
  CHECK_THROWS_AS(discriminator_from_json(json{{"features", "poly"}}), ConfigError);
  CHECK_THROWS_AS(discriminator_from_json(json{{"scale", "silverman"}}), ConfigError);
  CHECK_THROWS_AS(discriminator_from_json(json{{"samples", 0}}), ConfigError);
}

#include "doctest.h"

#include "heisenberg/experiments.hpp"

#include <filesystem>
#include <fstream>

using namespace heisenberg;
using json = nlohmann::json;

namespace {

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.symbols.scales = {1};
  c.symbols.translates = {{0.0, 0.0, 0.0}};
  c.p = {6.0};
  c.refine = false;
  c.mc_shifts = 50;
  return c;
}

}  // namespace

TEST_CASE("config round trip and strictness") {
  const ExperimentConfig c = tiny();
  const ExperimentConfig back = ExperimentConfig::from_json(json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());

  json j = json::parse(c.to_json().dump());
  j["bogus"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = json::parse(c.to_json().dump());
  j["symbols"]["radus"] = 0.2;
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = json::parse(c.to_json().dump());
  j["kernel"] = {{"kind", "riesz"}, {"ell", 7}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = json::parse(c.to_json().dump());
  j["symbols"]["translates"] = {{0.0, 0.0}};
  CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse("[]")), ConfigError);

  // Partial documents fill in defaults.
  const ExperimentConfig partial = ExperimentConfig::from_json(json::parse(R"({"depth": 3, "p": [8]})"));
  CHECK(partial.depth == 3);
  CHECK(partial.p == std::vector<double>{8.0});
  CHECK(partial.symbols.radius == c.symbols.radius);
}

TEST_CASE("config hash tracks results, not locations") {
  ExperimentConfig a = tiny(), b = tiny();
  b.output_dir = "elsewhere";
  b.cache_dir = "cache2";
  CHECK(a.hash() == b.hash());
  b.seed = 2;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 16);
}

TEST_CASE("symbol families") {
  ExperimentConfig c;
  const auto bumps = family_instances(c);
  CHECK(bumps.size() == 6);
  const auto& s = bumps[smallest_instance(bumps)];
  CHECK(s.scale == 2);
  CHECK(s.root == origin_tile(1, -2));
  // Dilating the smallest instance back gives the base bump.
  const Point g = Point::make(0.05, -0.02, 0.01);
  CHECK(s.symbol(dilate(1.0 / 9.0, g)) == doctest::Approx(bumps[0].symbol(g)).epsilon(1e-12));

  c.symbols.family = "random_bump";
  c.symbols.count = 4;
  const auto r1 = family_instances(c), r2 = family_instances(c);
  CHECK(r1.size() == 4);
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i].symbol(g) == r2[i].symbol(g));
  c.seed = 9;
  CHECK(family_instances(c)[0].symbol(g) != r1[0].symbol(g));

  c.symbols.family = "constant";
  const auto k = family_instances(c);
  REQUIRE(k.size() == 1);
  CHECK(k[0].constant);
}

TEST_CASE("report formats") {
  Report r;
  r.experiment = "demo";
  r.config_hash = "abc";
  r.build_id = build_id();
  ReportRow row;
  row.id = "x";
  row.quantities["value"] = 1.5;
  row.quantities["list"] = {1, 2};
  row.quantities["note"] = "a,b";
  row.tolerance["value"] = 2.0;
  row.runtime = 3.0;
  r.rows.push_back(row);
  row.id = "y";
  row.pass = false;
  r.rows.push_back(row);

  CHECK_FALSE(r.pass());
  const auto j = r.to_json();
  CHECK(j["rows"][0]["config_hash"] == "abc");
  CHECK(j["rows"][1]["pass"] == false);
  CHECK(j.dump().find("runtime") == std::string::npos);
  CHECK(r.timings()["total_seconds"] == 6.0);
  const std::string csv = r.to_csv();
  CHECK(csv.find("demo,x,list.1,2,1,abc,") != std::string::npos);
  CHECK(csv.find("demo,y,note,a;b,0,abc,") != std::string::npos);
  CHECK(csv.find("tolerance.value,2") != std::string::npos);
  CHECK_FALSE(build_id().empty());
}

TEST_CASE("equivalence refuses p at or below the critical index") {
  ExperimentConfig c = tiny();
  c.p = {4.0};
  CHECK_THROWS_AS(run_equivalence(c), StageError);
  try {
    run_equivalence(c);
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find(c.hash()) != std::string::npos);
  }
}

TEST_CASE("constant symbols give zero everywhere") {
  ExperimentConfig c = tiny();
  c.symbols.family = "constant";
  const Report eq = run_equivalence(c);
  CHECK(eq.pass());
  CHECK(eq.rows.front().quantities.contains("skipped"));
  const Report k = run_constancy(c);
  CHECK(k.pass());
  for (const auto& row : k.rows) CHECK(row.quantities["max_sum"] == 0.0);
}

TEST_CASE("reports are reproducible and cache independent") {
  ExperimentConfig c = tiny();
  clear_spectrum_cache();
  const std::string a = run_schatten(c).to_json().dump() + run_besov(c).to_json().dump();
  clear_spectrum_cache();
  const auto dir = std::filesystem::temp_directory_path() / "heisenberg_exp_cache";
  std::filesystem::remove_all(dir);
  c.cache_dir = dir.string();
  const std::string b = run_schatten(c).to_json().dump() + run_besov(c).to_json().dump();
  clear_spectrum_cache();
  const std::string again = run_schatten(c).to_json().dump() + run_besov(c).to_json().dump();
  CHECK(a == b);
  CHECK(b == again);

  const Report r = run_schatten(c);
  const auto out = std::filesystem::temp_directory_path() / "heisenberg_exp_out";
  std::filesystem::remove_all(out);
  r.write(out.string(), true);
  CHECK(std::filesystem::exists(out / "schatten.json"));
  CHECK(std::filesystem::exists(out / "schatten.csv"));
  CHECK(std::filesystem::exists(out / "schatten.timings.json"));
  CHECK(std::filesystem::exists(out / "plots" / "schatten_spectrum_bump_s1_t0.csv"));
  std::filesystem::remove_all(out);
  std::filesystem::remove_all(dir);
}

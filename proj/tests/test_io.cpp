#include "doctest.h"

#include "heisenberg/io.hpp"

#include <filesystem>
#include <fstream>
#include <vector>

using namespace heisenberg;

namespace {

std::filesystem::path scratch(const char* name) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("fnv1a reference digests") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("little-endian float64 files") {
  const auto dir = scratch("heisenberg_io_f64");
  const std::vector<double> v = {1.0, -2.5, 1e-300, 3.141592653589793};
  const std::string path = (dir / "v.f64").string();
  write_f64_le(path, v.data(), v.size());
  std::ifstream in(path, std::ios::binary);
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  // 1.0 is 0x3FF0000000000000; the high byte comes last.
  CHECK(bytes[7] == 0x3F);
  CHECK(bytes[6] == 0xF0);
  CHECK(bytes[0] == 0x00);
  std::vector<double> w(v.size());
  read_f64_le(path, w.data(), w.size());
  CHECK(w == v);
  std::vector<double> bad(3);
  CHECK_THROWS(read_f64_le(path, bad.data(), bad.size()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("tile json round trip") {
  IVector m(2);
  m << -3, 7;
  const TileId T{2, m, -11};
  CHECK(tile_from_json(to_json(T)) == T);
  CHECK(to_json(T).dump() == R"({"level":2,"base":[-3,7],"k":-11})");
}

TEST_CASE("grid and coefficient round trips") {
  const auto region = std::make_shared<const Region>(TileId{0, IVector::Zero(2), 0}, 2);
  const Symbol b = Symbol::bump(Point::make(0.1, -0.1, 0.05), 0.4) + Symbol::constant(1, 0.5);
  const SymbolGrid g = sample_symbol(region, b, Sampling::center_value, 1);

  const SymbolGrid j = grid_from_json(nlohmann::json::parse(to_json(g).dump()));
  CHECK(j.values == g.values);
  CHECK(j.region->root() == g.region->root());
  CHECK(j.region->depth() == 2);

  const auto dir = scratch("heisenberg_io_grid");
  save_grid((dir / "grid").string(), g);
  const SymbolGrid f = load_grid((dir / "grid").string());
  CHECK(f.values == g.values);
  CHECK(f.sampling == g.sampling);

  const HaarCoefficients c = haar_expand(g);
  const HaarCoefficients c2 = coefficients_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(c2.coarse == c.coarse);
  REQUIRE(c2.levels.size() == c.levels.size());
  for (std::size_t i = 0; i < c.levels.size(); ++i) CHECK(c2.levels[i] == c.levels[i]);

  Eigen::MatrixXd A = Eigen::MatrixXd::Random(5, 3);
  save_matrix((dir / "A").string(), A, {{"name", "test"}});
  CHECK(load_matrix((dir / "A").string()) == A);
  std::filesystem::remove_all(dir);
}

#include "heisenberg/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace heisenberg {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

namespace {

std::uint64_t bswap64(std::uint64_t v) {
  v = ((v & 0x00000000FFFFFFFFULL) << 32) | ((v & 0xFFFFFFFF00000000ULL) >> 32);
  v = ((v & 0x0000FFFF0000FFFFULL) << 16) | ((v & 0xFFFF0000FFFF0000ULL) >> 16);
  v = ((v & 0x00FF00FF00FF00FFULL) << 8) | ((v & 0xFF00FF00FF00FF00ULL) >> 8);
  return v;
}

void swap_if_big_endian(std::vector<std::uint64_t>& words) {
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& w : words) w = bswap64(w);
  }
}

}  // namespace

void write_f64_le(const std::string& path, const double* data, std::size_t count) {
  std::vector<std::uint64_t> words(count);
  std::memcpy(words.data(), data, count * sizeof(double));
  swap_if_big_endian(words);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_f64_le(const std::string& path, double* data, std::size_t count) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot read " + path);
  if (static_cast<std::size_t>(in.tellg()) != count * sizeof(double)) {
    throw std::runtime_error("unexpected size of " + path);
  }
  in.seekg(0);
  std::vector<std::uint64_t> words(count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * sizeof(double)));
  swap_if_big_endian(words);
  std::memcpy(data, words.data(), count * sizeof(double));
}

nlohmann::ordered_json to_json(const TileId& T) {
  nlohmann::ordered_json j;
  j["level"] = T.level;
  std::vector<std::int64_t> m(T.m.data(), T.m.data() + T.m.size());
  j["base"] = m;
  j["k"] = T.k;
  return j;
}

TileId tile_from_json(const nlohmann::json& j) {
  TileId T;
  T.level = j.at("level").get<int>();
  const auto m = j.at("base").get<std::vector<std::int64_t>>();
  if (m.empty() || m.size() % 2 != 0 || m.size() > 2 * kMaxN) throw std::invalid_argument("tile json: bad base");
  T.m = Eigen::Map<const IVector>(m.data(), static_cast<Eigen::Index>(m.size()));
  T.k = j.at("k").get<std::int64_t>();
  return T;
}

namespace {

nlohmann::ordered_json grid_layout(const SymbolGrid& g) {
  nlohmann::ordered_json j;
  j["region"] = {{"root", to_json(g.region->root())}, {"depth", g.region->depth()}};
  j["order"] = "canonical path order of fine tiles";
  j["sampling"] = g.sampling == Sampling::center_value ? "center_value" : "cell_average";
  j["samples_per_axis"] = g.samples_per_axis;
  j["count"] = g.size();
  return j;
}

SymbolGrid grid_shell(const nlohmann::json& j) {
  auto R = std::make_shared<const Region>(tile_from_json(j.at("region").at("root")), j.at("region").at("depth").get<int>());
  SymbolGrid g;
  g.region = R;
  g.sampling = j.at("sampling").get<std::string>() == "center_value" ? Sampling::center_value : Sampling::cell_average;
  g.samples_per_axis = j.at("samples_per_axis").get<int>();
  if (j.at("count").get<std::int64_t>() != R->size()) throw std::invalid_argument("grid json: count mismatch");
  return g;
}

}  // namespace

nlohmann::ordered_json to_json(const SymbolGrid& g) {
  nlohmann::ordered_json j = grid_layout(g);
  j["values"] = std::vector<double>(g.values.data(), g.values.data() + g.values.size());
  return j;
}

SymbolGrid grid_from_json(const nlohmann::json& j) {
  SymbolGrid g = grid_shell(j);
  const auto v = j.at("values").get<std::vector<double>>();
  if (static_cast<std::int64_t>(v.size()) != g.region->size()) throw std::invalid_argument("grid json: value count");
  g.values = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return g;
}

void save_grid(const std::string& stem, const SymbolGrid& g) {
  nlohmann::ordered_json j = grid_layout(g);
  j["values_file"] = stem.substr(stem.find_last_of('/') + 1) + ".f64";
  std::ofstream(stem + ".json") << j.dump(2) << "\n";
  write_f64_le(stem + ".f64", g.values.data(), static_cast<std::size_t>(g.size()));
}

SymbolGrid load_grid(const std::string& stem) {
  std::ifstream in(stem + ".json");
  if (!in) throw std::runtime_error("cannot read " + stem + ".json");
  SymbolGrid g = grid_shell(nlohmann::json::parse(in));
  g.values.resize(g.region->size());
  read_f64_le(stem + ".f64", g.values.data(), static_cast<std::size_t>(g.size()));
  return g;
}

nlohmann::ordered_json to_json(const HaarCoefficients& c) {
  nlohmann::ordered_json j;
  j["region"] = {{"root", to_json(c.region->root())}, {"depth", c.region->depth()}};
  j["coarse"] = c.coarse;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < c.levels.size(); ++i) {
    const int level = c.region->root().level - static_cast<int>(i);
    const auto tiles = c.region->tiles_at(level);
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      const Eigen::VectorXd row = c.levels[i].row(static_cast<Eigen::Index>(t)).transpose();
      entries.push_back({{"tile", to_json(tiles[t])}, {"coefficients", std::vector<double>(row.data(), row.data() + row.size())}});
    }
  }
  j["entries"] = std::move(entries);
  return j;
}

HaarCoefficients coefficients_from_json(const nlohmann::json& j) {
  HaarCoefficients c;
  auto R = std::make_shared<const Region>(tile_from_json(j.at("region").at("root")), j.at("region").at("depth").get<int>());
  c.region = R;
  c.coarse = j.at("coarse").get<double>();
  const std::int64_t M = children_count(R->dim());
  std::int64_t rows = 1;
  for (int i = 0; i < R->depth(); ++i) {
    c.levels.push_back(Eigen::MatrixXd::Zero(rows, M - 1));
    rows *= M;
  }
  for (const auto& e : j.at("entries")) {
    const TileId T = tile_from_json(e.at("tile"));
    const int i = R->root().level - T.level;
    if (i < 0 || i >= R->depth()) throw std::invalid_argument("coefficient json: tile level outside region");
    const auto [offset, count] = R->block(T);
    const auto v = e.at("coefficients").get<std::vector<double>>();
    if (static_cast<std::int64_t>(v.size()) != M - 1) throw std::invalid_argument("coefficient json: wrong count");
    c.levels[i].row(offset / count) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), M - 1);
  }
  return c;
}

void save_matrix(const std::string& stem, const Eigen::MatrixXd& A, nlohmann::ordered_json meta) {
  meta["rows"] = A.rows();
  meta["cols"] = A.cols();
  meta["layout"] = "row-major, little-endian float64";
  meta["values_file"] = stem.substr(stem.find_last_of('/') + 1) + ".f64";
  std::ofstream(stem + ".json") << meta.dump(2) << "\n";
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = A;
  write_f64_le(stem + ".f64", rm.data(), static_cast<std::size_t>(rm.size()));
}

Eigen::MatrixXd load_matrix(const std::string& stem) {
  std::ifstream in(stem + ".json");
  if (!in) throw std::runtime_error("cannot read " + stem + ".json");
  const nlohmann::json meta = nlohmann::json::parse(in);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(meta.at("rows").get<Eigen::Index>(),
                                                                            meta.at("cols").get<Eigen::Index>());
  read_f64_le(stem + ".f64", rm.data(), static_cast<std::size_t>(rm.size()));
  return rm;
}

}  // namespace heisenberg

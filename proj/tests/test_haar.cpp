#include "doctest.h"

#include "heisenberg/haar.hpp"

#include <cmath>
#include <memory>
#include <random>

using namespace heisenberg;

namespace {

std::shared_ptr<Region> region(int level, int depth) { return std::make_shared<Region>(origin_tile(1, level), depth); }

SymbolGrid random_grid(const std::shared_ptr<Region>& R, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  Eigen::VectorXd v(R->size());
  for (auto& x : v) x = N(rng);
  return make_grid(R, v);
}

}  // namespace

TEST_CASE("Gram identity and cancellation by brute-force inner products") {
  auto R = region(1, 2);
  for (const TileId& T : {R->root(), R->tiles_at(0)[17]}) {
    const auto basis = build_basis(*R, T);
    CHECK(basis.size() == 80);
    std::vector<SymbolGrid> fs;
    {
      const auto [off, cnt] = R->block(T);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(R->size());
      v.segment(off, cnt).setConstant(1.0 / std::sqrt(tile_measure(1, T.level)));
      fs.push_back(make_grid(R, v));
    }
    for (const auto& h : basis) fs.push_back(haar_grid(R, h));
    double gram = 0, cancel = 0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (i > 0) cancel = std::max(cancel, std::abs(fs[i].values.sum() * R->fine_measure()));
      for (std::size_t j = 0; j < fs.size(); ++j) {
        gram = std::max(gram, std::abs(grid_inner(fs[i], fs[j]) - (i == j ? 1.0 : 0.0)));
      }
    }
    CHECK(gram < 1e-12);
    CHECK(cancel < 1e-12);
  }
  CHECK_THROWS_AS(build_basis(*R, R->fine_tiles()[0]), std::invalid_argument);
}

TEST_CASE("Haar norms scale with the tile") {
  for (double p : {1.0, 2.0, 4.0, double(INFINITY)}) {
    double first = -1;
    for (int level : {-1, 0, 1}) {
      const TileId T = origin_tile(1, level);
      for (const auto& h : build_basis(T)) {
        const double s = h.norm(p) * std::pow(tile_measure(1, level), std::isinf(p) ? 0.5 : 0.5 - 1.0 / p);
        if (h.index == 1 && first < 0) first = s;
        if (h.index == 1) CHECK(s == doctest::Approx(first).epsilon(1e-12));
        CHECK(s > 0.05);
        CHECK(s < 20.0);
      }
    }
  }
  for (const auto& h : build_basis(origin_tile(1, 0))) {
    const double prod = h.norm(1.0) * h.norm(INFINITY);
    // Hoelder gives ||h||_2^2 <= ||h||_1 ||h||_inf, so the product is at least 1.
    CHECK(prod >= 1.0 - 1e-12);
    CHECK(prod < 3.0);
  }
}

TEST_CASE("expansion round trip and Parseval") {
  auto R = region(1, 2);
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const SymbolGrid b = random_grid(R, rng);
    const HaarCoefficients c = haar_expand(b);
    CHECK((haar_reconstruct(c).values - b.values).cwiseAbs().maxCoeff() < 1e-10);
    const double energy = grid_inner(b, b);
    CHECK(std::abs(c.squared_norm() - energy) < 1e-10 * energy);
  }
}

TEST_CASE("single Haar function has one coefficient") {
  auto R = region(1, 2);
  const TileId T = R->tiles_at(0)[40];
  const auto basis = build_basis(T);
  const SymbolGrid b = haar_grid(R, basis[6]);
  const HaarCoefficients c = haar_expand(b);
  const auto [off, cnt] = R->block(T);
  (void)cnt;
  const Eigen::MatrixXd& L = c.at_level(0);
  CHECK(L(off / 81, 6) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(c.squared_norm() == doctest::Approx(1.0).epsilon(1e-12));
  const auto [eps, coeff] = select_max_haar(b, T);
  CHECK(eps == 7);
  CHECK(coeff == doctest::Approx(1.0));
  const SymbolGrid constant = make_grid(R, Eigen::VectorXd::Constant(R->size(), 3.0));
  const auto [e0, c0] = select_max_haar(constant, T);
  CHECK(e0 == 1);
  CHECK(std::abs(c0) < 1e-12);
}

TEST_CASE("martingale differences are Haar projections") {
  auto R = region(1, 2);
  std::mt19937_64 rng(7);
  const SymbolGrid b = random_grid(R, rng);
  for (int k : {-1, 0}) {
    const SymbolGrid D = martingale_difference(b, k);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(R->size());
    for (const TileId& T : R->tiles_at(-k)) {
      for (const auto& h : build_basis(T)) {
        const SymbolGrid hg = haar_grid(R, h);
        sum += grid_inner(b, hg) * hg.values;
      }
    }
    CHECK((sum - D.values).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("one-level oscillation is controlled by the largest coefficient") {
  auto R = region(1, 2);
  std::mt19937_64 rng(19);
  double worst = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const SymbolGrid b = random_grid(R, rng);
    const SymbolGrid D = martingale_difference(b, 0);
    for (const TileId& T : R->tiles_at(0)) {
      const auto [off, cnt] = R->block(T);
      const double osc = D.values.segment(off, cnt).cwiseAbs().maxCoeff();
      const double coeff = std::abs(select_max_haar(b, T).second) / std::sqrt(tile_measure(1, 0));
      worst = std::max(worst, osc / coeff);
    }
  }
  // Norm equivalence on an 80-dimensional space: the ratio is bounded by sqrt(80 * 81).
  CHECK(worst < std::sqrt(80.0 * 81.0));
}

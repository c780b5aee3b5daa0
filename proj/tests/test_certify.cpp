#include "doctest.h"

#include "heisenberg/certify.hpp"

#include <cmath>
#include <random>

using namespace heisenberg;

namespace {

const KernelEvaluator& riesz1() {
  static const KernelEvaluator K = KernelEvaluator::make(KernelSpec::riesz(1), {}, "", 1025);
  return K;
}

const KernelEvaluator& tkernel() {
  static const KernelEvaluator K = KernelEvaluator::make(KernelSpec::second_order_T(), {}, "", 1025);
  return K;
}

TileId random_tile(std::mt19937_64& rng, int level) {
  std::uniform_int_distribution<int> M(-20, 20), Kd(-40, 40);
  IVector m(2);
  m << M(rng), M(rng);
  return TileId{level, m, Kd(rng)};
}

}  // namespace

TEST_CASE("sphere scan: cauchy-szego never vanishes") {
  const auto K = KernelEvaluator::make(KernelSpec::cauchy_szego());
  const SphereScan s = sphere_scan(K, 4000);
  CHECK(s.samples() >= 4000);
  CHECK(s.zero_fraction == 0.0);
  CHECK(s.min_magnitude == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.max_magnitude == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sphere scan: T kernel has the sign of t") {
  const SphereScan s = sphere_scan(tkernel(), 4000, 0.0);
  for (int i = 0; i < s.phi_count; ++i) {
    for (int j = 0; j < s.dir_count; ++j) {
      const double t = s.point(i, j).t();
      CHECK((s.values(i, j) > 0) == (t > 0));
    }
  }
  CHECK(s.positive_regions == 1);
  CHECK(s.negative_regions == 1);
}

TEST_CASE("sphere scan: riesz kernel vanishes on a null set") {
  const SphereScan s = sphere_scan(riesz1(), 10000);
  CHECK(s.zero_fraction < 0.01);
  CHECK(s.max_magnitude > 0.01);
  CHECK(s.max_magnitude < 1.0);
  // K_1 is odd under z -> -z, so both signs occur.
  CHECK(s.positive_regions >= 1);
  CHECK(s.negative_regions >= 1);
  CHECK(s.positive_fraction == doctest::Approx(0.5).epsilon(0.05));
  CHECK_THROWS(sphere_scan(riesz1(), 10));
}

TEST_CASE("certification succeeds and survives denser sampling") {
  std::mt19937_64 rng(5);
  CertifyConfig cfg;
  for (const KernelEvaluator* K : {&riesz1(), &tkernel()}) {
    const auto dirs = certify_directions(*K, cfg);
    REQUIRE(!dirs.empty());
    for (int trial = 0; trial < 6; ++trial) {
      const TileId T = random_tile(rng, trial % 3 - 1);
      for (int N = 0; N <= 2; ++N) {
        const Certificate c = nondegen_certify(T, N, *K, cfg, dirs);
        REQUIRE(c.found);
        CHECK(is_descendant(c.partner, c.container));
        CHECK(c.partner.level == T.level);
        CHECK(c.container.level == T.level + N + cfg.A0);
        CHECK(c.min_scaled > 0);
        // Independent check: random points on both tiles.
        std::mt19937_64 r2(trial * 7 + N);
        for (int s = 0; s < 300; ++s) {
          const Point g = random_point_in_tile(T, r2);
          const Point h = random_point_in_tile(c.partner, r2);
          const double v = (*K)(left_quotient(h, g));
          CHECK(v * c.sign > 0);
        }
        const SignCheck dense = pair_sign(T, c.partner, *K, 2 * cfg.samples_per_axis);
        CHECK(dense.sign == c.sign);
      }
    }
  }
}

TEST_CASE("certified constant is dilation covariant") {
  CertifyConfig cfg;
  const auto dirs = certify_directions(riesz1(), cfg);
  IVector m(2);
  m << 3, -2;
  const TileId T0{0, m, 5};
  const Certificate c0 = nondegen_certify(T0, 1, riesz1(), cfg, dirs);
  REQUIRE(c0.found);
  for (int dj : {-1, 1}) {
    const Certificate c = nondegen_certify(dilate_tile(T0, dj), 1, riesz1(), cfg, dirs);
    REQUIRE(c.found);
    CHECK(c.partner == dilate_tile(c0.partner, dj));
    CHECK(c.min_scaled == doctest::Approx(c0.min_scaled).epsilon(1e-6));
  }
}

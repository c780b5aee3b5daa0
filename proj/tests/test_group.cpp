#include "doctest.h"

#include "heisenberg/group.hpp"
#include "heisenberg/symbols.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace heisenberg;

namespace {

Point random_point(std::mt19937_64& rng, int n, double scale = 2.0) {
  std::uniform_real_distribution<double> U(-scale, scale);
  HVector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = U(rng);
    y(i) = U(rng);
  }
  return Point(x, y, U(rng) * scale);
}

double rel(const Point& a, const Point& b) {
  return max_abs_difference(a, b) / std::max(1.0, max_abs_coordinate(b));
}

}  // namespace

TEST_CASE("product examples") {
  const Point a = Point::make(1, 0, 0), b = Point::make(0, 1, 0);
  const Point ab = a * b;
  CHECK(ab.x()(0) == 1);
  CHECK(ab.y()(0) == 1);
  CHECK(ab.t() == -2);

  const Point g = Point::make(0.3, -1.2, 4.0);
  CHECK(max_abs_difference(g * Point(1), g) == 0);
  const Point p = Point::make(1, 0, 5), q = Point::make(-1, 0, -5);
  CHECK(max_abs_coordinate(p * q) == 0);
}

TEST_CASE("dilation, rho and gauge examples") {
  const Point d = dilate(2.0, Point::make(1, 1, 1));
  CHECK(d.x()(0) == 2);
  CHECK(d.y()(0) == 2);
  CHECK(d.t() == 4);
  CHECK(rho(Point::make(0, 0, 4)) == 2);
  CHECK(gauge_norm(Point::make(1, -2, 9)) == 3);
  CHECK(koranyi_norm(Point::make(1, 0, 0)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(dilate(0.0, d), std::invalid_argument);
  CHECK_THROWS_AS(dilate(-1.0, d), std::invalid_argument);
}

TEST_CASE("dimension errors") {
  CHECK_THROWS_AS(Point(0), DimensionError);
  CHECK_THROWS_AS(Point(kMaxN + 1), DimensionError);
  CHECK_THROWS_AS(multiply(Point(1), Point(2)), DimensionError);
}

TEST_CASE("group laws on random triples") {
  for (int n : {1, 2}) {
    std::mt19937_64 rng(17 + n);
    double assoc = 0, inv = 0, ident = 0;
    for (int i = 0; i < 10000; ++i) {
      const Point g = random_point(rng, n), h = random_point(rng, n), k = random_point(rng, n);
      assoc = std::max(assoc, rel((g * h) * k, g * (h * k)));
      inv = std::max(inv, max_abs_coordinate(g * inverse(g)));
      ident = std::max(ident, rel(g * Point(n), g));
    }
    CHECK(assoc <= 1e-12);
    CHECK(inv <= 1e-12);
    CHECK(ident == 0);
  }
}

TEST_CASE("metric invariance and homogeneity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> R(0.1, 10.0);
  double left = 0, homog = 0, rho_inv = 0;
  for (int i = 0; i < 10000; ++i) {
    const Point g = random_point(rng, 1), h = random_point(rng, 1), a = random_point(rng, 1);
    for (MetricKind kind : {MetricKind::rho_max, MetricKind::gauge, MetricKind::koranyi}) {
      const double d = distance(kind, g, h);
      left = std::max(left, std::abs(distance(kind, a * g, a * h) - d) / d);
      const double lam = R(rng);
      homog = std::max(homog, std::abs(distance(kind, dilate(lam, g), dilate(lam, h)) - lam * d) / (lam * d));
    }
    rho_inv = std::max(rho_inv, std::abs(rho(inverse(g)) - rho(g)));
  }
  CHECK(left <= 1e-12);
  CHECK(homog <= 1e-12);
  CHECK(rho_inv == 0);
}

TEST_CASE("metrics are pairwise equivalent") {
  std::mt19937_64 rng(9);
  double lo = 1e9, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const Point g = random_point(rng, 1, 3.0);
    const double r = rho(g), ga = gauge_norm(g), k = koranyi_norm(g);
    for (double q : {r / ga, r / k, ga / k}) {
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
  }
  CHECK(lo >= 0.25);
  CHECK(hi <= 4.0);
}

TEST_CASE("left-invariant fields on coordinate symbols") {
  Eigen::VectorXi pt(3), px(3), py(3);
  pt << 0, 0, 1;
  px << 1, 0, 0;
  py << 0, 1, 0;
  const Symbol t = Symbol::monomial(1, 1.0, pt), x = Symbol::monomial(1, 1.0, px);
  const Point g = Point::make(0.7, -0.4, 1.3);
  CHECK(apply_field(1, t, g) == doctest::Approx(2 * g.y()(0)));
  CHECK(apply_field(2, t, g) == doctest::Approx(-2 * g.x()(0)));
  CHECK(apply_field(3, t, g) == doctest::Approx(1.0));
  CHECK(apply_field(1, x, g) == doctest::Approx(1.0));
  CHECK(apply_field(2, x, g) == doctest::Approx(0.0));
  CHECK_THROWS_AS(apply_field(4, x, g), std::out_of_range);
}

TEST_CASE("fields are derivatives along right translation") {
  const Point c = Point::make(0.2, 0.1, -0.3);
  const Symbol b = Symbol::bump(c, 1.5);
  std::mt19937_64 rng(3);
  const double s = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Point g = random_point(rng, 1, 0.6);
    for (int ell = 1; ell <= 2; ++ell) {
      const Point e = ell == 1 ? Point::make(s, 0, 0) : Point::make(0, s, 0);
      const Point em = inverse(e);
      const double fd = (b(g * e) - b(g * em)) / (2 * s);
      CHECK(apply_field(ell, b, g) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("bump: analytic partials against central differences") {
  const Symbol b = Symbol::bump(Point::make(0.1, -0.2, 0.05), 1.0);
  const Point g = Point::make(0.35, 0.1, 0.2);
  double prev = 0;
  std::vector<double> ratios;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    double err = 0;
    for (int ell = 1; ell <= 3; ++ell) {
      err = std::max(err, std::abs(apply_field(ell, b, g) -
                                   apply_field(ell, b, g, Differentiation::finite_difference, h)));
    }
    if (prev > 0) ratios.push_back(prev / err);
    prev = err;
  }
  for (double r : ratios) CHECK(std::log2(r) == doctest::Approx(2.0).epsilon(0.1));
  CHECK_THROWS_AS(b.gradient(Point::make(0.1, -0.2, 0.05)), NotDifferentiable);
}

TEST_CASE("horizontal Taylor remainders") {
  const Point g0 = Point::make(0.3, -0.1, 0.2);
  const Point g = Point::make(0.5, 0.4, 0.9);
  Eigen::VectorXi px(3), py(3);
  px << 1, 0, 0;
  py << 0, 1, 0;
  const Symbol affine = Symbol::monomial(1, 2.0, px) + Symbol::monomial(1, -3.0, py) + Symbol::constant(1, 0.5);
  CHECK(std::abs(horizontal_taylor(affine, g0, g).remainder) < 1e-14);
  CHECK(std::abs(horizontal_taylor(Symbol::constant(1, 4.0), g0, g).remainder) == 0);
  CHECK(std::abs(horizontal_taylor(affine, g0, g, TaylorVariant::factorial).remainder) > 0.1);

  const Symbol b = Symbol::bump(Point::make(0, 0, 0), 1.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> lr, lrem;
  for (int e = 3; e <= 8; ++e) {
    const double r = std::ldexp(1.0, -e);
    double worst = 0;
    for (int i = 0; i < 2000; ++i) {
      const Point w = Point::make(U(rng), U(rng), U(rng));
      if (rho(w) > 1) continue;
      worst = std::max(worst, std::abs(horizontal_taylor(b, g0, g0 * dilate(r, w)).remainder));
    }
    lr.push_back(std::log(r));
    lrem.push_back(std::log(worst));
  }
  const int N = static_cast<int>(lr.size());
  double mx = 0, my = 0;
  for (int i = 0; i < N; ++i) {
    mx += lr[i] / N;
    my += lrem[i] / N;
  }
  double sxy = 0, sxx = 0;
  for (int i = 0; i < N; ++i) {
    sxy += (lr[i] - mx) * (lrem[i] - my);
    sxx += (lr[i] - mx) * (lr[i] - mx);
  }
  CHECK(sxy / sxx >= 1.9);
}

TEST_CASE("symbol transformations") {
  const Point c = Point::make(0.3, 0.2, -0.1);
  const Symbol b = Symbol::bump(c, 0.8);
  const Point h = Point::make(-0.4, 0.5, 0.7);
  const Symbol bh = b.translated(h);
  const Symbol bd = b.dilated(3.0);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const Point g = random_point(rng, 1, 0.5);
    CHECK(bh(g) == doctest::Approx(b(h * g)).epsilon(1e-12));
    CHECK(bd(g) == doctest::Approx(b(dilate(3.0, g))).epsilon(1e-12));
  }
}

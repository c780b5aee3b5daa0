#include "doctest.h"

#include "heisenberg/kernels.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

using namespace heisenberg;

namespace {

constexpr double kPi = 3.14159265358979323846;

Point pt(double x, double y, double t) { return Point::make(x, y, t); }

Point pt2(double x1, double x2, double y1, double y2, double t) {
  HVector<double> x(2), y(2);
  x << x1, x2;
  y << y1, y2;
  return Point(x, y, t);
}

// g * exp(s e_a): right translation along the a-th horizontal direction.
Point step(const Point& g, int a, double s) {
  const int n = g.dim();
  HVector<double> x = HVector<double>::Zero(n), y = HVector<double>::Zero(n);
  if (a <= n) x(a - 1) = s;
  else y(a - n - 1) = s;
  return g * Point(x, y, 0.0);
}

Point vstep(const Point& g, double s) { return Point(g.x(), g.y(), g.t() + s); }

template <typename F>
double field_fd(F&& f, int a, const Point& g, double s = 1e-4) {
  return (f(step(g, a, s)) - f(step(g, a, -s))) / (2 * s);
}

template <typename F>
double field2_fd(F&& f, int a, int b, const Point& g, double s = 1e-3) {
  auto at = [&](double sa, double sb) { return f(step(step(g, a, sa), b, sb)); };
  return (at(s, s) - at(s, -s) - at(-s, s) + at(-s, -s)) / (4 * s * s);
}

// int_0^inf p_h(g) h^{-alpha} dh with h = e^u.
double heat_moment(const Point& g, double alpha) {
  auto f = [&](double u) {
    const double h = std::exp(u);
    return heat_kernel(g, h) * std::pow(h, 1.0 - alpha);
  };
  return integrate(f, -9.0, 40.0, {1e-14, 1e-10, 4000}).value;
}

double fundamental_constant(int n) {
  return std::tgamma(n) * sech_power_integral(n) / (8 * std::pow(kPi, n + 1));
}

double fundamental(const Point& g) {
  const double d2 = std::hypot(g.horizontal_norm2(), g.t());
  return fundamental_constant(g.dim()) / std::pow(d2, g.dim());
}

std::vector<Point> sample_points(int n, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  std::vector<Point> out;
  while (static_cast<int>(out.size()) < count) {
    HVector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x(i) = U(rng);
      y(i) = U(rng);
    }
    Point g(x, y, U(rng));
    if (koranyi_norm(g) > 0.3) out.push_back(g);
  }
  return out;
}

}  // namespace

TEST_CASE("sech power integrals") {
  for (int p = 1; p <= 8; ++p) {
    auto f = [p](double m) { return std::pow(1.0 / std::cosh(m), p); };
    const double q = integrate(f, -60.0, 60.0).value;
    CHECK(sech_power_integral(p) == doctest::Approx(q).epsilon(1e-11));
  }
  CHECK_THROWS(sech_power_integral(0));
}

TEST_CASE("koranyi polar coordinates") {
  const auto p = koranyi_polar(pt(0.0, 0.0, 2.0));
  CHECK(p.d == doctest::Approx(std::sqrt(2.0)));
  CHECK(p.phi == doctest::Approx(kPi / 2));
  const auto q = koranyi_polar(pt(1.0, 1.0, -4.0));
  CHECK(q.d == doctest::Approx(std::pow(20.0, 0.25)));
  CHECK(std::tan(q.phi) == doctest::Approx(-2.0));
}

TEST_CASE("heat kernel: origin, scaling, symmetry") {
  for (double h : {0.25, 1.0, 3.0}) CHECK(heat_kernel(pt(0, 0, 0), h) == doctest::Approx(1.0 / (64 * h * h)).epsilon(1e-10));
  for (const Point& g : sample_points(1, 6, 3)) {
    const double h = 0.7, r = 1.9;
    CHECK(heat_kernel(dilate(r, g), r * r * h) == doctest::Approx(heat_kernel(g, h) / std::pow(r, 4)).epsilon(1e-8));
    CHECK(heat_kernel(inverse(g), h) == doctest::Approx(heat_kernel(g, h)).epsilon(1e-10));
  }
  CHECK_THROWS(heat_kernel(pt(1, 0, 0), 0.0));
}

TEST_CASE("heat kernel solves the heat equation") {
  for (const Point& g : {pt(0.4, -0.3, 0.2), pt(1.0, 0.5, -0.8), pt2(0.3, -0.2, 0.5, 0.1, 0.4)}) {
    const double h = 0.6, dh = 1e-4, s = 5e-3;
    const double dt = (heat_kernel(g, h + dh) - heat_kernel(g, h - dh)) / (2 * dh);
    double lap = 0.0;
    for (int a = 1; a <= 2 * g.dim(); ++a) {
      lap += (heat_kernel(step(g, a, s), h) - 2 * heat_kernel(g, h) + heat_kernel(step(g, a, -s), h)) / (s * s);
    }
    CHECK(lap == doctest::Approx(dt).epsilon(1e-4));
  }
}

TEST_CASE("heat kernel has unit mass along each vertical line average") {
  // int_R p_h(z, t) dt = (4 pi h)^{-n} e^{-|z|^2 / 4h}.
  for (double h : {0.5, 1.0}) {
    const Point z = pt(0.6, -0.2, 0.0);
    auto f = [&](double t) { return heat_kernel(Point(z.x(), z.y(), t), h); };
    const double m = integrate(f, -40 * h, 40 * h, {1e-13, 1e-9, 4000}).value;
    CHECK(m == doctest::Approx(std::exp(-z.horizontal_norm2() / (4 * h)) / (4 * kPi * h)).epsilon(1e-7));
  }
}

TEST_CASE("integrated heat kernel is the fundamental solution") {
  for (const Point& g : {pt(1, 0, 0), pt(0.3, 0.5, 0.7), pt(-0.9, 0.2, -1.3), pt2(0.5, 0.1, -0.4, 0.3, 0.6)}) {
    CHECK(heat_moment(g, 0.0) == doctest::Approx(fundamental(g)).epsilon(1e-7));
  }
  // It is annihilated by the sub-Laplacian away from the origin.
  const Point g = pt(0.7, -0.4, 0.5);
  double lap = 0.0;
  for (int a = 1; a <= 2; ++a) lap += field2_fd(fundamental, a, a, g);
  CHECK(std::abs(lap) < 1e-5 * fundamental(g));
}

TEST_CASE("riesz kernel: reference values") {
  CHECK(riesz_kernel(1, pt(1, 0, 0)) == doctest::Approx(-0.1013681864).epsilon(1e-9));
  CHECK(riesz_kernel(1, pt(0.8, 0.1, 0.3)) == doctest::Approx(-0.1741652304).epsilon(1e-9));
  CHECK(riesz_kernel(1, pt(0, 0, 1)) == 0.0);
  CHECK_THROWS(riesz_kernel(1, pt(0, 0, 0)));
  CHECK_THROWS(riesz_kernel(3, pt(1, 0, 0)));
}

TEST_CASE("riesz kernel matches the derivative of the brute-force half-power kernel") {
  auto N = [](const Point& g) { return heat_moment(g, 0.5) / std::sqrt(kPi); };
  for (const Point& g : {pt(1, 0, 0), pt(0.8, 0.1, 0.3), pt(-0.4, 0.9, -0.6), pt2(0.6, -0.3, 0.2, 0.5, -0.4)}) {
    for (int ell = 1; ell <= 2 * g.dim(); ++ell) {
      // Richardson-extrapolated central difference.
      const double oracle = (4 * field_fd(N, ell, g, 1e-3) - field_fd(N, ell, g, 2e-3)) / 3;
      CHECK(riesz_kernel(ell, g) == doctest::Approx(oracle).epsilon(2e-6).scale(1e-3));
    }
  }
}

TEST_CASE("riesz kernel: contour profiles agree with the real axis") {
  for (int n : {1, 2}) {
    for (const Point& g : sample_points(n, 12, 11 + n)) {
      const auto AB = riesz_profiles(koranyi_polar(g).phi, n);
      for (int ell = 1; ell <= 2 * n; ++ell) {
        CHECK(riesz_from_profiles(ell, g, AB) == doctest::Approx(riesz_kernel(ell, g)).epsilon(1e-8).scale(1e-6));
      }
    }
  }
}

TEST_CASE("riesz kernel homogeneity and oddness in z") {
  for (const Point& g : sample_points(1, 8, 5)) {
    for (int ell = 1; ell <= 2; ++ell) {
      const double k = riesz_kernel(ell, g);
      CHECK(riesz_kernel(ell, dilate(2.3, g)) == doctest::Approx(k * std::pow(2.3, -4)).epsilon(1e-8).scale(1e-8));
      const Point flipped(-g.x(), -g.y(), g.t());
      CHECK(riesz_kernel(ell, flipped) == doctest::Approx(-k).epsilon(1e-10).scale(1e-10));
    }
  }
}

TEST_CASE("cauchy-szego kernel") {
  CHECK(std::abs(cauchy_szego_kernel(pt(1, 0, 0)) - cdouble(1, 0)) < 1e-15);
  CHECK(std::abs(cauchy_szego_kernel(pt(0, 0, 1)) - cdouble(-1, 0)) < 1e-15);
  CHECK(std::abs(cauchy_szego_kernel(pt(0, 0, 1), 2.5) - cdouble(-2.5, 0)) < 1e-15);
  const Point g = pt(0.3, 0.4, -0.5);
  CHECK(std::abs(cauchy_szego_kernel(dilate(1.7, g)) - cauchy_szego_kernel(g) / std::pow(1.7, 4)) < 1e-12);
  CHECK(std::abs(cauchy_szego_kernel(pt(0.5, 0.5, 0.5)) - 1.0 / std::pow(cdouble(0.5, 0.5), 2)) < 1e-14);
  CHECK_THROWS(cauchy_szego_kernel(pt(0, 0, 0)));
}

TEST_CASE("second-order T kernel") {
  CHECK(constant_C1(1) == doctest::Approx(1.0 / (8 * kPi * kPi)));
  CHECK(constant_C2(1).real() == 0.0);
  CHECK(constant_C2(1).imag() == doctest::Approx(-1.0 / (8 * kPi * kPi)));
  CHECK(closed_form_T_kernel(pt(0, 0, 1)) == doctest::Approx(1.0 / (8 * kPi)));
  for (int n : {1, 2, 3}) {
    for (const Point& g : sample_points(n, 8, 20 + n)) {
      CHECK(second_order_T_kernel(g) == doctest::Approx(closed_form_T_kernel(g)).epsilon(1e-9).scale(1e-8));
    }
  }
}

TEST_CASE("second-order T kernel is the commutator quarter applied to the fundamental solution") {
  for (const Point& g : {pt(0.5, 0.2, 0.7), pt(-0.8, 0.3, -0.4), pt2(0.4, -0.2, 0.1, 0.6, 0.5)}) {
    const int n = g.dim();
    double oracle = 0.0;
    for (int j = 1; j <= n; ++j) {
      oracle += 0.25 * (field2_fd(fundamental, j, n + j, g) - field2_fd(fundamental, n + j, j, g));
    }
    oracle /= n;
    CHECK(closed_form_T_kernel(g) == doctest::Approx(oracle).epsilon(1e-5));
    // The same operator is minus the vertical derivative.
    const double dt = (fundamental(vstep(g, 1e-4)) - fundamental(vstep(g, -1e-4))) / 2e-4;
    CHECK(closed_form_T_kernel(g) == doctest::Approx(-dt).epsilon(1e-6));
  }
}

TEST_CASE("second-order XX kernel against second derivatives of the fundamental solution") {
  for (int n : {1, 2}) {
    for (const Point& g : sample_points(n, 4, 40 + n)) {
      const double scale = 1.0 / std::pow(koranyi_norm(g), 2 * n + 2);
      for (int a = 1; a <= 2 * n; ++a) {
        for (int b = 1; b <= 2 * n; ++b) {
          const double oracle = field2_fd(fundamental, a, b, g, 1e-3);
          CHECK(second_order_XX_kernel(a, b, g) == doctest::Approx(oracle).epsilon(1e-4).scale(scale));
        }
      }
    }
  }
}

TEST_CASE("second-order XX kernel: quadrature route, trace, antisymmetric part") {
  for (int n : {1, 2}) {
    for (const Point& g : sample_points(n, 6, 60 + n)) {
      const double scale = 1.0 / std::pow(koranyi_norm(g), 2 * n + 2);
      double trace = 0.0;
      for (int a = 1; a <= 2 * n; ++a) {
        trace += second_order_XX_kernel(a, a, g);
        for (int b = 1; b <= 2 * n; ++b) {
          CHECK(second_order_XX_kernel(a, b, g) ==
                doctest::Approx(second_order_XX_quadrature(a, b, g)).epsilon(1e-8).scale(scale));
        }
      }
      CHECK(std::abs(trace) < 1e-12 * scale);
      for (int j = 1; j <= n; ++j) {
        const double anti = 0.25 * (second_order_XX_kernel(j, n + j, g) - second_order_XX_kernel(n + j, j, g));
        CHECK(anti == doctest::Approx(closed_form_T_kernel(g)).epsilon(1e-12).scale(scale));
      }
      CHECK(second_order_XX_kernel(1, 2, dilate(1.6, g)) ==
            doctest::Approx(second_order_XX_kernel(1, 2, g) / std::pow(1.6, 2 * n + 2)).epsilon(1e-12).scale(scale));
    }
  }
}

TEST_CASE("sphere table interpolation and cache round trip") {
  const QuadratureConfig cfg;
  const auto spec = KernelSpec::riesz(2);
  const SphereTable table(spec, cfg, 513);
  CHECK(table.nodes() == 513);
  CHECK(table.profiles() == 2);
  for (const Point& g : sample_points(1, 20, 77)) {
    CHECK(table(g) == doctest::Approx(riesz_kernel(2, g)).epsilon(1e-8).scale(1e-6 / std::pow(koranyi_norm(g), 4)));
  }
  const auto tdir = std::filesystem::temp_directory_path() / "heisenberg_table_test";
  std::filesystem::remove_all(tdir);
  table.save(tdir.string());
  const SphereTable loaded = SphereTable::load(tdir.string(), spec, cfg, 513);
  CHECK(loaded.values() == table.values());
  CHECK(loaded.build_hash() == table.build_hash());
  QuadratureConfig other = cfg;
  other.rel_tol = 1e-8;
  CHECK_THROWS(SphereTable::load(tdir.string(), spec, other, 513));
  // Riesz index does not enter the cache key.
  const auto shared = SphereTable::load_or_build(tdir.string(), KernelSpec::riesz(1), cfg, 513);
  CHECK(shared->values() == table.values());
  std::filesystem::remove_all(tdir);

  const SphereTable tt(KernelSpec::second_order_T(), cfg, 257);
  for (const Point& g : sample_points(1, 10, 78)) {
    CHECK(tt(g) == doctest::Approx(closed_form_T_kernel(g)).epsilon(1e-8).scale(1e-6 / std::pow(koranyi_norm(g), 4)));
  }
  CHECK_THROWS(SphereTable(KernelSpec::second_order_XX(1, 2), cfg, 65));
}

TEST_CASE("kernel evaluator") {
  CHECK_THROWS(KernelEvaluator(KernelSpec::riesz(1)));
  const auto xx = KernelEvaluator::make(KernelSpec::second_order_XX(1, 1));
  const Point g = pt(0.2, 0.9, -0.3);
  CHECK(xx(g) == second_order_XX_kernel(1, 1, g));
  CHECK_THROWS(xx(pt(0, 0, 0)));
  const auto cs = KernelEvaluator::make(KernelSpec::cauchy_szego(2.0));
  CHECK(cs.is_complex());
  CHECK(std::abs(cs.complex_value(g) - cauchy_szego_kernel(g, 2.0)) < 1e-15);
  CHECK_THROWS(cs(g));
  const auto rz = KernelEvaluator::make(KernelSpec::riesz(1), {}, "", 257);
  CHECK(rz(g) == doctest::Approx(riesz_kernel(1, g)).epsilon(1e-7));
  CHECK(kernel_kind_from_string("second_order_T") == KernelKind::second_order_T);
  CHECK_THROWS(kernel_kind_from_string("bogus"));
  CHECK_THROWS(KernelSpec::riesz(3).validate());
}

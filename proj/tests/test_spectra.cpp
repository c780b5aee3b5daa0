#include "doctest.h"

#include "heisenberg/spectra.hpp"

#include <random>

using namespace heisenberg;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> G;
  Eigen::MatrixXd A(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) A(i, j) = G(rng);
  return A;
}

}  // namespace

TEST_CASE("rank one and diagonal spectra") {
  Eigen::VectorXd u(4), v(3);
  u << 1, -2, 0.5, 3;
  v << 2, 0, -1;
  const Eigen::VectorXd s = singular_values(u * v.transpose());
  CHECK(s(0) == doctest::Approx(u.norm() * v.norm()).epsilon(1e-14));
  CHECK(std::abs(s(1)) < 1e-14);
  CHECK(std::abs(s(2)) < 1e-14);

  Eigen::Matrix2d D = Eigen::Vector2d(3, 4).asDiagonal();
  const Eigen::VectorXd d = sorted_spectrum(singular_values(D));
  CHECK(d(0) == doctest::Approx(4));
  CHECK(d(1) == doctest::Approx(3));
  CHECK(schatten_norm(d, 2) == doctest::Approx(5).epsilon(1e-15));
  CHECK(schatten_norm(d, INFINITY) == 4);
  CHECK(schatten_norm(d, 400) == doctest::Approx(4).epsilon(1e-12));
  CHECK(schatten_weak(d, 2) == doctest::Approx(std::max(4.0, std::sqrt(2.0) * 3)));
  CHECK_THROWS(schatten_norm(d, 0));
  CHECK_THROWS(schatten_weak(d, -1));
}

TEST_CASE("frobenius identity on random matrices") {
  const Eigen::MatrixXd A = random_matrix(50, 50, 3);
  const Eigen::VectorXd s = singular_values(A);
  double fro = 0;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) fro += A(i, j) * A(i, j);
  CHECK(schatten_power_sum(s, 2) == doctest::Approx(fro).epsilon(1e-10));
  CHECK(schatten_norm(s, 2) == doctest::Approx(std::sqrt(fro)).epsilon(1e-10));

  Eigen::MatrixXcd C = random_matrix(20, 30, 4).cast<std::complex<double>>();
  C += std::complex<double>(0, 1) * random_matrix(20, 30, 5);
  CHECK(schatten_power_sum(singular_values(C), 2) == doctest::Approx(C.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("schatten norms are nonincreasing in p and dominate the weak norm") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const Eigen::VectorXd s = singular_values(random_matrix(15, 12, 100 + seed));
    double prev = INFINITY;
    for (double p : {0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0}) {
      const double v = schatten_norm(s, p);
      CHECK(v <= prev * (1 + 1e-14));
      CHECK(schatten_weak(s, p) <= v * (1 + 1e-14));
      prev = v;
    }
    CHECK(schatten_norm(s, INFINITY) <= prev);
  }
}

TEST_CASE("spectrum is invariant under permutations") {
  const Eigen::MatrixXd A = random_matrix(30, 30, 9);
  std::mt19937_64 rng(1);
  Eigen::PermutationMatrix<Eigen::Dynamic> P(30), R(30);
  P.setIdentity();
  R.setIdentity();
  std::shuffle(P.indices().data(), P.indices().data() + 30, rng);
  std::shuffle(R.indices().data(), R.indices().data() + 30, rng);
  const Eigen::VectorXd s = singular_values(A);
  const Eigen::VectorXd t = singular_values(Eigen::MatrixXd(P * A * R));
  CHECK((s - t).cwiseAbs().maxCoeff() <= 1e-10 * s(0));
}

TEST_CASE("non-finite input is rejected") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(3, 3);
  A(1, 2) = NAN;
  CHECK_THROWS(singular_values(A));
}

TEST_CASE("report serialization") {
  Eigen::VectorXd s(3);
  s << 1, 3, 2;
  const SpectrumReport r = spectrum_report(s, {2, 4}, "abc");
  CHECK(r.singular_values(0) == 3);
  CHECK(r.singular_values(2) == 1);
  const auto j = r.to_json(2);
  CHECK(j["singular_values"].size() == 2);
  CHECK(j["source_hash"] == "abc");
  CHECK(r.to_csv().rfind("index,singular_value\n1,3\n", 0) == 0);
}

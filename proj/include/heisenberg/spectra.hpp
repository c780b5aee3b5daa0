// Singular values, Schatten and weak-Schatten norms.
#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace heisenberg {

/// Full singular spectrum, nonincreasing.
template <typename Derived>
Eigen::VectorXd singular_values(const Eigen::MatrixBase<Derived>& A) {
  if (!A.allFinite()) throw std::invalid_argument("singular_values: non-finite entries");
  using Scalar = typename Derived::Scalar;
  if (A.size() == 0) return Eigen::VectorXd();
  Eigen::BDCSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(A.derived(), 0);
  return svd.singularValues();
}

/// Nonnegative values sorted nonincreasing; tiny negative rounding is clipped.
Eigen::VectorXd sorted_spectrum(Eigen::VectorXd s);

/// (sum s_k^p)^{1/p}; p = infinity gives s_1.
double schatten_norm(const Eigen::VectorXd& s, double p);
/// max_k k^{1/p} s_k.
double schatten_weak(const Eigen::VectorXd& s, double p);
/// sum s_k^p.
double schatten_power_sum(const Eigen::VectorXd& s, double p);

struct SpectrumReport {
  Eigen::VectorXd singular_values;
  std::map<double, double> schatten;
  std::map<double, double> weak_schatten;
  std::string source_hash;

  nlohmann::ordered_json to_json(int max_values = -1) const;
  /// One row per singular value: index,value.
  std::string to_csv() const;
};

SpectrumReport spectrum_report(Eigen::VectorXd singular_values, const std::vector<double>& ps, std::string source_hash);

}  // namespace heisenberg

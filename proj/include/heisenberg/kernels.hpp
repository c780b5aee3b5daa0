// Convolution kernels on H^n: heat, Riesz, Cauchy-Szego and second-order transforms.
//
// Every kernel here is homogeneous of degree -(2n+2). With d = d_K(g) and the Koranyi
// angle phi in [-pi/2, pi/2], e^{i phi} = (|z|^2 + i t) / d^2, each kernel reduces to
// a few functions of phi times polynomials in z / d.
#pragma once

#include "heisenberg/group.hpp"
#include "heisenberg/quadrature.hpp"

#include <Eigen/Core>

#include <complex>
#include <memory>
#include <string>
#include <vector>

namespace heisenberg {

using cdouble = std::complex<double>;

enum class KernelKind { riesz, cauchy_szego, second_order_T, second_order_XX };

struct KernelSpec {
  KernelKind kind = KernelKind::riesz;
  int n = 1;
  int ell = 1;                // riesz index 1..2n
  int j = 1, k = 2;           // second_order_XX indices 1..2n
  double cs_constant = 1.0;   // Cauchy-Szego constant c

  static KernelSpec riesz(int ell, int n = 1) { return {KernelKind::riesz, n, ell, 1, 2, 1.0}; }
  static KernelSpec cauchy_szego(double c = 1.0, int n = 1) { return {KernelKind::cauchy_szego, n, 1, 1, 2, c}; }
  static KernelSpec second_order_T(int n = 1) { return {KernelKind::second_order_T, n, 1, 1, 2, 1.0}; }
  static KernelSpec second_order_XX(int j, int k, int n = 1) { return {KernelKind::second_order_XX, n, 1, j, k, 1.0}; }

  bool is_complex() const { return kind == KernelKind::cauchy_szego; }
  std::string name() const;
  void validate() const;
};

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

struct QuadratureConfig {
  double lambda_cutoff = 0.0;  // 0 selects the smallest cutoff with tail below abs_tol
  int lambda_nodes = 4000;     // cap on adaptive subintervals along lambda
  /// The h-integral is done in closed form through int_0^inf h^{-s-1} e^{-W/h} dh =
  /// Gamma(s) W^{-s}; "log" (h = e^u) is the brute-force nested alternative.
  std::string h_substitution = "gamma_closed_form";
  int h_nodes = 4000;
  double abs_tol = 1e-13;
  double rel_tol = 1e-10;

  double cutoff(int n) const;
  QuadratureOptions options() const { return {abs_tol, rel_tol, lambda_nodes}; }
};

/// Koranyi radius and angle of g.
struct KoranyiPolar {
  double d;
  double phi;
};
KoranyiPolar koranyi_polar(const Point& g);

/// int_R sech^p(mu) dmu, closed form.
double sech_power_integral(int p);

/// Heat kernel p_h(g).
double heat_kernel(const Point& g, double h, const QuadratureConfig& cfg = {});

/// Riesz kernel K_ell by lambda-quadrature on the real axis (h-integral in closed form).
double riesz_kernel(int ell, const Point& g, const QuadratureConfig& cfg = {});

/// Angular profiles (A, B) with K_ell = d^{-(2n+3)} (x_ell A + y_ell B) for ell <= n and
/// K_{n+ell} = d^{-(2n+3)} (y_ell A - x_ell B). Computed on the contour Im lambda = phi.
Eigen::Vector2d riesz_profiles(double phi, int n, const QuadratureConfig& cfg = {});
double riesz_from_profiles(int ell, const Point& g, const Eigen::Vector2d& AB);

cdouble cauchy_szego_kernel(const Point& g, double c = 1.0);

/// C_1 = Gamma(n) / (8 pi^{n+1}) and C_2 = -n i C_1.
double constant_C1(int n);
cdouble constant_C2(int n);

/// F(phi) = int_R sech^{n+1}(lambda) sinh(lambda + i phi) d lambda by quadrature.
cdouble second_order_F(double phi, int n, const QuadratureConfig& cfg = {});
/// K = C_2 F d^{-(2n+2)} with F by quadrature.
double second_order_T_kernel(const Point& g, const QuadratureConfig& cfg = {});
/// Parity-reduced closed form n! I_n t / (8 pi^{n+1} d^{2n+4}); for n = 1, t / (8 pi d^6).
double closed_form_T_kernel(const Point& g);

/// Kernel of X_a X_b (-Delta)^{-1} away from the origin, in closed form (parity
/// reduction of the shifted subordination integral).
double second_order_XX_kernel(int a, int b, const Point& g);
/// Same kernel by lambda-quadrature of the subordination integrand on the real axis.
double second_order_XX_quadrature(int a, int b, const Point& g, const QuadratureConfig& cfg = {});

/// Angular samples of a kernel on the Koranyi sphere, reconstructed by cubic interpolation
/// in phi and extended by homogeneity.
class SphereTable {
 public:
  SphereTable() = default;
  SphereTable(KernelSpec spec, QuadratureConfig cfg, int nodes);

  const KernelSpec& spec() const { return spec_; }
  const QuadratureConfig& config() const { return cfg_; }
  int nodes() const { return static_cast<int>(phi_.size()); }
  int profiles() const { return static_cast<int>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  std::string build_hash() const;

  /// Interpolated profile vector at phi.
  Eigen::VectorXd profile(double phi) const;
  /// Same, written to out[0 .. profiles()).
  void profile_into(double phi, double* out) const;
  double operator()(const Point& g) const;

  void save(const std::string& dir) const;
  static SphereTable load(const std::string& dir, const KernelSpec& spec, const QuadratureConfig& cfg, int nodes);
  /// Load a matching cache from dir, or build it and write it there. Empty dir: build only.
  static std::shared_ptr<const SphereTable> load_or_build(const std::string& dir, const KernelSpec& spec,
                                                          const QuadratureConfig& cfg, int nodes);
  static std::string file_stem(const KernelSpec& spec, int nodes);

 private:
  KernelSpec spec_;
  QuadratureConfig cfg_;
  std::vector<double> phi_;
  Eigen::MatrixXd values_;  // nodes x profiles
};

/// Evaluation front end used by the commutator: tables where they help, closed forms
/// elsewhere. Refuses the origin.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(KernelSpec spec, std::shared_ptr<const SphereTable> table = nullptr);
  static KernelEvaluator make(const KernelSpec& spec, const QuadratureConfig& cfg = {}, const std::string& cache_dir = "",
                              int nodes = 2049);

  const KernelSpec& spec() const { return spec_; }
  bool is_complex() const { return spec_.is_complex(); }
  double operator()(const Point& g) const;
  cdouble complex_value(const Point& g) const;

 private:
  KernelSpec spec_;
  std::shared_ptr<const SphereTable> table_;
};

/// Direct evaluation of any real kernel kind (quadrature where needed).
double kernel_direct(const KernelSpec& spec, const Point& g, const QuadratureConfig& cfg = {});

}  // namespace heisenberg

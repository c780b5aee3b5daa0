#include "heisenberg/kernels.hpp"

#include "heisenberg/io.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace heisenberg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// lambda coth(lambda), lambda / sinh(lambda), stable at 0.
double lcoth(double l) { return std::abs(l) < 1e-8 ? 1.0 + l * l / 3.0 : l / std::tanh(l); }
double lsinh(double l) { return std::abs(l) < 1e-8 ? 1.0 - l * l / 6.0 : l / std::sinh(l); }

// (J u)_a for the 1-based horizontal index a.
double Ju(const Point& g, int a) {
  const int n = g.dim();
  return a <= n ? g.y()(a - 1) : -g.x()(a - n - 1);
}

// J_{ba} with J = [[0, I], [-I, 0]], 1-based.
double Jentry(int n, int b, int a) {
  if (b <= n && a == b + n) return 1.0;
  if (b > n && a == b - n) return -1.0;
  return 0.0;
}

void check_origin(const Point& g, const char* who) {
  if (g.horizontal_norm2() == 0.0 && g.t() == 0.0) throw std::domain_error(std::string(who) + ": kernel undefined at the origin");
}

void check_field(int ell, int n, const char* who) {
  if (ell < 1 || ell > 2 * n) throw std::out_of_range(std::string(who) + ": index must be in [1, 2n]");
}

}  // namespace

const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::riesz: return "riesz";
    case KernelKind::cauchy_szego: return "cauchy_szego";
    case KernelKind::second_order_T: return "second_order_T";
    case KernelKind::second_order_XX: return "second_order_XX";
  }
  return "?";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  for (KernelKind k : {KernelKind::riesz, KernelKind::cauchy_szego, KernelKind::second_order_T, KernelKind::second_order_XX}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown kernel kind: " + s);
}

std::string KernelSpec::name() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == KernelKind::riesz) os << "_" << ell;
  if (kind == KernelKind::second_order_XX) os << "_" << j << "_" << k;
  if (kind == KernelKind::cauchy_szego) os << "_c" << cs_constant;
  os << "_n" << n;
  return os.str();
}

void KernelSpec::validate() const {
  if (n < 1 || n > kMaxN) throw DimensionError("kernel spec: n out of range");
  if (kind == KernelKind::riesz) check_field(ell, n, "riesz");
  if (kind == KernelKind::second_order_XX) {
    check_field(j, n, "second_order_XX");
    check_field(k, n, "second_order_XX");
  }
}

double QuadratureConfig::cutoff(int n) const {
  if (lambda_cutoff > 0) return lambda_cutoff;
  // (2 L)^n e^{-n L} bounds the (lambda / sinh lambda)^n factor.
  const double target = std::log(1.0 / abs_tol) + 8.0;
  double L = 5.0;
  while (n * (L - std::log(2.0 * L)) < target) L += 0.5;
  return L;
}

KoranyiPolar koranyi_polar(const Point& g) {
  const double z2 = g.horizontal_norm2();
  const double d2 = std::hypot(z2, g.t());
  return {std::sqrt(d2), std::atan2(g.t(), z2)};
}

double sech_power_integral(int p) {
  if (p < 1) throw std::invalid_argument("sech_power_integral: p must be positive");
  double v = p % 2 == 1 ? kPi : 2.0;
  for (int q = p % 2 == 1 ? 1 : 2; q < p; q += 2) v *= static_cast<double>(q) / (q + 1);
  return v;
}

double heat_kernel(const Point& g, double h, const QuadratureConfig& cfg) {
  if (!(h > 0)) throw std::invalid_argument("heat_kernel: h must be positive");
  const int n = g.dim();
  const double a = g.horizontal_norm2() / (4 * h);
  const double b = g.t() / (4 * h);
  auto f = [&](double l) { return std::exp(-a * lcoth(l)) * std::cos(b * l) * std::pow(lsinh(l), n); };
  const double I = integrate(f, 0.0, cfg.cutoff(n), cfg.options()).value;
  return I / std::pow(4 * kPi * h, n + 1);
}

double riesz_kernel(int ell, const Point& g, const QuadratureConfig& cfg) {
  const int n = g.dim();
  check_field(ell, n, "riesz_kernel");
  check_origin(g, "riesz_kernel");
  const double z2 = g.horizontal_norm2();
  if (z2 == 0.0) return 0.0;
  const double s = n + 1.5;
  const double c = std::tgamma(s) / (2 * std::sqrt(kPi) * std::pow(4 * kPi, n + 1));
  const int i = (ell - 1) % n;
  const double x = g.x()(i), y = g.y()(i), t = g.t();
  const bool horizontal_x = ell <= n;
  auto f = [&](double l) {
    const double lc = lcoth(l);
    const cdouble W = 0.25 * cdouble(z2 * lc, -l * t);
    const cdouble minus_XW =
        horizontal_x ? 0.25 * cdouble(-2 * x * lc, 2 * l * y) : 0.25 * cdouble(-2 * y * lc, -2 * l * x);
    return (minus_XW * std::pow(W, -s)).real() * std::pow(lsinh(l), n);
  };
  return 2 * c * integrate(f, 0.0, cfg.cutoff(n), cfg.options()).value;
}

Eigen::Vector2d riesz_profiles(double phi, int n, const QuadratureConfig& cfg) {
  const double s = n + 1.5;
  const double c = std::tgamma(s) / (2 * std::sqrt(kPi) * std::pow(4 * kPi, n + 1));
  const double pre = -c * std::pow(4.0, s);
  auto S = [](const cdouble& l) {
    const cdouble r = std::abs(l) < 1e-6 ? 1.0 + l * l / 6.0 : std::sinh(l) / l;
    return std::sqrt(r);
  };
  auto fa = [&](double mu) {
    const cdouble l(mu, phi);
    return (S(l) * std::cosh(l)).real() * std::pow(1.0 / std::cosh(mu), s);
  };
  auto fb = [&](double mu) {
    const cdouble l(mu, phi);
    return (S(l) * std::sinh(l)).imag() * std::pow(1.0 / std::cosh(mu), s);
  };
  const double L = cfg.cutoff(n);
  return {pre * integrate(fa, 0.0, L, cfg.options()).value, pre * integrate(fb, 0.0, L, cfg.options()).value};
}

double riesz_from_profiles(int ell, const Point& g, const Eigen::Vector2d& AB) {
  const int n = g.dim();
  const double z2 = g.horizontal_norm2();
  const double d = std::sqrt(std::hypot(z2, g.t()));
  const double scale = std::pow(d, -(2 * n + 3));
  if (ell <= n) return scale * (g.x()(ell - 1) * AB(0) + g.y()(ell - 1) * AB(1));
  return scale * (g.y()(ell - n - 1) * AB(0) - g.x()(ell - n - 1) * AB(1));
}

cdouble cauchy_szego_kernel(const Point& g, double c) {
  check_origin(g, "cauchy_szego_kernel");
  return c / std::pow(cdouble(g.horizontal_norm2(), g.t()), g.dim() + 1);
}

double constant_C1(int n) { return std::tgamma(n) / (8 * std::pow(kPi, n + 1)); }
cdouble constant_C2(int n) { return cdouble(0.0, -n * constant_C1(n)); }

cdouble second_order_F(double phi, int n, const QuadratureConfig& cfg) {
  auto f = [&](double l) { return std::pow(1.0 / std::cosh(l), n + 1) * std::sinh(cdouble(l, phi)); };
  const double L = cfg.cutoff(n);
  return integrate<cdouble>(f, -L, L, cfg.options()).value;
}

double second_order_T_kernel(const Point& g, const QuadratureConfig& cfg) {
  check_origin(g, "second_order_T_kernel");
  const int n = g.dim();
  const KoranyiPolar p = koranyi_polar(g);
  return (constant_C2(n) * second_order_F(p.phi, n, cfg)).real() * std::pow(p.d, -(2 * n + 2));
}

double closed_form_T_kernel(const Point& g) {
  check_origin(g, "closed_form_T_kernel");
  const int n = g.dim();
  const double z2 = g.horizontal_norm2();
  const double d2 = std::hypot(z2, g.t());
  return std::tgamma(n + 1) * sech_power_integral(n) * g.t() / (8 * std::pow(kPi, n + 1) * std::pow(d2, n + 2));
}

double second_order_XX_kernel(int a, int b, const Point& g) {
  const int n = g.dim();
  check_field(a, n, "second_order_XX_kernel");
  check_field(b, n, "second_order_XX_kernel");
  check_origin(g, "second_order_XX_kernel");
  const KoranyiPolar p = koranyi_polar(g);
  const double In = sech_power_integral(n), In2 = sech_power_integral(n + 2);
  const double c = std::cos(p.phi), s = std::sin(p.phi);
  const double Qcc = std::cos(2 * p.phi) * In + s * s * In2;
  const double Qss = Qcc - In2;
  const double Qcs = std::sin(2 * p.phi) * (2 * In - In2);
  const double ua = g.u(a - 1), ub = g.u(b - 1), va = Ju(g, a), vb = Ju(g, b);
  const double d2 = p.d * p.d;
  const double first = -std::tgamma(n + 1) * (2 * (a == b ? 1.0 : 0.0) * c + 2 * Jentry(n, b, a) * s) * In;
  const double second = std::tgamma(n + 2) * (4 * ua * ub * Qcc + 2 * Qcs * (ua * vb + va * ub) - 4 * va * vb * Qss) / d2;
  return (first + second) / (8 * std::pow(kPi, n + 1) * std::pow(d2, n + 1));
}

double second_order_XX_quadrature(int a, int b, const Point& g, const QuadratureConfig& cfg) {
  const int n = g.dim();
  check_field(a, n, "second_order_XX_quadrature");
  check_field(b, n, "second_order_XX_quadrature");
  check_origin(g, "second_order_XX_quadrature");
  const double z2 = g.horizontal_norm2();
  if (z2 == 0.0) throw std::domain_error("second_order_XX_quadrature: real-axis route needs z != 0");
  const double ua = g.u(a - 1), ub = g.u(b - 1), va = Ju(g, a), vb = Ju(g, b);
  const double delta = a == b ? 1.0 : 0.0, J = Jentry(n, b, a);
  const double g1 = std::tgamma(n + 1), g2 = std::tgamma(n + 2);
  auto f = [&](double l) {
    const double lc = lcoth(l);
    const cdouble W = 0.25 * cdouble(z2 * lc, -l * g.t());
    const cdouble XaW = 0.25 * cdouble(2 * ua * lc, -2 * l * va);
    const cdouble XbW = 0.25 * cdouble(2 * ub * lc, -2 * l * vb);
    const cdouble XXW = 0.25 * cdouble(2 * delta * lc, -2 * l * J);
    const cdouble Wi = 1.0 / W;
    const cdouble Wn1 = std::pow(Wi, n + 1);
    return ((-XXW * g1 * Wn1 + XaW * XbW * g2 * Wn1 * Wi)).real() * std::pow(lsinh(l), n);
  };
  return 2 * integrate(f, 0.0, cfg.cutoff(n), cfg.options()).value / (2 * std::pow(4 * kPi, n + 1));
}

// ---------------------------------------------------------------------------------------
// Sphere tables

namespace {

int profile_count(const KernelSpec& spec) {
  switch (spec.kind) {
    case KernelKind::riesz: return 2;
    case KernelKind::second_order_T: return 1;
    default: throw std::invalid_argument("SphereTable: kernel kind " + std::string(to_string(spec.kind)) + " is closed form");
  }
}

Eigen::VectorXd profile_at(const KernelSpec& spec, const QuadratureConfig& cfg, double phi) {
  if (spec.kind == KernelKind::riesz) return riesz_profiles(phi, spec.n, cfg);
  Eigen::VectorXd v(1);
  v(0) = (constant_C2(spec.n) * second_order_F(phi, spec.n, cfg)).real();
  return v;
}

// Profiles do not depend on the Riesz index, so the cache key drops it.
KernelSpec table_key(KernelSpec spec) {
  spec.ell = 1;
  return spec;
}

}  // namespace

SphereTable::SphereTable(KernelSpec spec, QuadratureConfig cfg, int nodes) : spec_(spec), cfg_(std::move(cfg)) {
  spec_.validate();
  if (nodes < 4) throw std::invalid_argument("SphereTable: need at least 4 nodes");
  const int m = profile_count(spec_);
  phi_.resize(nodes);
  for (int i = 0; i < nodes; ++i) phi_[i] = -kPi / 2 + kPi * i / (nodes - 1);
  values_.resize(nodes, m);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nodes; ++i) values_.row(i) = profile_at(spec_, cfg_, phi_[i]).transpose();
}

std::string SphereTable::build_hash() const {
  const KernelSpec key = table_key(spec_);
  std::ostringstream os;
  os << "sphere-table-v1|" << to_string(key.kind) << "|n=" << key.n << "|nodes=" << phi_.size()
     << "|cut=" << cfg_.cutoff(key.n) << "|abs=" << cfg_.abs_tol << "|rel=" << cfg_.rel_tol
     << "|lnodes=" << cfg_.lambda_nodes << "|h=" << cfg_.h_substitution;
  return fnv1a_hex(os.str());
}

void SphereTable::profile_into(double phi, double* out) const {
  const int N = nodes();
  const double step = kPi / (N - 1);
  const double pos = (phi + kPi / 2) / step;
  int i0 = static_cast<int>(std::floor(pos)) - 1;
  i0 = std::clamp(i0, 0, N - 4);
  const double u = pos - i0;  // position relative to node i0, nominally in [1, 2]
  // Cubic Lagrange weights on nodes i0..i0+3 at offsets 0..3.
  const double w0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
  const double w1 = u * (u - 2) * (u - 3) / 2.0;
  const double w2 = -u * (u - 1) * (u - 3) / 2.0;
  const double w3 = u * (u - 1) * (u - 2) / 6.0;
  for (Eigen::Index c = 0; c < values_.cols(); ++c) {
    const double* col = values_.col(c).data() + i0;
    out[c] = w0 * col[0] + w1 * col[1] + w2 * col[2] + w3 * col[3];
  }
}

Eigen::VectorXd SphereTable::profile(double phi) const {
  Eigen::VectorXd v(profiles());
  profile_into(phi, v.data());
  return v;
}

double SphereTable::operator()(const Point& g) const {
  check_origin(g, "SphereTable");
  const KoranyiPolar p = koranyi_polar(g);
  const Eigen::VectorXd v = profile(p.phi);
  if (spec_.kind == KernelKind::riesz) return riesz_from_profiles(spec_.ell, g, v.head<2>());
  return v(0) * std::pow(p.d, -(2 * g.dim() + 2));
}

std::string SphereTable::file_stem(const KernelSpec& spec, int nodes) {
  const KernelSpec key = table_key(spec);
  return std::string(to_string(key.kind)) + "_n" + std::to_string(key.n) + "_phi" + std::to_string(nodes);
}

void SphereTable::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const std::string stem = (std::filesystem::path(dir) / file_stem(spec_, nodes())).string();
  nlohmann::ordered_json meta;
  meta["format"] = "heisenberg-sphere-table";
  meta["version"] = 1;
  meta["spec"] = {{"kind", to_string(spec_.kind)}, {"n", spec_.n}};
  meta["grid"] = {{"parameter", "koranyi_angle_phi"},
                  {"range", {-kPi / 2, kPi / 2}},
                  {"nodes", nodes()},
                  {"profiles", profiles()},
                  {"layout", "row-major nodes x profiles, little-endian float64"}};
  meta["quadrature"] = {{"lambda_cutoff", cfg_.cutoff(spec_.n)},
                        {"lambda_nodes", cfg_.lambda_nodes},
                        {"h_substitution", cfg_.h_substitution},
                        {"h_nodes", cfg_.h_nodes},
                        {"abs_tol", cfg_.abs_tol},
                        {"rel_tol", cfg_.rel_tol}};
  meta["build_hash"] = build_hash();
  std::ofstream(stem + ".json") << meta.dump(2) << "\n";
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = values_;
  write_f64_le(stem + ".f64", rm.data(), static_cast<std::size_t>(rm.size()));
}

SphereTable SphereTable::load(const std::string& dir, const KernelSpec& spec, const QuadratureConfig& cfg, int nodes) {
  const std::string stem = (std::filesystem::path(dir) / file_stem(spec, nodes)).string();
  std::ifstream in(stem + ".json");
  if (!in) throw std::runtime_error("SphereTable::load: missing " + stem + ".json");
  const nlohmann::json meta = nlohmann::json::parse(in);
  SphereTable t;
  t.spec_ = spec;
  t.cfg_ = cfg;
  t.phi_.resize(nodes);
  for (int i = 0; i < nodes; ++i) t.phi_[i] = -kPi / 2 + kPi * i / (nodes - 1);
  if (meta.at("build_hash").get<std::string>() != t.build_hash()) {
    throw std::runtime_error("SphereTable::load: cache was built with a different configuration");
  }
  const int m = profile_count(spec);
  if (meta.at("grid").at("nodes").get<int>() != nodes || meta.at("grid").at("profiles").get<int>() != m) {
    throw std::runtime_error("SphereTable::load: grid shape mismatch");
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(nodes, m);
  read_f64_le(stem + ".f64", rm.data(), static_cast<std::size_t>(rm.size()));
  t.values_ = rm;
  return t;
}

std::shared_ptr<const SphereTable> SphereTable::load_or_build(const std::string& dir, const KernelSpec& spec,
                                                              const QuadratureConfig& cfg, int nodes) {
  if (!dir.empty()) {
    try {
      return std::make_shared<const SphereTable>(load(dir, spec, cfg, nodes));
    } catch (const std::exception&) {
    }
  }
  auto t = std::make_shared<SphereTable>(spec, cfg, nodes);
  if (!dir.empty()) t->save(dir);
  return t;
}

// ---------------------------------------------------------------------------------------

KernelEvaluator::KernelEvaluator(KernelSpec spec, std::shared_ptr<const SphereTable> table)
    : spec_(spec), table_(std::move(table)) {
  spec_.validate();
  if ((spec_.kind == KernelKind::riesz || spec_.kind == KernelKind::second_order_T) && !table_) {
    throw std::invalid_argument("KernelEvaluator: this kernel kind needs a sphere table");
  }
}

KernelEvaluator KernelEvaluator::make(const KernelSpec& spec, const QuadratureConfig& cfg, const std::string& cache_dir,
                                      int nodes) {
  std::shared_ptr<const SphereTable> table;
  if (spec.kind == KernelKind::riesz || spec.kind == KernelKind::second_order_T) {
    table = SphereTable::load_or_build(cache_dir, spec, cfg, nodes);
  }
  return KernelEvaluator(spec, table);
}

double KernelEvaluator::operator()(const Point& g) const {
  switch (spec_.kind) {
    case KernelKind::riesz:
    case KernelKind::second_order_T: {
      const int n = g.dim();
      const double z2 = g.horizontal_norm2(), t = g.t();
      const double d2 = std::sqrt(z2 * z2 + t * t);
      check_origin(g, to_string(spec_.kind));
      double prof[2];
      table_->profile_into(std::atan2(t, z2), prof);
      double dq = d2;  // d^{2n+2}
      for (int i = 0; i < n; ++i) dq *= d2;
      if (spec_.kind == KernelKind::second_order_T) return prof[0] / dq;
      const double scale = 1.0 / (dq * std::sqrt(d2));
      const int l = spec_.ell;
      if (l <= n) return scale * (g.x()(l - 1) * prof[0] + g.y()(l - 1) * prof[1]);
      return scale * (g.y()(l - n - 1) * prof[0] - g.x()(l - n - 1) * prof[1]);
    }
    case KernelKind::second_order_XX: return second_order_XX_kernel(spec_.j, spec_.k, g);
    case KernelKind::cauchy_szego: throw std::logic_error("KernelEvaluator: Cauchy-Szego kernel is complex");
  }
  return 0.0;
}

cdouble KernelEvaluator::complex_value(const Point& g) const {
  if (spec_.kind == KernelKind::cauchy_szego) return cauchy_szego_kernel(g, spec_.cs_constant);
  return (*this)(g);
}

double kernel_direct(const KernelSpec& spec, const Point& g, const QuadratureConfig& cfg) {
  switch (spec.kind) {
    case KernelKind::riesz: return riesz_kernel(spec.ell, g, cfg);
    case KernelKind::second_order_T: return second_order_T_kernel(g, cfg);
    case KernelKind::second_order_XX: return second_order_XX_kernel(spec.j, spec.k, g);
    case KernelKind::cauchy_szego: throw std::logic_error("kernel_direct: Cauchy-Szego kernel is complex");
  }
  return 0.0;
}

}  // namespace heisenberg

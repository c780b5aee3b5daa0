// Smooth symbol families on H^n and the left-invariant vector fields acting on them.
#pragma once

#include "heisenberg/group.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace heisenberg {

class NotDifferentiable : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Euclidean partials (d/dx_1..d/dx_n, d/dy_1..d/dy_n, d/dt).
using Gradient = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2 * kMaxN + 1, 1>;

/// (max(0, 1 - d_K(center^{-1} g)^2 / radius^2))^3, scaled by amplitude.
/// Compact support, C^2 away from its center (d_K^2 has a kink on the t-axis there).
struct Bump {
  Point center;
  double radius = 1.0;
  double amplitude = 1.0;
};

/// coeff * prod u_i^{p_i} * t^{p_t}; powers has length 2n + 1.
struct Monomial {
  double coeff = 1.0;
  Eigen::VectorXi powers;
};

struct Constant {
  double value = 0.0;
};

using SymbolTerm = std::variant<Bump, Monomial, Constant>;

/// A finite sum of family members. Value type; cheap to copy.
class Symbol {
 public:
  explicit Symbol(int n) : n_(n) {}
  Symbol(int n, SymbolTerm term) : n_(n) { add(std::move(term)); }

  static Symbol bump(const Point& center, double radius, double amplitude = 1.0) {
    if (!(radius > 0)) throw std::invalid_argument("bump radius must be positive");
    return Symbol(center.dim(), Bump{center, radius, amplitude});
  }
  static Symbol constant(int n, double value) { return Symbol(n, Constant{value}); }
  static Symbol monomial(int n, double coeff, Eigen::VectorXi powers) {
    if (powers.size() != 2 * n + 1) throw DimensionError("monomial powers must have length 2n+1");
    return Symbol(n, Monomial{coeff, std::move(powers)});
  }

  Symbol& add(SymbolTerm term) {
    terms_.push_back(std::move(term));
    return *this;
  }
  Symbol operator+(const Symbol& other) const {
    if (other.n_ != n_) throw DimensionError("symbol sum: dimension mismatch");
    Symbol out = *this;
    for (const auto& t : other.terms_) out.terms_.push_back(t);
    return out;
  }

  int dim() const { return n_; }
  const std::vector<SymbolTerm>& terms() const { return terms_; }

  bool is_constant() const {
    for (const auto& t : terms_) {
      if (!std::holds_alternative<Constant>(t)) return false;
    }
    return true;
  }

  double operator()(const Point& g) const {
    double v = 0.0;
    for (const auto& term : terms_) v += std::visit([&](const auto& f) { return value_of(f, g); }, term);
    return v;
  }

  /// Analytic Euclidean gradient. Throws NotDifferentiable where a term has no derivative.
  Gradient gradient(const Point& g) const {
    Gradient out = Gradient::Zero(2 * n_ + 1);
    for (const auto& term : terms_) out += std::visit([&](const auto& f) { return gradient_of(f, g); }, term);
    return out;
  }

  /// Symbol composed with a left translation: g -> b(h g).
  Symbol translated(const Point& h) const;
  /// Symbol composed with a dilation: g -> b(delta_r g).
  Symbol dilated(double r) const;

  /// Radius (Koranyi, around the returned center) outside which every bump term vanishes.
  /// Empty when some term is not compactly supported.
  std::optional<std::pair<Point, double>> support_ball() const;

 private:
  static double value_of(const Constant& c, const Point&) { return c.value; }
  static double value_of(const Monomial& m, const Point& g) {
    const int n = g.dim();
    double v = m.coeff;
    for (int i = 0; i < 2 * n; ++i) v *= std::pow(g.u(i), m.powers(i));
    return v * std::pow(g.t(), m.powers(2 * n));
  }
  static double value_of(const Bump& b, const Point& g) {
    const Point q = left_quotient(b.center, g);
    const double z2 = q.horizontal_norm2();
    const double dk2 = std::sqrt(z2 * z2 + q.t() * q.t());
    const double u = 1.0 - dk2 / (b.radius * b.radius);
    return u > 0 ? b.amplitude * u * u * u : 0.0;
  }

  Gradient gradient_of(const Constant&, const Point&) const { return Gradient::Zero(2 * n_ + 1); }
  Gradient gradient_of(const Monomial& m, const Point& g) const {
    const int n = g.dim();
    Gradient out(2 * n + 1);
    for (int k = 0; k <= 2 * n; ++k) {
      const int p = m.powers(k);
      if (p == 0) {
        out(k) = 0.0;
        continue;
      }
      double v = m.coeff * p;
      for (int i = 0; i <= 2 * n; ++i) {
        const double c = i < 2 * n ? g.u(i) : g.t();
        v *= std::pow(c, i == k ? p - 1 : m.powers(i));
      }
      out(k) = v;
    }
    return out;
  }
  Gradient gradient_of(const Bump& b, const Point& g) const {
    const int n = g.dim();
    const Point q = left_quotient(b.center, g);
    const double z2 = q.horizontal_norm2();
    const double dk2 = std::sqrt(z2 * z2 + q.t() * q.t());
    const double s2 = b.radius * b.radius;
    const double u = 1.0 - dk2 / s2;
    Gradient out = Gradient::Zero(2 * n + 1);
    if (u <= 0) return out;
    if (dk2 == 0.0) throw NotDifferentiable("bump is not differentiable at its center");
    // d(dk2) = (z2 d(z2) + t_q d(t_q)) / dk2, with t_q = t - t0 + 2<x0, y> - 2<y0, x>.
    const double outer = -3.0 * b.amplitude * u * u / s2 / dk2;
    const Point& c = b.center;
    for (int i = 0; i < n; ++i) {
      out(i) = outer * (z2 * 2.0 * q.x()(i) + q.t() * (-2.0 * c.y()(i)));
      out(n + i) = outer * (z2 * 2.0 * q.y()(i) + q.t() * (2.0 * c.x()(i)));
    }
    out(2 * n) = outer * q.t();
    return out;
  }

  int n_;
  std::vector<SymbolTerm> terms_;
};

/// Central-difference Euclidean gradient with step h_fd.
inline Gradient finite_difference_gradient(const Symbol& b, const Point& g, double h_fd = 1e-5) {
  const int n = g.dim();
  Gradient out(2 * n + 1);
  for (int k = 0; k <= 2 * n; ++k) {
    Point plus = g, minus = g;
    if (k < n) {
      plus.x()(k) += h_fd;
      minus.x()(k) -= h_fd;
    } else if (k < 2 * n) {
      plus.y()(k - n) += h_fd;
      minus.y()(k - n) -= h_fd;
    } else {
      plus.t() += h_fd;
      minus.t() -= h_fd;
    }
    out(k) = (b(plus) - b(minus)) / (2 * h_fd);
  }
  return out;
}

/// Coefficients of the left-invariant field X_ell (1-based) against the Euclidean gradient:
///   X_ell     = d/dx_ell + 2 y_ell d/dt      (ell <= n)
///   X_{n+ell} = d/dy_ell - 2 x_ell d/dt      (Y_ell)
///   X_{2n+1}  = d/dt
inline Gradient field_coefficients(int ell, const Point& g) {
  const int n = g.dim();
  if (ell < 1 || ell > 2 * n + 1) throw std::out_of_range("field index must be in [1, 2n+1]");
  Gradient c = Gradient::Zero(2 * n + 1);
  if (ell == 2 * n + 1) {
    c(2 * n) = 1.0;
  } else if (ell <= n) {
    c(ell - 1) = 1.0;
    c(2 * n) = 2.0 * g.y()(ell - 1);
  } else {
    c(ell - 1) = 1.0;
    c(2 * n) = -2.0 * g.x()(ell - n - 1);
  }
  return c;
}

enum class Differentiation { analytic, finite_difference };

inline double apply_field(int ell, const Symbol& b, const Point& g,
                          Differentiation mode = Differentiation::analytic, double h_fd = 1e-5) {
  const Gradient grad = mode == Differentiation::analytic ? b.gradient(g) : finite_difference_gradient(b, g, h_fd);
  return field_coefficients(ell, g).dot(grad);
}

enum class TaylorVariant { plain, factorial };

struct TaylorResult {
  double approximation;
  double remainder;
};

/// First-order horizontal Taylor expansion of b around g0 evaluated at g.
/// `factorial` divides the k-th coefficient by k!, `plain` does not.
inline TaylorResult horizontal_taylor(const Symbol& b, const Point& g0, const Point& g,
                                      TaylorVariant variant = TaylorVariant::plain) {
  const int n = g0.dim();
  double approx = b(g0);
  double factorial = 1.0;
  for (int k = 1; k <= 2 * n; ++k) {
    factorial *= k;
    const double coeff = apply_field(k, b, g0);
    const double step = g.u(k - 1) - g0.u(k - 1);
    approx += (variant == TaylorVariant::factorial ? coeff / factorial : coeff) * step;
  }
  return {approx, b(g) - approx};
}

inline Symbol Symbol::translated(const Point& h) const {
  Symbol out(n_);
  for (const auto& term : terms_) {
    if (const auto* bp = std::get_if<Bump>(&term)) {
      out.add(Bump{multiply(inverse(h), bp->center), bp->radius, bp->amplitude});
    } else if (std::holds_alternative<Constant>(term)) {
      out.add(term);
    } else {
      throw std::invalid_argument("translated: monomials are not closed under translation");
    }
  }
  return out;
}

inline Symbol Symbol::dilated(double r) const {
  if (!(r > 0)) throw std::invalid_argument("dilated: r must be positive");
  Symbol out(n_);
  for (const auto& term : terms_) {
    if (const auto* bp = std::get_if<Bump>(&term)) {
      out.add(Bump{dilate(1.0 / r, bp->center), bp->radius / r, bp->amplitude});
    } else if (const auto* mp = std::get_if<Monomial>(&term)) {
      Monomial m = *mp;
      int degree = 0;
      for (int i = 0; i < 2 * n_; ++i) degree += m.powers(i);
      degree += 2 * m.powers(2 * n_);
      m.coeff *= std::pow(r, degree);
      out.add(m);
    } else {
      out.add(term);
    }
  }
  return out;
}

inline std::optional<std::pair<Point, double>> Symbol::support_ball() const {
  std::optional<std::pair<Point, double>> out;
  for (const auto& term : terms_) {
    if (const auto* bp = std::get_if<Bump>(&term)) {
      if (!out) {
        out = std::make_pair(bp->center, bp->radius);
      } else {
        // Koranyi is a quasi-norm with constant 1 triangle inequality on H^n.
        const double d = distance(MetricKind::koranyi, bp->center, out->first);
        out->second = std::max(out->second, d + bp->radius);
      }
    } else if (const auto* cp = std::get_if<Constant>(&term)) {
      if (cp->value != 0.0) return std::nullopt;
    } else {
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace heisenberg

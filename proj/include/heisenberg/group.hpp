// Heisenberg group H^n in real coordinates (x, y, t).
//
// Product:   (x, y, t)(x', y', t') = (x + x', y + y', t + t' + 2<y, x'> - 2<x, y'>)
// Dilation:  delta_r (x, y, t) = (r x, r y, r^2 t)
// Inverse:   (x, y, t)^{-1} = (-x, -y, -t)
//
// Everything here is header-only and templated on the scalar type so the same
// code serves double evaluation and higher-precision reference checks.
#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace heisenberg {

/// Largest supported n. Horizontal vectors live on the stack up to this size.
inline constexpr int kMaxN = 4;

template <typename Scalar>
using HVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxN, 1>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
class GroupElement {
 public:
  using Vector = HVector<Scalar>;

  GroupElement() : GroupElement(1) {}

  /// Identity of H^n.
  explicit GroupElement(int n) : x_(Vector::Zero(n)), y_(Vector::Zero(n)), t_(0) {
    if (n < 1 || n > kMaxN) {
      throw DimensionError("group dimension n must be in [1, " + std::to_string(kMaxN) + "]");
    }
  }

  GroupElement(Vector x, Vector y, Scalar t) : x_(std::move(x)), y_(std::move(y)), t_(t) {
    if (x_.size() != y_.size() || x_.size() < 1 || x_.size() > kMaxN) {
      throw DimensionError("x and y must have equal length in [1, kMaxN]");
    }
  }

  /// Convenience constructor for n = 1.
  static GroupElement make(Scalar x, Scalar y, Scalar t) {
    Vector vx(1), vy(1);
    vx << x;
    vy << y;
    return GroupElement(vx, vy, t);
  }

  int dim() const { return static_cast<int>(x_.size()); }
  const Vector& x() const { return x_; }
  const Vector& y() const { return y_; }
  Scalar t() const { return t_; }
  Vector& x() { return x_; }
  Vector& y() { return y_; }
  Scalar& t() { return t_; }

  /// |z|^2 = |x|^2 + |y|^2.
  Scalar horizontal_norm2() const { return x_.squaredNorm() + y_.squaredNorm(); }

  /// Horizontal coordinate u = (x_1..x_n, y_1..y_n), index 0-based.
  Scalar u(int i) const { return i < dim() ? x_(i) : y_(i - dim()); }

  template <typename Other>
  GroupElement<Other> cast() const {
    return GroupElement<Other>(x_.template cast<Other>(), y_.template cast<Other>(),
                               static_cast<Other>(t_));
  }

 private:
  Vector x_;
  Vector y_;
  Scalar t_;
};

using Point = GroupElement<double>;

enum class MetricKind { rho_max, gauge, koranyi };

inline const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::rho_max: return "rho_max";
    case MetricKind::gauge: return "gauge";
    case MetricKind::koranyi: return "koranyi";
  }
  return "?";
}

template <typename Scalar>
GroupElement<Scalar> multiply(const GroupElement<Scalar>& g, const GroupElement<Scalar>& h) {
  if (g.dim() != h.dim()) throw DimensionError("multiply: dimension mismatch");
  const Scalar twist = 2 * (g.y().dot(h.x()) - g.x().dot(h.y()));
  return GroupElement<Scalar>(g.x() + h.x(), g.y() + h.y(), g.t() + h.t() + twist);
}

template <typename Scalar>
GroupElement<Scalar> operator*(const GroupElement<Scalar>& g, const GroupElement<Scalar>& h) {
  return multiply(g, h);
}

template <typename Scalar>
GroupElement<Scalar> inverse(const GroupElement<Scalar>& g) {
  return GroupElement<Scalar>(-g.x(), -g.y(), -g.t());
}

/// h^{-1} g without forming the inverse explicitly.
template <typename Scalar>
GroupElement<Scalar> left_quotient(const GroupElement<Scalar>& h, const GroupElement<Scalar>& g) {
  if (g.dim() != h.dim()) throw DimensionError("left_quotient: dimension mismatch");
  const Scalar twist = 2 * (h.x().dot(g.y()) - h.y().dot(g.x()));
  return GroupElement<Scalar>(g.x() - h.x(), g.y() - h.y(), g.t() - h.t() + twist);
}

template <typename Scalar>
GroupElement<Scalar> dilate(Scalar lambda, const GroupElement<Scalar>& g) {
  if (!(lambda > 0)) throw std::invalid_argument("dilate: lambda must be positive");
  return GroupElement<Scalar>(lambda * g.x(), lambda * g.y(), lambda * lambda * g.t());
}

/// rho(z, t) = max(|z|, |t|^{1/2}).
template <typename Scalar>
Scalar rho(const GroupElement<Scalar>& g) {
  using std::abs;
  using std::max;
  using std::sqrt;
  return max(sqrt(g.horizontal_norm2()), sqrt(abs(g.t())));
}

/// Coordinate-max norm max(|x_i|, |y_i|, |t|^{1/2}).
template <typename Scalar>
Scalar gauge_norm(const GroupElement<Scalar>& g) {
  using std::abs;
  using std::max;
  using std::sqrt;
  Scalar m = sqrt(abs(g.t()));
  m = max(m, g.x().cwiseAbs().maxCoeff());
  m = max(m, g.y().cwiseAbs().maxCoeff());
  return m;
}

/// Koranyi norm (|z|^4 + t^2)^{1/4}.
template <typename Scalar>
Scalar koranyi_norm(const GroupElement<Scalar>& g) {
  using std::sqrt;
  const Scalar z2 = g.horizontal_norm2();
  return sqrt(sqrt(z2 * z2 + g.t() * g.t()));
}

template <typename Scalar>
Scalar norm(MetricKind kind, const GroupElement<Scalar>& g) {
  switch (kind) {
    case MetricKind::rho_max: return rho(g);
    case MetricKind::gauge: return gauge_norm(g);
    case MetricKind::koranyi: return koranyi_norm(g);
  }
  return Scalar(0);
}

/// d(g, h) = |h^{-1} g| for the chosen point norm. Left-invariant for every kind.
template <typename Scalar>
Scalar distance(MetricKind kind, const GroupElement<Scalar>& g, const GroupElement<Scalar>& h) {
  return norm(kind, left_quotient(h, g));
}

/// Largest coordinate difference, used by the property suites.
template <typename Scalar>
Scalar max_abs_difference(const GroupElement<Scalar>& a, const GroupElement<Scalar>& b) {
  using std::abs;
  using std::max;
  Scalar m = abs(a.t() - b.t());
  m = max(m, (a.x() - b.x()).cwiseAbs().maxCoeff());
  m = max(m, (a.y() - b.y()).cwiseAbs().maxCoeff());
  return m;
}

template <typename Scalar>
Scalar max_abs_coordinate(const GroupElement<Scalar>& a) {
  using std::abs;
  using std::max;
  return max({abs(a.t()), a.x().cwiseAbs().maxCoeff(), a.y().cwiseAbs().maxCoeff()});
}

}  // namespace heisenberg

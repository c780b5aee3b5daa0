// Globally adaptive Gauss-Kronrod (7, 15) quadrature for real or complex integrands.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace heisenberg {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_intervals = 2000;
};

template <typename T>
struct QuadratureResult {
  T value{};
  double error = 0.0;
  int intervals = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                              0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }

template <typename T, typename F>
QuadratureResult<T> gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const T fc = f(c);
  T kron = fc * kWgk[7];
  T gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const T s = f(c - dx) + f(c + dx);
    kron += s * kWgk[j];
    if (j % 2 == 1) gauss += s * kWg[j / 2];
  }
  return {kron * h, magnitude((kron - gauss) * h), 1};
}

}  // namespace detail

/// Integral of f over [a, b]. Throws QuadratureError when the tolerance is not met
/// within max_intervals subdivisions.
template <typename T = double, typename F>
QuadratureResult<T> integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  struct Piece {
    double a, b;
    QuadratureResult<T> r;
    bool operator<(const Piece& o) const { return r.error < o.r.error; }
  };
  if (a == b) return {};
  std::priority_queue<Piece> heap;
  auto first = detail::gk15<T>(f, a, b);
  T total = first.value;
  double err = first.error;
  heap.push({a, b, first});
  int count = 1;
  while (err > std::max(opt.abs_tol, opt.rel_tol * detail::magnitude(total))) {
    if (count >= opt.max_intervals) {
      std::ostringstream os;
      os << "adaptive quadrature: tolerance not met (error " << err << ")";
      throw QuadratureError(os.str());
    }
    Piece p = heap.top();
    heap.pop();
    const double m = 0.5 * (p.a + p.b);
    auto left = detail::gk15<T>(f, p.a, m);
    auto right = detail::gk15<T>(f, m, p.b);
    total += left.value + right.value - p.r.value;
    err += left.error + right.error - p.r.error;
    heap.push({p.a, m, left});
    heap.push({m, p.b, right});
    ++count;
    if (!std::isfinite(detail::magnitude(total))) throw QuadratureError("adaptive quadrature: non-finite integrand");
  }
  // Recompute the total from the pieces to shed accumulated update rounding.
  T sum{};
  double esum = 0.0;
  std::vector<Piece> pieces;
  while (!heap.empty()) {
    pieces.push_back(heap.top());
    heap.pop();
  }
  std::sort(pieces.begin(), pieces.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });
  for (const auto& p : pieces) {
    sum += p.r.value;
    esum += p.r.error;
  }
  return {sum, esum, count};
}

}  // namespace heisenberg

#include "heisenberg/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace heisenberg {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t t_digit_bound(int n) { return 2 * static_cast<std::int64_t>(n) * (n + 1); }

// 4 n lambda (<m_y, d_x> - <m_x, d_y>)
std::int64_t child_twist(int n, const IVector& m, const IVector& d) {
  std::int64_t s = 0;
  for (int i = 0; i < n; ++i) s += m(n + i) * d(i) - m(i) * d(n + i);
  return 4 * n * lambda_of(n) * s;
}

}  // namespace

std::int64_t children_count(int n) {
  std::int64_t c = 1;
  for (int i = 0; i < 2 * n + 2; ++i) c *= lambda_of(n);
  return c;
}

double lambda_pow(int n, int p) {
  double v = 1.0;
  const double l = lambda_of(n);
  for (int i = 0; i < std::abs(p); ++i) v *= l;
  return p >= 0 ? v : 1.0 / v;
}

std::string TileId::to_string() const {
  std::ostringstream os;
  os << "T(level=" << level << ", m=[";
  for (int i = 0; i < m.size(); ++i) os << (i ? "," : "") << m(i);
  os << "], k=" << k << ")";
  return os.str();
}

std::size_t TileIdHash::operator()(const TileId& id) const {
  std::size_t h = std::hash<int>()(id.level);
  auto mix = [&h](std::int64_t v) { h ^= std::hash<std::int64_t>()(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  for (int i = 0; i < id.m.size(); ++i) mix(id.m(i));
  mix(id.k);
  return h;
}

TileId origin_tile(int n, int level) {
  if (n < 1 || n > kMaxN) throw DimensionError("n out of range");
  return TileId{level, IVector::Zero(2 * n), 0};
}

double tile_width(int n, int level) { return lambda_pow(n, level); }
double tile_height(int n, int level) { return lambda_pow(n, 2 * level) / (2.0 * n); }
double tile_measure(int n, int level) { return lambda_pow(n, (2 * n + 2) * level) / (2.0 * n); }

double boundary_f(const HVector<double>& x0, const HVector<double>& y0, double tol) {
  const int n = static_cast<int>(x0.size());
  if (!(tol > 0)) throw std::invalid_argument("boundary_f: tol must be positive");
  for (int i = 0; i < n; ++i) {
    if (!(x0(i) >= -0.5 && x0(i) < 0.5 && y0(i) >= -0.5 && y0(i) < 0.5)) {
      throw std::domain_error("boundary_f: z outside Q0");
    }
  }
  const double lam = lambda_of(n);
  const double lam2 = lam * lam;
  // Each digit shrinks the unresolved part by lambda^{-2}; f stays within a unit range.
  const int depth = static_cast<int>(std::ceil(std::log(1.0 / tol) / std::log(lam2))) + 1;
  HVector<double> x = x0, y = y0;
  HVector<double> dx(n), dy(n);
  double f = 0.0;
  double w = 1.0 / lam2;
  for (int level = 0; level < depth; ++level) {
    for (int i = 0; i < n; ++i) {
      dx(i) = std::clamp(std::floor(lam * x(i) + 0.5), -double(n), double(n));
      dy(i) = std::clamp(std::floor(lam * y(i) + 0.5), -double(n), double(n));
    }
    f += w * ((n + 1) + 2.0 * lam * (dy.dot(x) - dx.dot(y)));
    x = lam * x - dx;
    y = lam * y - dy;
    w /= lam2;
  }
  // Remainder lambda^{-2 depth} f(z_depth), replaced by the fixed-point value f(0) = 1/(4n).
  return f + w * lam2 / (4.0 * n);
}

double boundary_f(const Point& z, double tol) { return boundary_f(z.x(), z.y(), tol); }

Point lattice_point(const IVector& m, std::int64_t k) {
  const int n = static_cast<int>(m.size() / 2);
  HVector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = static_cast<double>(m(i));
    y(i) = static_cast<double>(m(n + i));
  }
  return Point(x, y, static_cast<double>(k) / (2.0 * n));
}

namespace {

// Tile lookup in the level-0 frame. tol_rel = 0 never throws.
TileId tile_of_level0(const Point& q, int level, double tol_rel) {
  const int n = q.dim();
  IVector m(2 * n);
  HVector<double> zx(n), zy(n);
  for (int i = 0; i < 2 * n; ++i) {
    const double u = q.u(i);
    m(i) = static_cast<std::int64_t>(std::floor(u + 0.5));
    const double r = u - static_cast<double>(m(i));
    if (tol_rel > 0 && (r + 0.5 < tol_rel || 0.5 - r < tol_rel)) {
      throw BoundaryError("tile_of: point within tolerance of a cube face");
    }
    if (i < n) zx(i) = r; else zy(i - n) = r;
  }
  // Guard against rounding pushing a residual onto 0.5.
  for (int i = 0; i < n; ++i) {
    if (zx(i) >= 0.5) zx(i) = std::nextafter(0.5, 0.0);
    if (zy(i) >= 0.5) zy(i) = std::nextafter(0.5, 0.0);
  }
  double twist = 0.0;
  for (int i = 0; i < n; ++i) twist += -2.0 * static_cast<double>(m(n + i)) * q.x()(i) + 2.0 * static_cast<double>(m(i)) * q.y()(i);
  const double tprime = q.t() + twist;
  const double f = boundary_f(zx, zy, 1e-14);
  const double u = 2.0 * n * (tprime - f);
  if (tol_rel > 0 && std::abs(u - std::round(u)) < tol_rel) {
    throw BoundaryError("tile_of: point within tolerance of the t-boundary");
  }
  return TileId{level, m, static_cast<std::int64_t>(std::floor(u)) + 1};
}

Point to_level0(const Point& g, int level) {
  if (level == 0) return g;
  const int n = g.dim();
  // Multiply by an exact integer power when shrinking is not needed.
  if (level < 0) return dilate(lambda_pow(n, -level), g);
  const double s = lambda_pow(n, level);
  return GroupElement<double>(g.x() / s, g.y() / s, g.t() / (s * s));
}

}  // namespace

TileId tile_of(const Point& g, int level, double tol_rel) {
  return tile_of_level0(to_level0(g, level), level, tol_rel);
}

Point center(const TileId& T) {
  return dilate(lambda_pow(T.dim(), T.level), lattice_point(T.m, T.k));
}

bool contains(const TileId& T, const Point& g) {
  if (g.dim() != T.dim()) throw DimensionError("contains: dimension mismatch");
  return tile_of(g, T.level, 0.0) == T;
}

TileId child(const TileId& T, std::int64_t index) {
  const int n = T.dim();
  const std::int64_t lam = lambda_of(n);
  const std::int64_t lam2 = lam * lam;
  if (index < 0 || index >= children_count(n)) throw std::out_of_range("child index");
  const std::int64_t E = t_digit_bound(n);
  const std::int64_t e = index % lam2 - E;
  std::int64_t zi = index / lam2;
  IVector d(2 * n);
  for (int i = 2 * n - 1; i >= 0; --i) {
    d(i) = zi % lam - n;
    zi /= lam;
  }
  TileId c;
  c.level = T.level - 1;
  c.m = lam * T.m + d;
  c.k = lam2 * T.k + e + child_twist(n, T.m, d);
  return c;
}

std::vector<TileId> children(const TileId& T) {
  const std::int64_t M = children_count(T.dim());
  std::vector<TileId> out;
  out.reserve(static_cast<std::size_t>(M));
  for (std::int64_t i = 0; i < M; ++i) out.push_back(child(T, i));
  return out;
}

namespace {

struct ParentDigits {
  TileId parent;
  IVector d;
  std::int64_t e;
};

ParentDigits parent_digits(const TileId& T) {
  const int n = T.dim();
  const std::int64_t lam = lambda_of(n);
  const std::int64_t lam2 = lam * lam;
  const std::int64_t E = t_digit_bound(n);
  ParentDigits p;
  p.parent.level = T.level + 1;
  p.parent.m.resize(2 * n);
  p.d.resize(2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    p.parent.m(i) = floor_div(T.m(i) + n, lam);
    p.d(i) = T.m(i) - lam * p.parent.m(i);
  }
  const std::int64_t rest = T.k - child_twist(n, p.parent.m, p.d);
  p.parent.k = floor_div(rest + E, lam2);
  p.e = rest - lam2 * p.parent.k;
  return p;
}

}  // namespace

TileId parent(const TileId& T) { return parent_digits(T).parent; }

std::int64_t child_index(const TileId& T) {
  const int n = T.dim();
  const std::int64_t lam = lambda_of(n);
  const ParentDigits p = parent_digits(T);
  std::int64_t zi = 0;
  for (int i = 0; i < 2 * n; ++i) zi = zi * lam + (p.d(i) + n);
  return zi * lam * lam + (p.e + t_digit_bound(n));
}

TileId ancestor(const TileId& T, int level) {
  if (level < T.level) throw std::invalid_argument("ancestor: level below tile level");
  TileId a = T;
  while (a.level < level) a = parent(a);
  return a;
}

bool is_descendant(const TileId& T, const TileId& A) {
  return A.level >= T.level && ancestor(T, A.level) == A;
}

TileId translate(const TileId& T, const IVector& m, std::int64_t k) {
  const int n = T.dim();
  // (m, k/2n)(T.m, T.k/2n): t-part gains 2(<m_y, Tm_x> - <m_x, Tm_y>).
  std::int64_t twist = 0;
  for (int i = 0; i < n; ++i) twist += m(n + i) * T.m(i) - m(i) * T.m(n + i);
  return TileId{T.level, m + T.m, k + T.k + 4 * n * twist};
}

TileId dilate_tile(const TileId& T, int levels) { return TileId{T.level + levels, T.m, T.k}; }

Point point_in_tile(const TileId& T, const Eigen::Ref<const Eigen::VectorXd>& u) {
  const int n = T.dim();
  if (u.size() != 2 * n + 1) throw DimensionError("point_in_tile: need 2n+1 unit coordinates");
  HVector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = u(i) - 0.5;
    y(i) = u(n + i) - 0.5;
  }
  const double f = boundary_f(x, y, 1e-14);
  const double t = f - 1.0 / (2.0 * n) + u(2 * n) / (2.0 * n);
  const Point local(x, y, t);
  return dilate(lambda_pow(n, T.level), multiply(lattice_point(T.m, T.k), local));
}

std::vector<Eigen::VectorXd> stratified_unit_samples(int n, int per_axis) {
  if (per_axis < 1) throw std::invalid_argument("per_axis must be positive");
  const int dims = 2 * n + 1;
  std::int64_t total = 1;
  for (int i = 0; i < dims; ++i) total *= per_axis;
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(total));
  for (std::int64_t s = 0; s < total; ++s) {
    Eigen::VectorXd u(dims);
    std::int64_t r = s;
    for (int i = dims - 1; i >= 0; --i) {
      u(i) = (static_cast<double>(r % per_axis) + 0.5) / per_axis;
      r /= per_axis;
    }
    out.push_back(u);
  }
  return out;
}

Region::Region(TileId root, int depth) : root_(std::move(root)), depth_(depth) {
  if (depth < 0) throw std::invalid_argument("Region: depth must be nonnegative");
  std::vector<TileId> cur{root_};
  for (int d = 0; d < depth; ++d) {
    std::vector<TileId> next;
    next.reserve(cur.size() * static_cast<std::size_t>(children_count(dim())));
    for (const auto& T : cur) {
      for (auto& c : children(T)) next.push_back(std::move(c));
    }
    cur.swap(next);
  }
  fine_ = std::move(cur);
  centers_.reserve(fine_.size());
  for (const auto& T : fine_) centers_.push_back(center(T));
}

std::pair<std::int64_t, std::int64_t> Region::block(const TileId& T) const {
  if (T.level < fine_level() || T.level > root_.level) throw std::out_of_range("Region::block: level outside region");
  const std::int64_t M = children_count(dim());
  std::int64_t count = 1;
  for (int l = fine_level(); l < T.level; ++l) count *= M;
  std::int64_t offset = 0;
  std::int64_t mult = count;
  TileId cur = T;
  while (cur.level < root_.level) {
    offset += child_index(cur) * mult;
    mult *= M;
    cur = parent(cur);
  }
  if (cur != root_) throw std::out_of_range("Region::block: tile not inside region");
  return {offset, count};
}

std::vector<TileId> Region::tiles_at(int level) const {
  if (level < fine_level() || level > root_.level) throw std::out_of_range("Region::tiles_at: level outside region");
  std::vector<TileId> cur{root_};
  for (int l = root_.level; l > level; --l) {
    std::vector<TileId> next;
    for (const auto& T : cur) {
      for (auto& c : children(T)) next.push_back(std::move(c));
    }
    cur.swap(next);
  }
  return cur;
}

std::int64_t Region::locate(const Point& g, double tol_rel) const {
  const TileId T = tile_of(g, fine_level(), tol_rel);
  if (!is_descendant(T, root_)) return -1;
  return block(T).first;
}

SymbolGrid make_grid(std::shared_ptr<const Region> region, Eigen::VectorXd values) {
  if (!region || values.size() != region->size()) throw std::invalid_argument("make_grid: size mismatch");
  SymbolGrid g;
  g.region = std::move(region);
  g.values = std::move(values);
  return g;
}

SymbolGrid sample_symbol(std::shared_ptr<const Region> region, const Symbol& b, Sampling sampling,
                         int samples_per_axis) {
  if (!region) throw std::invalid_argument("sample_symbol: null region");
  const std::int64_t N = region->size();
  Eigen::VectorXd v(N);
  if (sampling == Sampling::center_value || samples_per_axis <= 1) {
    for (std::int64_t i = 0; i < N; ++i) v(i) = b(region->centers()[i]);
  } else {
    const auto unit = stratified_unit_samples(region->dim(), samples_per_axis);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (const auto& u : unit) s += b(point_in_tile(region->fine_tiles()[i], u));
      v(i) = s / static_cast<double>(unit.size());
    }
  }
  SymbolGrid g = make_grid(std::move(region), std::move(v));
  g.sampling = sampling;
  g.samples_per_axis = samples_per_axis;
  return g;
}

SymbolGrid conditional_expectation(const SymbolGrid& b, int k) {
  const Region& R = *b.region;
  const int level = -k;
  if (level < R.fine_level() || level > R.root().level) {
    throw std::out_of_range("conditional_expectation: level outside region");
  }
  std::int64_t block = 1;
  for (int l = R.fine_level(); l < level; ++l) block *= children_count(R.dim());
  SymbolGrid out = b;
  for (std::int64_t s = 0; s < b.size(); s += block) {
    out.values.segment(s, block).setConstant(b.values.segment(s, block).mean());
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median_of: empty input");
  const std::size_t h = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + h, v.end());
  const double upper = v[h];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + h);
  return 0.5 * (lower + upper);
}

double median_on_tile(const SymbolGrid& b, const TileId& T) {
  const auto [offset, count] = b.region->block(T);
  std::vector<double> v(b.values.data() + offset, b.values.data() + offset + count);
  return median_of(std::move(v));
}

double grid_norm(const SymbolGrid& b, double p) {
  if (!(p > 0)) throw std::invalid_argument("grid_norm: p must be positive");
  if (std::isinf(p)) return b.values.cwiseAbs().maxCoeff();
  const double mu = b.region->fine_measure();
  return std::pow(b.values.cwiseAbs().array().pow(p).sum() * mu, 1.0 / p);
}

double grid_inner(const SymbolGrid& a, const SymbolGrid& b) {
  if (a.size() != b.size()) throw std::invalid_argument("grid_inner: size mismatch");
  return a.values.dot(b.values) * a.region->fine_measure();
}

}  // namespace heisenberg

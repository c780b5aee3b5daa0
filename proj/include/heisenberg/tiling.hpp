// Self-similar tiles of H^n.
//
// lambda = 2n+1. The base tile is T_o = {(z, t): z in Q0, f(z) - 1/(2n) <= t < f(z)},
// Q0 = [-1/2, 1/2)^{2n}. A level-j tile is delta_{lambda^j}((m, k/(2n)) T_o) with
// m in Z^{2n}, k in Z. Each tile splits into M = lambda^{2n+2} children.
#pragma once

#include "heisenberg/group.hpp"
#include "heisenberg/symbols.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heisenberg {

using IVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1, 0, 2 * kMaxN, 1>;

class BoundaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline int lambda_of(int n) { return 2 * n + 1; }
/// Number of children per tile, (2n+1)^{2n+2}.
std::int64_t children_count(int n);
/// lambda^p as a double, exact for the integer powers used here.
double lambda_pow(int n, int p);

struct TileId {
  int level = 0;
  IVector m;           // z-base in the level frame, length 2n
  std::int64_t k = 0;  // t-base is k / (2n) in the level frame

  int dim() const { return static_cast<int>(m.size() / 2); }
  bool operator==(const TileId& o) const { return level == o.level && k == o.k && m == o.m; }
  bool operator!=(const TileId& o) const { return !(*this == o); }
  std::string to_string() const;
};

struct TileIdHash {
  std::size_t operator()(const TileId& id) const;
};

/// Base tile T_o at level 0 (contains the identity).
TileId origin_tile(int n, int level = 0);

double tile_width(int n, int level);
double tile_height(int n, int level);
double tile_measure(int n, int level);

/// Boundary function f on Q0, accurate to tol. Throws on z outside Q0 or tol <= 0.
double boundary_f(const HVector<double>& x, const HVector<double>& y, double tol = 1e-13);
double boundary_f(const Point& zpoint, double tol = 1e-13);

/// Unique level-j tile containing g. Throws BoundaryError within tol_rel (relative to
/// the tile height and width) of a tile boundary.
TileId tile_of(const Point& g, int level, double tol_rel = 1e-9);

/// Lattice element (m, k/(2n)) in the level-0 frame.
Point lattice_point(const IVector& m, std::int64_t k);
Point center(const TileId& T);
bool contains(const TileId& T, const Point& g);

/// Children in canonical order: z-digits lexicographic (first coordinate most
/// significant, digits -n..n), then the t-digit e in [-2n(n+1), 2n(n+1)].
std::vector<TileId> children(const TileId& T);
TileId child(const TileId& T, std::int64_t index);
TileId parent(const TileId& T);
/// Position of T among the children of parent(T).
std::int64_t child_index(const TileId& T);
TileId ancestor(const TileId& T, int level);
bool is_descendant(const TileId& T, const TileId& ancestor_tile);

/// Image of T under left translation by a lattice element of T's level, given in the
/// level frame as (m, k/(2n)).
TileId translate(const TileId& T, const IVector& m, std::int64_t k);
/// delta_{lambda}(T): same base, level + 1.
TileId dilate_tile(const TileId& T, int levels = 1);

/// Point of T from unit coordinates u in [0,1)^{2n+1}. Uniform u gives Haar-uniform
/// points in T.
Point point_in_tile(const TileId& T, const Eigen::Ref<const Eigen::VectorXd>& u);

template <typename Rng>
Point random_point_in_tile(const TileId& T, Rng& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::VectorXd u(2 * T.dim() + 1);
  for (int i = 0; i < u.size(); ++i) u(i) = U(rng);
  return point_in_tile(T, u);
}

/// Stratified unit samples: per_axis^{2n+1} cell midpoints.
std::vector<Eigen::VectorXd> stratified_unit_samples(int n, int per_axis);

/// A root tile and all its descendants `depth` levels down. Fine tiles are stored in
/// canonical path order, so the descendants of any tile form one contiguous block.
class Region {
 public:
  Region(TileId root, int depth);

  int dim() const { return root_.dim(); }
  const TileId& root() const { return root_; }
  int depth() const { return depth_; }
  int fine_level() const { return root_.level - depth_; }
  std::int64_t size() const { return static_cast<std::int64_t>(fine_.size()); }
  const std::vector<TileId>& fine_tiles() const { return fine_; }
  const std::vector<Point>& centers() const { return centers_; }
  double fine_measure() const { return tile_measure(dim(), fine_level()); }

  /// Contiguous slot range [offset, offset + count) of T's fine descendants.
  std::pair<std::int64_t, std::int64_t> block(const TileId& T) const;
  /// Tiles of a given level inside the region, in canonical order.
  std::vector<TileId> tiles_at(int level) const;
  /// Slot of the fine tile containing g, or -1 if g is outside the region.
  std::int64_t locate(const Point& g, double tol_rel = 1e-9) const;

 private:
  TileId root_;
  int depth_;
  std::vector<TileId> fine_;
  std::vector<Point> centers_;
};

enum class Sampling { center_value, cell_average };

/// One value per fine tile of a region.
struct SymbolGrid {
  std::shared_ptr<const Region> region;
  Eigen::VectorXd values;
  Sampling sampling = Sampling::center_value;
  int samples_per_axis = 1;

  std::int64_t size() const { return values.size(); }
};

/// Grid from a symbol. cell_average uses samples_per_axis^{2n+1} stratified midpoints.
SymbolGrid sample_symbol(std::shared_ptr<const Region> region, const Symbol& b, Sampling sampling = Sampling::center_value,
                         int samples_per_axis = 1);
SymbolGrid make_grid(std::shared_ptr<const Region> region, Eigen::VectorXd values);

/// E_k: average onto tiles of level -k.
SymbolGrid conditional_expectation(const SymbolGrid& b, int k);

/// Median over the fine tiles of T; the midpoint of the two central order statistics
/// when the count is even.
double median_on_tile(const SymbolGrid& b, const TileId& T);
double median_of(std::vector<double> values);

/// Discrete L^p norm with fine-tile measure weights; p = infinity allowed.
double grid_norm(const SymbolGrid& b, double p);
double grid_inner(const SymbolGrid& a, const SymbolGrid& b);

}  // namespace heisenberg

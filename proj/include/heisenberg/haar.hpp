// Haar system on tiles: mean-zero, child-constant, L^2-normalized functions.
#pragma once

#include "heisenberg/tiling.hpp"

#include <Eigen/Core>

#include <memory>
#include <utility>
#include <vector>

namespace heisenberg {

struct HaarFunction {
  TileId tile;
  int index = 1;                // epsilon in 1..M-1
  Eigen::VectorXd child_coeffs;  // value on each child, canonical child order

  double norm(double p) const;
};

/// M x (M-1) orthonormal basis of the complement of the constant vector, built by
/// modified Gram-Schmidt on consecutive differences e_i - e_{i+1}. Cached per n.
const Eigen::MatrixXd& haar_unit_basis(int n);

std::vector<HaarFunction> build_basis(const TileId& T);
/// Same, checking that T has children inside the region.
std::vector<HaarFunction> build_basis(const Region& region, const TileId& T);

/// Coefficients of a grid in the Haar system of its region.
struct HaarCoefficients {
  std::shared_ptr<const Region> region;
  double coarse = 0.0;  // <b, |root|^{-1/2} chi_root>
  /// levels[i] holds level root.level - i: one row per tile (canonical order), M-1 columns.
  std::vector<Eigen::MatrixXd> levels;

  const Eigen::MatrixXd& at_level(int level) const;
  Eigen::MatrixXd& at_level(int level);
  double squared_norm() const;
};

HaarCoefficients haar_expand(const SymbolGrid& b);
SymbolGrid haar_reconstruct(const HaarCoefficients& c);

/// Haar function as a grid on a region (zero outside its tile).
SymbolGrid haar_grid(std::shared_ptr<const Region> region, const HaarFunction& h);

/// Child averages of b on T, canonical order.
Eigen::VectorXd child_averages(const SymbolGrid& b, const TileId& T);

/// epsilon maximizing |<b, h_T^epsilon>|; the smallest epsilon wins ties.
std::pair<int, double> select_max_haar(const SymbolGrid& b, const TileId& T);

/// Martingale difference E_{k+1} b - E_k b.
SymbolGrid martingale_difference(const SymbolGrid& b, int k);

}  // namespace heisenberg

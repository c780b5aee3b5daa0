// Estimators of the homogeneous Besov seminorm B^alpha_{p,p} of a grid symbol.
#pragma once

#include "heisenberg/tiling.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace heisenberg {

enum class BesovMethod { direct, shell, martingale };

const char* to_string(BesovMethod m);

struct BesovEstimate {
  BesovMethod method = BesovMethod::martingale;
  double p = 2.0;
  double alpha = 0.0;
  double value = 0.0;
  double errbar = 0.0;    // Monte Carlo standard error of value (direct only)
  int k_lo = 0, k_hi = 0;  // level window, scale lambda^{-k}
  std::int64_t samples = 0;
  double tail = 0.0;  // closed-form contribution outside the window (p-th power)
  std::vector<double> per_level;  // p-th power contributions, k_lo..k_hi

  nlohmann::ordered_json to_json() const;
};

/// Levels k with lambda^{-k} between the region's fine and root scales (inclusive of both).
std::pair<int, int> region_levels(const Region& R);

struct DirectOptions {
  int shifts_per_shell = 200;
  int coarse_shells = 2;  // shells above the root scale
  unsigned seed = 1;
  bool tail = true;       // closed form for rho beyond the coarsest shell
  double max_rel_error = 0.2;
};

/// Monte Carlo over shells rho(g) in [lambda^{-k-1}, lambda^{-k}] of
/// int ||b(g .) - b||_p^p rho(g)^{-(Q + p alpha)} dg, then the p-th root. b is its
/// background value off the region. Throws when the error bar exceeds max_rel_error.
BesovEstimate besov_direct(const SymbolGrid& b, double p, double alpha, const DirectOptions& opt = {});

/// sum_k lambda^{2Qk} sum over fine pairs with gauge distance <= lambda^{-k-1} of
/// |b(g) - b(g')|^p mu^2, then the p-th root. Default window: the region's levels.
BesovEstimate besov_shell(const SymbolGrid& b, double p, std::optional<std::pair<int, int>> levels = std::nullopt);

struct MartingaleOptions {
  std::optional<std::pair<int, int>> levels;
  int coarse_tail = 12;  // ancestor levels above the root, in closed form; 0 disables
};

/// sum_k lambda^{Qk} ||E_{k+1} b - E_k b||_p^p, then the p-th root.
BesovEstimate besov_martingale(const SymbolGrid& b, double p, const MartingaleOptions& opt = {});

}  // namespace heisenberg

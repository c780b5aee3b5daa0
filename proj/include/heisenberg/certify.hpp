// Kernel scans on the Koranyi sphere and the tile-pair non-degeneracy certifier.
#pragma once

#include "heisenberg/kernels.hpp"
#include "heisenberg/tiling.hpp"

#include <json.hpp>

#include <vector>

namespace heisenberg {

/// Kernel samples on {d_K = 1}: |z|^2 = cos(phi), t = sin(phi), z = sqrt(cos phi) w with
/// w a unit vector of R^{2n}. For n = 1, w runs over a uniform angle grid; otherwise over
/// a seeded set of directions.
struct SphereScan {
  KernelSpec spec;
  int phi_count = 0;
  int dir_count = 0;
  Eigen::MatrixXd values;      // phi x direction; real part for complex kernels
  Eigen::MatrixXd magnitudes;  // |K|
  std::vector<Point> points;   // row-major over (phi, direction)

  double threshold = 0.0;
  double zero_fraction = 0.0;
  double positive_fraction = 0.0;
  double min_magnitude = 0.0;
  double max_magnitude = 0.0;
  int positive_regions = 0;
  int negative_regions = 0;

  std::int64_t samples() const { return static_cast<std::int64_t>(phi_count) * dir_count; }
  const Point& point(int i, int j) const { return points[static_cast<std::size_t>(i) * dir_count + j]; }
  nlohmann::ordered_json summary() const;
};

SphereScan sphere_scan(const KernelEvaluator& K, std::int64_t resolution, double threshold = 1e-6, unsigned seed = 7);

struct CertifyConfig {
  int A0 = 3;
  int samples_per_axis = 4;  // 4^{2n+1} points per tile
  /// Candidate center distances in units of lambda^{N+j}.
  std::vector<double> radii = {3, 4, 5, 6, 8, 10, 12};
  int directions = 48;       // strongest sphere directions tried per radius
  std::int64_t scan_resolution = 4000;
  /// A pair is accepted when min |K| on T x T_hat is at least this fraction of |K| at the
  /// nominal displacement.
  double min_fraction = 0.2;
};

struct Certificate {
  bool found = false;
  TileId tile, partner, container;
  int N = 0;
  int sign = 0;
  double min_scaled = 0.0;  // min |K| lambda^{(2n+2)(N+j)} over sampled pairs: the achieved C
  double max_scaled = 0.0;
  double distance_ratio = 0.0;  // d(cent T, cent T_hat) / lambda^{N+j}
  int candidates = 0;

  nlohmann::ordered_json to_json() const;
};

/// Candidate displacements: the strongest directions of a sphere scan, spread out.
std::vector<Point> certify_directions(const KernelEvaluator& K, const CertifyConfig& cfg);

/// Searches T_hat at T's level inside the ancestor container (level j + N + A0) such that the
/// sampled K(g_hat^{-1} g) on T x T_hat has one sign and stays away from zero.
Certificate nondegen_certify(const TileId& T, int N, const KernelEvaluator& K, const CertifyConfig& cfg = {});
Certificate nondegen_certify(const TileId& T, int N, const KernelEvaluator& K, const CertifyConfig& cfg,
                             const std::vector<Point>& directions);
/// Same search with an explicit container tile.
Certificate nondegen_certify_within(const TileId& T, int N, const TileId& container, const KernelEvaluator& K,
                                    const CertifyConfig& cfg, const std::vector<Point>& directions);

struct SignCheck {
  int sign = 0;  // 0 when both signs occur
  double min_abs = 0.0;
  double max_abs = 0.0;
};
/// Sign and magnitude range of K(g_hat^{-1} g) over stratified samples of T x T_hat.
SignCheck pair_sign(const TileId& T, const TileId& T_hat, const KernelEvaluator& K, int samples_per_axis);

}  // namespace heisenberg

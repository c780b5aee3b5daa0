// Nystrom discretization of [b, K] on a region, and the test quantities built on it:
// NWO sums, mixed kernel norms, oscillation profiles.
#pragma once

#include "heisenberg/certify.hpp"
#include "heisenberg/kernels.hpp"
#include "heisenberg/spectra.hpp"
#include "heisenberg/tiling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace heisenberg {

struct AssembleOptions {
  /// Near-diagonal correction: average the kernel over near_samples^{2n+1} points of each
  /// tile for pairs whose centers are closer than near_radius fine widths. 0 disables.
  int near_samples = 0;
  double near_radius = 1.5;
  /// Rows per block in the streamed (support-reduced) assembly.
  std::int64_t chunk = 1024;
};

/// Value taken by at least a quarter of the fine tiles (the most frequent one), else 0.
double background_value(const SymbolGrid& b);
/// Fine tiles where b differs from the background, in region order.
std::vector<std::int64_t> symbol_support(const SymbolGrid& b, double background);
/// FNV-1a of the raw symbol values and region.
std::string symbol_hash(const SymbolGrid& b);

template <typename Scalar>
struct OperatorMatrix {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::shared_ptr<const Region> region;
  KernelSpec spec;
  double weight = 0.0;  // fine-tile measure
  double background = 0.0;
  std::vector<std::int64_t> support;
  Matrix entries;  // M[T, T'] = (b_T - b_T') K(c_T'^{-1} c_T) weight
  std::string provenance;

  Eigen::Index size() const { return entries.rows(); }
};

using RealOperator = OperatorMatrix<double>;
using ComplexOperator = OperatorMatrix<cdouble>;

template <typename Scalar>
OperatorMatrix<Scalar> assemble(const SymbolGrid& b, const KernelEvaluator& K, const AssembleOptions& opt = {});

/// An operator with A[O, O] = 0 for O the complement of the support S, kept as
/// A_SS, A_OS^* A_OS and A_SO A_SO^*. Enough for the singular values.
template <typename Scalar>
struct ReducedOperator {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  std::int64_t dimension = 0;
  std::vector<std::int64_t> support;
  Matrix A_ss, G_os, H_so;
};

template <typename Scalar>
ReducedOperator<Scalar> reduce(const OperatorMatrix<Scalar>& A);

/// Streams the off-support blocks without forming the full matrix.
template <typename Scalar>
ReducedOperator<Scalar> assemble_reduced(const SymbolGrid& b, const KernelEvaluator& K, const AssembleOptions& opt = {});

/// Singular values, padded with zeros to the full dimension.
template <typename Scalar>
Eigen::VectorXd singular_values(const ReducedOperator<Scalar>& R);

/// Singular values of an assembled operator, using the support reduction when it pays.
template <typename Scalar>
Eigen::VectorXd commutator_spectrum(const OperatorMatrix<Scalar>& A);

struct NwoOptions {
  CertifyConfig certify;
};

struct NwoTerm {
  TileId tile;
  TileId partner;
  int s = 1;
  double alpha = 0.0;
  double value = 0.0;
};

struct NwoResult {
  double value = 0.0;
  int tiles = 0;
  int skipped = 0;
  std::vector<NwoTerm> terms;
};

/// (sum_T sum_s (sum_i |<A e, f>|)^p)^{1/p} over the tiles T at `level`, with e, f the
/// scaled indicators of F_s (in the certified partner) and E_s cap P_i (in T). Partners
/// come from nondegen_certify with N = 0; outside the region b is taken to be its
/// background value and the entries follow the same one-node-per-tile rule.
template <typename Scalar>
NwoResult nwo_sum(const OperatorMatrix<Scalar>& A, const SymbolGrid& b, const KernelEvaluator& K, double p, int level,
                  const NwoOptions& opt = {});

struct MixedNorm {
  double forward = 0.0;  // inner L^p over rows, outer weak L^{p'} over columns
  double adjoint = 0.0;
};

template <typename Scalar>
MixedNorm mixed_norm(const OperatorMatrix<Scalar>& A, double p);

/// Discrete weak L^q norm of nonnegative values with a common point mass w:
/// max_k v_(k) (k w)^{1/q}.
double weak_lorentz(std::vector<double> values, double q, double w);

struct OscillationProfile {
  int B0 = 1;
  double exponent = 4.0;
  std::vector<int> levels;  // coarse to fine
  std::vector<double> per_level;
  std::vector<double> cumulative;
};

/// For each tile level l in [level_fine, level_coarse]: sum over region tiles T of
/// (avg_{T x T} |E b(g') - E b(g'')|)^{exponent}, E the average onto level l - B0.
OscillationProfile oscillation_profile(const SymbolGrid& b, int B0, int level_coarse, int level_fine, double exponent);
OscillationProfile oscillation_profile(const SymbolGrid& b, int B0 = 1);

/// Sign witness: for every sign pattern a, subtiles T'' and T' of T, B0 levels down,
/// with a_j (g_j - h_j) >= margin * width(T) for all g in T'', h in T'. Returns the smallest
/// margin over patterns (negative when some pattern has no witness).
double sign_lemma_margin(const TileId& T, int B0);

}  // namespace heisenberg

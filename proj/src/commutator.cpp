#include "heisenberg/commutator.hpp"

#include "heisenberg/io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>

namespace heisenberg {

namespace {

template <typename Scalar>
Scalar kernel_value(const KernelEvaluator& K, const Point& g) {
  if constexpr (std::is_same_v<Scalar, cdouble>) {
    return K.is_complex() ? K.complex_value(g) : cdouble(K(g), 0.0);
  } else {
    return K(g);
  }
}

// Kernel between two fine tiles with optional near-diagonal averaging.
template <typename Scalar>
class PairKernel {
 public:
  PairKernel(const Region& R, const KernelEvaluator& K, const AssembleOptions& opt)
      : R_(R), K_(K), opt_(opt), near_(opt.near_radius * tile_width(R.dim(), R.fine_level())) {
    if (!std::is_same_v<Scalar, cdouble> && K.is_complex()) {
      throw std::invalid_argument("assemble: complex kernel needs a complex operator");
    }
    if (opt.near_samples > 0) unit_ = stratified_unit_samples(R.dim(), opt.near_samples);
  }

  Scalar operator()(std::int64_t i, std::int64_t j) const {
    const Point& ci = R_.centers()[i];
    const Point& cj = R_.centers()[j];
    if (unit_.empty() || distance(MetricKind::gauge, ci, cj) >= near_) return kernel_value<Scalar>(K_, left_quotient(cj, ci));
    std::vector<Point> gs, hs;
    gs.reserve(unit_.size());
    hs.reserve(unit_.size());
    for (const auto& u : unit_) {
      gs.push_back(point_in_tile(R_.fine_tiles()[i], u));
      hs.push_back(point_in_tile(R_.fine_tiles()[j], u));
    }
    Scalar sum = 0;
    for (const Point& h : hs) {
      for (const Point& g : gs) sum += kernel_value<Scalar>(K_, left_quotient(h, g));
    }
    return sum / static_cast<double>(gs.size() * hs.size());
  }

 private:
  const Region& R_;
  const KernelEvaluator& K_;
  AssembleOptions opt_;
  double near_;
  std::vector<Eigen::VectorXd> unit_;
};

void check_grid(const SymbolGrid& b) {
  if (!b.region || b.values.size() != b.region->size()) throw std::invalid_argument("symbol grid does not match its region");
  if (!b.values.allFinite()) throw std::invalid_argument("symbol grid has non-finite values");
}

template <typename Matrix>
Matrix full_hermitian(Matrix G) {
  G.template triangularView<Eigen::StrictlyUpper>() = G.adjoint();
  return G;
}

}  // namespace

double background_value(const SymbolGrid& b) {
  check_grid(b);
  std::vector<double> v(b.values.data(), b.values.data() + b.size());
  std::sort(v.begin(), v.end());
  double mode = 0.0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    if (j - i > best) {
      best = j - i;
      mode = v[i];
    }
    i = j;
  }
  return 4 * best >= v.size() ? mode : 0.0;
}

std::vector<std::int64_t> symbol_support(const SymbolGrid& b, double background) {
  std::vector<std::int64_t> s;
  for (std::int64_t i = 0; i < b.size(); ++i) {
    if (b.values(i) != background) s.push_back(i);
  }
  return s;
}

std::string symbol_hash(const SymbolGrid& b) {
  check_grid(b);
  std::string bytes = b.region->root().to_string() + "/" + std::to_string(b.region->depth()) + "/";
  const std::size_t off = bytes.size();
  bytes.resize(off + sizeof(double) * static_cast<std::size_t>(b.size()));
  std::memcpy(bytes.data() + off, b.values.data(), sizeof(double) * static_cast<std::size_t>(b.size()));
  return fnv1a_hex(bytes);
}

template <typename Scalar>
OperatorMatrix<Scalar> assemble(const SymbolGrid& b, const KernelEvaluator& K, const AssembleOptions& opt) {
  check_grid(b);
  const Region& R = *b.region;
  if (K.spec().n != R.dim()) throw std::invalid_argument("assemble: kernel and region dimensions differ");
  const std::int64_t N = R.size();
  OperatorMatrix<Scalar> A;
  A.region = b.region;
  A.spec = K.spec();
  A.weight = R.fine_measure();
  A.background = background_value(b);
  A.support = symbol_support(b, A.background);
  A.provenance = symbol_hash(b) + ":" + K.spec().name();
  A.entries.setZero(N, N);
  const PairKernel<Scalar> pk(R, K, opt);
  const double mu = A.weight;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < N; ++i) {
    for (std::int64_t j = 0; j < N; ++j) {
      const double db = b.values(i) - b.values(j);
      if (i == j || db == 0.0) continue;
      A.entries(i, j) = db * pk(i, j) * mu;
    }
  }
  return A;
}

template <typename Scalar>
ReducedOperator<Scalar> reduce(const OperatorMatrix<Scalar>& A) {
  using Matrix = typename ReducedOperator<Scalar>::Matrix;
  const std::int64_t N = A.size();
  ReducedOperator<Scalar> r;
  r.dimension = N;
  r.support = A.support;
  const auto s = static_cast<Eigen::Index>(r.support.size());
  std::vector<char> in(static_cast<std::size_t>(N), 0);
  for (auto i : r.support) in[static_cast<std::size_t>(i)] = 1;
  std::vector<std::int64_t> off;
  for (std::int64_t i = 0; i < N; ++i) {
    if (!in[static_cast<std::size_t>(i)]) off.push_back(i);
  }
  for (auto i : off) {
    for (auto j : off) {
      if (A.entries(i, j) != Scalar(0)) throw std::invalid_argument("reduce: operator is not zero off the support");
    }
  }
  const auto o = static_cast<Eigen::Index>(off.size());
  r.A_ss.resize(s, s);
  Matrix A_os(o, s), A_so(s, o);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index c = 0; c < s; ++c) r.A_ss(a, c) = A.entries(r.support[a], r.support[c]);
    for (Eigen::Index c = 0; c < o; ++c) {
      A_so(a, c) = A.entries(r.support[a], off[c]);
      A_os(c, a) = A.entries(off[c], r.support[a]);
    }
  }
  r.G_os = A_os.adjoint() * A_os;
  r.H_so = A_so * A_so.adjoint();
  return r;
}

template <typename Scalar>
ReducedOperator<Scalar> assemble_reduced(const SymbolGrid& b, const KernelEvaluator& K, const AssembleOptions& opt) {
  using Matrix = typename ReducedOperator<Scalar>::Matrix;
  check_grid(b);
  const Region& R = *b.region;
  if (K.spec().n != R.dim()) throw std::invalid_argument("assemble_reduced: kernel and region dimensions differ");
  if (opt.chunk < 1) throw std::invalid_argument("assemble_reduced: chunk must be positive");
  const std::int64_t N = R.size();
  const double bg = background_value(b);
  const double mu = R.fine_measure();
  ReducedOperator<Scalar> r;
  r.dimension = N;
  r.support = symbol_support(b, bg);
  const auto s = static_cast<Eigen::Index>(r.support.size());
  const PairKernel<Scalar> pk(R, K, opt);

  r.A_ss.setZero(s, s);
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index c = 0; c < s; ++c) {
      const double db = b.values(r.support[a]) - b.values(r.support[c]);
      if (a != c && db != 0.0) r.A_ss(a, c) = db * pk(r.support[a], r.support[c]) * mu;
    }
  }

  std::vector<char> in(static_cast<std::size_t>(N), 0);
  for (auto i : r.support) in[static_cast<std::size_t>(i)] = 1;
  std::vector<std::int64_t> off;
  off.reserve(static_cast<std::size_t>(N - s));
  for (std::int64_t i = 0; i < N; ++i) {
    if (!in[static_cast<std::size_t>(i)]) off.push_back(i);
  }

  r.G_os.setZero(s, s);
  r.H_so.setZero(s, s);
  const auto total = static_cast<std::int64_t>(off.size());
  Matrix rows, cols;
  for (std::int64_t start = 0; start < total; start += opt.chunk) {
    const auto c = static_cast<Eigen::Index>(std::min(opt.chunk, total - start));
    rows.resize(c, s);  // A[O_chunk, S]
    cols.resize(s, c);  // A[S, O_chunk]
#pragma omp parallel for schedule(static)
    for (Eigen::Index q = 0; q < c; ++q) {
      const std::int64_t o = off[static_cast<std::size_t>(start + q)];
      for (Eigen::Index a = 0; a < s; ++a) {
        const std::int64_t t = r.support[a];
        const double db = bg - b.values(t);
        rows(q, a) = db * pk(o, t) * mu;
        cols(a, q) = -db * pk(t, o) * mu;
      }
    }
    r.G_os.template selfadjointView<Eigen::Lower>().rankUpdate(rows.adjoint());
    r.H_so.template selfadjointView<Eigen::Lower>().rankUpdate(cols);
  }
  r.G_os = full_hermitian(r.G_os);
  r.H_so = full_hermitian(r.H_so);
  return r;
}

template <typename Scalar>
Eigen::VectorXd singular_values(const ReducedOperator<Scalar>& R) {
  using Matrix = typename ReducedOperator<Scalar>::Matrix;
  const auto s = static_cast<Eigen::Index>(R.support.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(R.dimension);
  if (s == 0) return out;
  if (!R.A_ss.allFinite() || !R.G_os.allFinite() || !R.H_so.allFinite()) {
    throw std::invalid_argument("singular_values: non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eg(R.G_os);
  const Eigen::VectorXd w = eg.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix root = eg.eigenvectors() * w.asDiagonal() * eg.eigenvectors().adjoint();

  Matrix GR(2 * s, 2 * s);
  GR.topLeftCorner(s, s) = R.A_ss * R.A_ss.adjoint() + R.H_so;
  GR.topRightCorner(s, s) = R.A_ss;
  GR.bottomLeftCorner(s, s) = R.A_ss.adjoint();
  GR.bottomRightCorner(s, s).setIdentity();
  // G_L^{1/2} G_R G_L^{1/2} with G_L = diag(I, G_os).
  GR.bottomRows(s) = root * GR.bottomRows(s);
  GR.rightCols(s) = GR.rightCols(s) * root;
  Matrix H = (GR + GR.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  const Eigen::Index m = std::min<Eigen::Index>(2 * s, R.dimension);
  for (Eigen::Index k = 0; k < m; ++k) out(k) = std::sqrt(std::max(ev(2 * s - 1 - k), 0.0));
  return sorted_spectrum(out);
}

template <typename Scalar>
Eigen::VectorXd commutator_spectrum(const OperatorMatrix<Scalar>& A) {
  if (4 * static_cast<std::int64_t>(A.support.size()) < A.size()) return singular_values(reduce(A));
  return sorted_spectrum(singular_values(A.entries));
}

template <typename Scalar>
NwoResult nwo_sum(const OperatorMatrix<Scalar>& A, const SymbolGrid& b, const KernelEvaluator& K, double p, int level,
                  const NwoOptions& opt) {
  if (!(p > 0) || std::isinf(p)) throw std::invalid_argument("nwo_sum: p must be positive and finite");
  if (A.region != b.region) throw std::invalid_argument("nwo_sum: operator and symbol live on different regions");
  const Region& R = *A.region;
  if (level - 1 < R.fine_level() || level > R.root().level) throw std::out_of_range("nwo_sum: level outside region");
  const double mu = A.weight;
  const double scale = mu / tile_measure(R.dim(), level);
  const int fine = R.fine_level();
  const auto dirs = certify_directions(K, opt.certify);
  NwoResult res;
  double total = 0.0;
  for (const TileId& T : R.tiles_at(level)) {
    ++res.tiles;
    const Certificate cert = nondegen_certify(T, 0, K, opt.certify, dirs);
    if (!cert.found) {
      ++res.skipped;
      continue;
    }
    // Fine nodes of the partner: region slots when inside, else centers with b = background.
    const bool inside = is_descendant(cert.partner, R.root());
    std::vector<std::int64_t> slots;
    std::vector<Point> nodes;
    std::vector<double> vals;
    if (inside) {
      const auto [off, count] = R.block(cert.partner);
      for (std::int64_t c = off; c < off + count; ++c) {
        slots.push_back(c);
        vals.push_back(b.values(c));
      }
    } else {
      std::vector<TileId> sub{cert.partner};
      for (int l = cert.partner.level; l > fine; --l) {
        std::vector<TileId> next;
        for (const auto& S : sub) {
          for (auto& ch : children(S)) next.push_back(std::move(ch));
        }
        sub.swap(next);
      }
      for (const auto& S : sub) nodes.push_back(center(S));
      vals.assign(sub.size(), A.background);
    }
    const double alpha = median_of(vals);
    for (int s = 1; s <= 2; ++s) {
      std::vector<std::size_t> F;
      for (std::size_t c = 0; c < vals.size(); ++c) {
        if (s == 1 ? vals[c] >= alpha : vals[c] <= alpha) F.push_back(c);
      }
      double term = 0.0;
      for (const TileId& P : children(T)) {
        const auto [eoff, ecount] = R.block(P);
        Scalar inner = 0;
        for (std::int64_t r = eoff; r < eoff + ecount; ++r) {
          const double v = b.values(r);
          if (s == 1 ? !(v < alpha) : !(v > alpha)) continue;
          for (auto c : F) {
            inner += inside ? A.entries(r, slots[c])
                            : (v - vals[c]) * kernel_value<Scalar>(K, left_quotient(nodes[c], R.centers()[r])) * mu;
          }
        }
        term += std::abs(inner) * scale;
      }
      res.terms.push_back({T, cert.partner, s, alpha, term});
      total += std::pow(term, p);
    }
  }
  res.value = std::pow(total, 1.0 / p);
  return res;
}

double weak_lorentz(std::vector<double> values, double q, double w) {
  if (!(q > 0)) throw std::invalid_argument("weak_lorentz: q must be positive");
  std::sort(values.begin(), values.end(), std::greater<double>());
  double best = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    best = std::max(best, values[k] * std::pow((k + 1) * w, 1.0 / q));
  }
  return best;
}

template <typename Scalar>
MixedNorm mixed_norm(const OperatorMatrix<Scalar>& A, double p) {
  if (!(p > 2) || std::isinf(p)) throw std::invalid_argument("mixed_norm: p must be finite and greater than 2");
  const double mu = A.weight;
  const double pp = p / (p - 1);
  const Eigen::MatrixXd a = A.entries.cwiseAbs() / mu;
  const Eigen::MatrixXd ap = a.array().pow(p).matrix();
  std::vector<double> cols(static_cast<std::size_t>(a.cols())), rows(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index c = 0; c < a.cols(); ++c) cols[c] = std::pow(ap.col(c).sum() * mu, 1.0 / p);
  for (Eigen::Index r = 0; r < a.rows(); ++r) rows[r] = std::pow(ap.row(r).sum() * mu, 1.0 / p);
  return {weak_lorentz(std::move(cols), pp, mu), weak_lorentz(std::move(rows), pp, mu)};
}

OscillationProfile oscillation_profile(const SymbolGrid& b, int B0, int level_coarse, int level_fine, double exponent) {
  check_grid(b);
  const Region& R = *b.region;
  if (B0 < 1) throw std::invalid_argument("oscillation_profile: B0 must be positive");
  if (level_coarse < level_fine) throw std::invalid_argument("oscillation_profile: empty level window");
  if (level_coarse > R.root().level || level_fine - B0 < R.fine_level()) {
    throw std::out_of_range("oscillation_profile: region too shallow for the requested levels");
  }
  OscillationProfile out;
  out.B0 = B0;
  out.exponent = exponent;
  double running = 0.0;
  for (int l = level_coarse; l >= level_fine; --l) {
    std::int64_t sub = 1;
    for (int q = R.fine_level(); q < l - B0; ++q) sub *= children_count(R.dim());
    double level_sum = 0.0;
    for (const TileId& T : R.tiles_at(l)) {
      const auto [off, count] = R.block(T);
      std::vector<double> v;
      v.reserve(static_cast<std::size_t>(count / sub));
      for (std::int64_t s = off; s < off + count; s += sub) v.push_back(b.values.segment(s, sub).mean());
      std::sort(v.begin(), v.end());
      const double m = static_cast<double>(v.size());
      double pair = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) pair += v[k] * (2.0 * k - m + 1);
      level_sum += std::pow(2 * pair / (m * m), exponent);
    }
    out.levels.push_back(l);
    out.per_level.push_back(level_sum);
    running += level_sum;
    out.cumulative.push_back(running);
  }
  return out;
}

OscillationProfile oscillation_profile(const SymbolGrid& b, int B0) {
  check_grid(b);
  const Region& R = *b.region;
  return oscillation_profile(b, B0, R.root().level, R.fine_level() + B0, 2.0 * R.dim() + 2);
}

double sign_lemma_margin(const TileId& T, int B0) {
  if (B0 < 1) throw std::invalid_argument("sign_lemma_margin: B0 must be positive");
  const int n = T.dim();
  std::vector<TileId> sub{T};
  for (int d = 0; d < B0; ++d) {
    std::vector<TileId> next;
    for (const auto& S : sub) {
      for (auto& c : children(S)) next.push_back(std::move(c));
    }
    sub.swap(next);
  }
  const double ratio = 1.0 / lambda_pow(n, B0);
  double worst = INFINITY;
  for (int pattern = 0; pattern < (1 << (2 * n)); ++pattern) {
    auto sgn = [&](int j) { return (pattern >> j) & 1 ? -1 : 1; };
    auto score = [&](const TileId& S) {
      std::int64_t v = 0;
      for (int j = 0; j < 2 * n; ++j) v += sgn(j) * S.m(j);
      return v;
    };
    const auto [lo, hi] = std::minmax_element(sub.begin(), sub.end(),
                                              [&](const TileId& a, const TileId& b) { return score(a) < score(b); });
    double margin = INFINITY;
    for (int j = 0; j < 2 * n; ++j) {
      margin = std::min(margin, (sgn(j) * static_cast<double>(hi->m(j) - lo->m(j)) - 1.0) * ratio);
    }
    worst = std::min(worst, margin);
  }
  return worst;
}

#define HEISENBERG_INSTANTIATE(S)                                                                                   \
  template OperatorMatrix<S> assemble<S>(const SymbolGrid&, const KernelEvaluator&, const AssembleOptions&);       \
  template ReducedOperator<S> reduce<S>(const OperatorMatrix<S>&);                                                  \
  template ReducedOperator<S> assemble_reduced<S>(const SymbolGrid&, const KernelEvaluator&, const AssembleOptions&); \
  template Eigen::VectorXd singular_values<S>(const ReducedOperator<S>&);                                           \
  template Eigen::VectorXd commutator_spectrum<S>(const OperatorMatrix<S>&);                                        \
  template NwoResult nwo_sum<S>(const OperatorMatrix<S>&, const SymbolGrid&, const KernelEvaluator&, double, int,   \
                                const NwoOptions&);                                                                 \
  template MixedNorm mixed_norm<S>(const OperatorMatrix<S>&, double);

HEISENBERG_INSTANTIATE(double)
HEISENBERG_INSTANTIATE(cdouble)

#undef HEISENBERG_INSTANTIATE

}  // namespace heisenberg

#include "heisenberg/haar.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace heisenberg {

double HaarFunction::norm(double p) const {
  const double mu = tile_measure(tile.dim(), tile.level - 1);
  if (std::isinf(p)) return child_coeffs.cwiseAbs().maxCoeff();
  return std::pow(child_coeffs.cwiseAbs().array().pow(p).sum() * mu, 1.0 / p);
}

const Eigen::MatrixXd& haar_unit_basis(int n) {
  static std::mutex mu;
  static std::map<int, Eigen::MatrixXd> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const Eigen::Index M = children_count(n);
  Eigen::MatrixXd Q(M, M - 1);
  const Eigen::VectorXd one = Eigen::VectorXd::Constant(M, 1.0 / std::sqrt(double(M)));
  for (Eigen::Index j = 0; j < M - 1; ++j) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(M);
    v(j) = 1.0;
    v(j + 1) = -1.0;
    v -= one.dot(v) * one;
    for (Eigen::Index i = 0; i < j; ++i) v -= Q.col(i).dot(v) * Q.col(i);
    Q.col(j) = v.normalized();
  }
  return cache.emplace(n, std::move(Q)).first->second;
}

std::vector<HaarFunction> build_basis(const TileId& T) {
  const int n = T.dim();
  const Eigen::MatrixXd& Q = haar_unit_basis(n);
  const double scale = 1.0 / std::sqrt(tile_measure(n, T.level - 1));
  std::vector<HaarFunction> out;
  out.reserve(Q.cols());
  for (Eigen::Index e = 0; e < Q.cols(); ++e) out.push_back({T, static_cast<int>(e) + 1, Q.col(e) * scale});
  return out;
}

std::vector<HaarFunction> build_basis(const Region& region, const TileId& T) {
  if (T.level <= region.fine_level()) throw std::invalid_argument("build_basis: tile at fine level has no children");
  region.block(T);
  return build_basis(T);
}

const Eigen::MatrixXd& HaarCoefficients::at_level(int level) const {
  const int i = region->root().level - level;
  if (i < 0 || i >= static_cast<int>(levels.size())) throw std::out_of_range("HaarCoefficients: level");
  return levels[i];
}

Eigen::MatrixXd& HaarCoefficients::at_level(int level) {
  return const_cast<Eigen::MatrixXd&>(static_cast<const HaarCoefficients&>(*this).at_level(level));
}

double HaarCoefficients::squared_norm() const {
  double s = coarse * coarse;
  for (const auto& L : levels) s += L.squaredNorm();
  return s;
}

namespace {

// Rows: tiles at `level` in canonical order; columns: their child averages.
Eigen::MatrixXd child_average_matrix(const SymbolGrid& b, int level) {
  const Region& R = *b.region;
  const std::int64_t M = children_count(R.dim());
  std::int64_t child_block = 1;
  for (int l = R.fine_level(); l < level - 1; ++l) child_block *= M;
  const std::int64_t tiles = b.size() / (child_block * M);
  Eigen::MatrixXd A(tiles, M);
  for (std::int64_t t = 0; t < tiles; ++t) {
    for (std::int64_t c = 0; c < M; ++c) A(t, c) = b.values.segment((t * M + c) * child_block, child_block).mean();
  }
  return A;
}

}  // namespace

HaarCoefficients haar_expand(const SymbolGrid& b) {
  const Region& R = *b.region;
  const int n = R.dim();
  const Eigen::MatrixXd& Q = haar_unit_basis(n);
  HaarCoefficients c;
  c.region = b.region;
  c.coarse = b.values.mean() * std::sqrt(tile_measure(n, R.root().level));
  for (int level = R.root().level; level > R.fine_level(); --level) {
    const double s = std::sqrt(tile_measure(n, level - 1));
    c.levels.push_back(s * child_average_matrix(b, level) * Q);
  }
  return c;
}

SymbolGrid haar_reconstruct(const HaarCoefficients& c) {
  const Region& R = *c.region;
  const int n = R.dim();
  const std::int64_t M = children_count(n);
  const Eigen::MatrixXd& Q = haar_unit_basis(n);
  if (static_cast<int>(c.levels.size()) != R.depth()) throw std::invalid_argument("haar_reconstruct: level count");
  Eigen::VectorXd avg(1);
  avg(0) = c.coarse / std::sqrt(tile_measure(n, R.root().level));
  for (int i = 0; i < R.depth(); ++i) {
    const Eigen::MatrixXd& L = c.levels[i];
    if (L.rows() != avg.size() || L.cols() != M - 1) throw std::invalid_argument("haar_reconstruct: shape mismatch");
    const double s = 1.0 / std::sqrt(tile_measure(n, R.root().level - i - 1));
    Eigen::VectorXd next(avg.size() * M);
    for (Eigen::Index t = 0; t < avg.size(); ++t) {
      next.segment(t * M, M) = (Q * L.row(t).transpose()) * s;
      next.segment(t * M, M).array() += avg(t);
    }
    avg.swap(next);
  }
  return make_grid(c.region, std::move(avg));
}

SymbolGrid haar_grid(std::shared_ptr<const Region> region, const HaarFunction& h) {
  const auto [offset, count] = region->block(h.tile);
  const std::int64_t M = children_count(region->dim());
  const std::int64_t per_child = count / M;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(region->size());
  for (std::int64_t c = 0; c < M; ++c) v.segment(offset + c * per_child, per_child).setConstant(h.child_coeffs(c));
  return make_grid(std::move(region), std::move(v));
}

Eigen::VectorXd child_averages(const SymbolGrid& b, const TileId& T) {
  const auto [offset, count] = b.region->block(T);
  const std::int64_t M = children_count(T.dim());
  if (count < M) throw std::invalid_argument("child_averages: tile at fine level");
  const std::int64_t per_child = count / M;
  Eigen::VectorXd a(M);
  for (std::int64_t c = 0; c < M; ++c) a(c) = b.values.segment(offset + c * per_child, per_child).mean();
  return a;
}

std::pair<int, double> select_max_haar(const SymbolGrid& b, const TileId& T) {
  const int n = T.dim();
  const Eigen::VectorXd avg = child_averages(b, T);
  const double s = std::sqrt(tile_measure(n, T.level - 1));
  const Eigen::VectorXd coeffs = haar_unit_basis(n).transpose() * avg * s;
  // Differences below rounding level of the inputs count as ties.
  const double tie = 1e-12 * s * avg.norm();
  const double top = coeffs.cwiseAbs().maxCoeff();
  Eigen::Index best = 0;
  while (std::abs(coeffs(best)) < top - tie) ++best;
  return {static_cast<int>(best) + 1, coeffs(best)};
}

SymbolGrid martingale_difference(const SymbolGrid& b, int k) {
  SymbolGrid fine = conditional_expectation(b, k + 1);
  fine.values -= conditional_expectation(b, k).values;
  return fine;
}

}  // namespace heisenberg

#include "heisenberg/certify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace heisenberg {

namespace {

constexpr double kPi = 3.14159265358979323846;

double real_value(const KernelEvaluator& K, const Point& g) {
  return K.is_complex() ? K.complex_value(g).real() : K(g);
}

double magnitude(const KernelEvaluator& K, const Point& g) {
  return K.is_complex() ? std::abs(K.complex_value(g)) : std::abs(K(g));
}

// Connected components of the vertices with mask set, on an adjacency list graph.
int count_components(const std::vector<std::vector<int>>& adj, const std::vector<char>& mask) {
  std::vector<char> seen(mask.size(), 0);
  int comps = 0;
  std::vector<int> stack;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s] || seen[s]) continue;
    ++comps;
    stack.assign(1, static_cast<int>(s));
    seen[s] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[v]) {
        if (mask[w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  return comps;
}

std::vector<Eigen::VectorXd> scan_directions(int n, int count, unsigned seed) {
  std::vector<Eigen::VectorXd> dirs;
  if (n == 1) {
    for (int j = 0; j < count; ++j) {
      const double th = 2 * kPi * (j + 0.5) / count;
      Eigen::VectorXd w(2);
      w << std::cos(th), std::sin(th);
      dirs.push_back(w);
    }
    return dirs;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> G;
  while (static_cast<int>(dirs.size()) < count) {
    Eigen::VectorXd w(2 * n);
    for (int i = 0; i < 2 * n; ++i) w(i) = G(rng);
    if (w.norm() > 1e-6) dirs.push_back(w.normalized());
  }
  return dirs;
}

}  // namespace

nlohmann::ordered_json SphereScan::summary() const {
  nlohmann::ordered_json j;
  j["kernel"] = spec.name();
  j["samples"] = samples();
  j["phi_count"] = phi_count;
  j["direction_count"] = dir_count;
  j["threshold"] = threshold;
  j["zero_fraction"] = zero_fraction;
  j["positive_fraction"] = positive_fraction;
  j["min_magnitude"] = min_magnitude;
  j["max_magnitude"] = max_magnitude;
  j["positive_regions"] = positive_regions;
  j["negative_regions"] = negative_regions;
  return j;
}

SphereScan sphere_scan(const KernelEvaluator& K, std::int64_t resolution, double threshold, unsigned seed) {
  if (resolution < 1000) throw std::invalid_argument("sphere_scan: resolution must be at least 1000");
  const int n = K.spec().n;
  SphereScan s;
  s.spec = K.spec();
  s.threshold = threshold;
  s.phi_count = static_cast<int>(std::ceil(std::sqrt(resolution / 2.0)));
  s.dir_count = static_cast<int>((resolution + s.phi_count - 1) / s.phi_count);
  const auto dirs = scan_directions(n, s.dir_count, seed);
  const int P = s.phi_count, D = s.dir_count;
  s.values.resize(P, D);
  s.magnitudes.resize(P, D);
  s.points.reserve(static_cast<std::size_t>(P) * D);
  for (int i = 0; i < P; ++i) {
    const double phi = -kPi / 2 + kPi * (i + 0.5) / P;
    const double r = std::sqrt(std::cos(phi));
    for (int j = 0; j < D; ++j) {
      HVector<double> x(n), y(n);
      for (int a = 0; a < n; ++a) {
        x(a) = r * dirs[j](a);
        y(a) = r * dirs[j](n + a);
      }
      s.points.emplace_back(x, y, std::sin(phi));
    }
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < P; ++i) {
    for (int j = 0; j < D; ++j) {
      const Point& g = s.point(i, j);
      s.values(i, j) = real_value(K, g);
      s.magnitudes(i, j) = magnitude(K, g);
    }
  }
  const double total = static_cast<double>(s.samples());
  s.zero_fraction = (s.magnitudes.array() < threshold).count() / total;
  s.positive_fraction = (s.values.array() > threshold).count() / total;
  s.min_magnitude = s.magnitudes.minCoeff();
  s.max_magnitude = s.magnitudes.maxCoeff();

  // Sampling graph: neighbours in phi, and neighbouring directions.
  std::vector<std::vector<int>> dir_adj(D);
  if (n == 1) {
    for (int j = 0; j < D; ++j) dir_adj[j] = {(j + 1) % D, (j + D - 1) % D};
  } else {
    const int k = std::min(D - 1, 2 * (2 * n - 1));
    for (int j = 0; j < D; ++j) {
      std::vector<int> idx(D);
      std::iota(idx.begin(), idx.end(), 0);
      std::partial_sort(idx.begin(), idx.begin() + k + 1, idx.end(),
                        [&](int a, int b) { return dirs[a].dot(dirs[j]) > dirs[b].dot(dirs[j]); });
      for (int q = 0; q <= k; ++q) {
        if (idx[q] != j) dir_adj[j].push_back(idx[q]);
      }
    }
  }
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(P) * D);
  for (int i = 0; i < P; ++i) {
    for (int j = 0; j < D; ++j) {
      auto& a = adj[static_cast<std::size_t>(i) * D + j];
      if (i > 0) a.push_back((i - 1) * D + j);
      if (i + 1 < P) a.push_back((i + 1) * D + j);
      for (int jj : dir_adj[j]) a.push_back(i * D + jj);
    }
  }
  std::vector<char> pos(adj.size()), neg(adj.size());
  for (int i = 0; i < P; ++i) {
    for (int j = 0; j < D; ++j) {
      pos[static_cast<std::size_t>(i) * D + j] = s.values(i, j) > threshold;
      neg[static_cast<std::size_t>(i) * D + j] = s.values(i, j) < -threshold;
    }
  }
  s.positive_regions = count_components(adj, pos);
  s.negative_regions = count_components(adj, neg);
  return s;
}

nlohmann::ordered_json Certificate::to_json() const {
  nlohmann::ordered_json j;
  j["found"] = found;
  j["tile"] = tile.to_string();
  j["partner"] = found ? partner.to_string() : "";
  j["container"] = container.to_string();
  j["N"] = N;
  j["sign"] = sign;
  j["C"] = min_scaled;
  j["max_scaled"] = max_scaled;
  j["distance_ratio"] = distance_ratio;
  j["candidates"] = candidates;
  return j;
}

std::vector<Point> certify_directions(const KernelEvaluator& K, const CertifyConfig& cfg) {
  const SphereScan scan = sphere_scan(K, cfg.scan_resolution, 0.0);
  std::vector<int> order(static_cast<std::size_t>(scan.samples()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scan.magnitudes(a / scan.dir_count, a % scan.dir_count) > scan.magnitudes(b / scan.dir_count, b % scan.dir_count);
  });
  std::vector<Point> out;
  for (int idx : order) {
    if (static_cast<int>(out.size()) >= cfg.directions) break;
    const Point& g = scan.points[idx];
    bool far = true;
    for (const Point& h : out) {
      if (max_abs_difference(g, h) < 0.15) {
        far = false;
        break;
      }
    }
    if (far) out.push_back(g);
  }
  return out;
}

SignCheck pair_sign(const TileId& T, const TileId& T_hat, const KernelEvaluator& K, int samples_per_axis) {
  const auto unit = stratified_unit_samples(T.dim(), samples_per_axis);
  std::vector<Point> gs, hs;
  gs.reserve(unit.size());
  hs.reserve(unit.size());
  for (const auto& u : unit) {
    gs.push_back(point_in_tile(T, u));
    hs.push_back(point_in_tile(T_hat, u));
  }
  bool pos = false, neg = false;
  double lo = INFINITY, hi = 0.0;
  for (const Point& h : hs) {
    for (const Point& g : gs) {
      const double v = real_value(K, left_quotient(h, g));
      pos = pos || v > 0;
      neg = neg || v < 0;
      const double a = std::abs(v);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  SignCheck s;
  s.sign = pos && !neg ? 1 : (neg && !pos ? -1 : 0);
  s.min_abs = lo;
  s.max_abs = hi;
  return s;
}

Certificate nondegen_certify_within(const TileId& T, int N, const TileId& container, const KernelEvaluator& K,
                                    const CertifyConfig& cfg, const std::vector<Point>& directions) {
  if (N < 0) throw std::invalid_argument("nondegen_certify: N must be nonnegative");
  if (!is_descendant(T, container)) throw std::invalid_argument("nondegen_certify: tile outside container");
  const int n = T.dim();
  const int Q = 2 * n + 2;
  const double scale = std::pow(static_cast<double>(lambda_of(n)), N + T.level);
  const double weight = std::pow(scale, Q);
  const Point cT = center(T);
  Certificate c;
  c.tile = T;
  c.container = container;
  c.N = N;
  std::set<std::string> tried;
  for (double r : cfg.radii) {
    for (const Point& v : directions) {
      const Point c_hat = cT * inverse(dilate(r * scale, v));
      const TileId T_hat = tile_of(c_hat, T.level, 0.0);
      if (T_hat == T || !is_descendant(T_hat, container)) continue;
      if (!tried.insert(T_hat.to_string()).second) continue;
      ++c.candidates;
      const SignCheck sc = pair_sign(T, T_hat, K, cfg.samples_per_axis);
      const double nominal = magnitude(K, v) * std::pow(r, -Q);
      if (sc.sign != 0 && sc.min_abs * weight >= cfg.min_fraction * nominal) {
        c.found = true;
        c.partner = T_hat;
        c.sign = sc.sign;
        c.min_scaled = sc.min_abs * weight;
        c.max_scaled = sc.max_abs * weight;
        c.distance_ratio = distance(MetricKind::gauge, cT, center(T_hat)) / scale;
        return c;
      }
    }
  }
  return c;
}

Certificate nondegen_certify(const TileId& T, int N, const KernelEvaluator& K, const CertifyConfig& cfg,
                             const std::vector<Point>& directions) {
  if (cfg.A0 < 1) throw std::invalid_argument("nondegen_certify: A0 must be positive");
  return nondegen_certify_within(T, N, ancestor(T, T.level + N + cfg.A0), K, cfg, directions);
}

Certificate nondegen_certify(const TileId& T, int N, const KernelEvaluator& K, const CertifyConfig& cfg) {
  return nondegen_certify(T, N, K, cfg, certify_directions(K, cfg));
}

}  // namespace heisenberg

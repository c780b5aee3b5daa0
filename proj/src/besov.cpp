#include "heisenberg/besov.hpp"

#include "heisenberg/commutator.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace heisenberg {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Closed balls: lattice pairs sit exactly on the shell radii.
constexpr double kTieTol = 1e-9;

struct Centered {
  Eigen::VectorXd s;  // b - background
  std::vector<std::int64_t> support;
  std::vector<char> in_support;
};

Centered centered(const SymbolGrid& b) {
  const double bg = background_value(b);
  Centered c;
  c.s = b.values.array() - bg;
  c.support = symbol_support(b, bg);
  c.in_support.assign(static_cast<std::size_t>(b.size()), 0);
  for (auto i : c.support) c.in_support[static_cast<std::size_t>(i)] = 1;
  return c;
}

void check_p(double p) {
  if (!(p >= 1) || std::isinf(p)) throw std::invalid_argument("besov: p must be finite and at least 1");
}

// Volume of {rho <= 1}: unit 2n-ball times [-1, 1].
double unit_gauge_volume(int n) { return 2 * std::pow(kPi, n) / std::tgamma(n + 1.0); }

void check_window(const Region& R, std::pair<int, int> w) {
  const auto full = region_levels(R);
  if (w.first > w.second || w.first < full.first || w.second > full.second) {
    throw std::out_of_range("besov: level window outside the region's levels");
  }
}

}  // namespace

const char* to_string(BesovMethod m) {
  switch (m) {
    case BesovMethod::direct: return "direct";
    case BesovMethod::shell: return "shell";
    case BesovMethod::martingale: return "martingale";
  }
  return "?";
}

nlohmann::ordered_json BesovEstimate::to_json() const {
  nlohmann::ordered_json j;
  j["method"] = to_string(method);
  j["p"] = p;
  j["alpha"] = alpha;
  j["value"] = value;
  j["errbar"] = errbar;
  j["params"] = {{"k_lo", k_lo}, {"k_hi", k_hi}, {"samples", samples}, {"tail", tail}};
  j["per_level"] = per_level;
  return j;
}

std::pair<int, int> region_levels(const Region& R) { return {-R.root().level, -R.fine_level() - 1}; }

BesovEstimate besov_direct(const SymbolGrid& b, double p, double alpha, const DirectOptions& opt) {
  check_p(p);
  if (!(alpha > 0)) throw std::invalid_argument("besov_direct: alpha must be positive");
  if (opt.shifts_per_shell < 2 || opt.coarse_shells < 0) throw std::invalid_argument("besov_direct: bad sampling options");
  const Region& R = *b.region;
  const int n = R.dim();
  const int Q = 2 * n + 2;
  const double lam = lambda_of(n);
  const double mu = R.fine_measure();
  const double cv = unit_gauge_volume(n);
  const Centered c = centered(b);
  const auto [k_root, k_last] = region_levels(R);

  BesovEstimate e;
  e.method = BesovMethod::direct;
  e.p = p;
  e.alpha = alpha;
  e.k_lo = k_root - opt.coarse_shells;
  e.k_hi = k_last;
  if (c.support.empty()) {
    e.per_level.assign(static_cast<std::size_t>(e.k_hi - e.k_lo + 1), 0.0);
    return e;
  }
  double norm_p = 0.0;
  for (auto i : c.support) norm_p += std::pow(std::abs(c.s(i)), p) * mu;

  auto shifted_value = [&](const Point& g) {
    const std::int64_t slot = R.locate(g, 0.0);
    return slot < 0 ? 0.0 : c.s(slot);
  };
  double total = 0.0, variance = 0.0;
  for (int k = e.k_lo; k <= e.k_hi; ++k) {
    const double r_in = std::pow(lam, -k - 1), r_out = std::pow(lam, -k);
    std::mt19937_64 rng(opt.seed * 1000003ULL + static_cast<unsigned>(k + 1000));
    std::normal_distribution<double> G;
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < opt.shifts_per_shell; ++s) {
      Point g;
      double r = 0.0;
      do {
        HVector<double> x(n), y(n);
        double nrm = 0.0;
        for (int i = 0; i < n; ++i) {
          x(i) = G(rng);
          y(i) = G(rng);
          nrm += x(i) * x(i) + y(i) * y(i);
        }
        const double radius = r_out * std::pow(U(rng), 1.0 / (2 * n)) / std::sqrt(nrm);
        g = Point(x * radius, y * radius, r_out * r_out * (2 * U(rng) - 1));
        r = rho(g);
      } while (r < r_in);
      const Point gi = inverse(g);
      double f = 0.0;
      for (auto i : c.support) {
        const Point& x = R.centers()[static_cast<std::size_t>(i)];
        f += std::pow(std::abs(shifted_value(g * x) - c.s(i)), p);
        const std::int64_t back = R.locate(gi * x, 0.0);
        if (back < 0 || !c.in_support[static_cast<std::size_t>(back)]) f += std::pow(std::abs(c.s(i)), p);
      }
      const double v = f * mu * std::pow(r, -(Q + p * alpha));
      sum += v;
      sum2 += v * v;
    }
    const double m = opt.shifts_per_shell;
    const double measure = cv * (std::pow(r_out, Q) - std::pow(r_in, Q));
    const double mean = sum / m;
    const double var = std::max(sum2 / m - mean * mean, 0.0) / (m - 1);
    e.per_level.push_back(measure * mean);
    total += measure * mean;
    variance += measure * measure * var;
    e.samples += opt.shifts_per_shell;
  }
  if (opt.tail) {
    const double R_out = std::pow(lam, -e.k_lo);
    e.tail = 2 * norm_p * cv * Q / (p * alpha) * std::pow(R_out, -p * alpha);
    total += e.tail;
  }
  e.value = std::pow(total, 1.0 / p);
  // Delta method for the p-th root.
  e.errbar = total > 0 ? e.value * std::sqrt(variance) / (p * total) : 0.0;
  if (e.value > 0 && e.errbar > opt.max_rel_error * e.value) {
    throw std::runtime_error("besov_direct: insufficient samples, error bar " + std::to_string(e.errbar / e.value));
  }
  return e;
}

BesovEstimate besov_shell(const SymbolGrid& b, double p, std::optional<std::pair<int, int>> levels) {
  check_p(p);
  const Region& R = *b.region;
  const int n = R.dim();
  const int Q = 2 * n + 2;
  const double mu = R.fine_measure();
  const auto w = levels.value_or(region_levels(R));
  check_window(R, w);
  const int L = w.second - w.first + 1;
  const Centered c = centered(b);
  BesovEstimate e;
  e.method = BesovMethod::shell;
  e.p = p;
  e.alpha = Q / p;
  e.k_lo = w.first;
  e.k_hi = w.second;
  const auto S = static_cast<Eigen::Index>(c.support.size());
  const std::int64_t N = R.size();
  // Flat center coordinates: x_1..x_n, y_1..y_n, t per tile.
  Eigen::MatrixXd xyz(2 * n + 1, N);
  for (std::int64_t i = 0; i < N; ++i) {
    const Point& g = R.centers()[static_cast<std::size_t>(i)];
    for (int a = 0; a < n; ++a) {
      xyz(a, i) = g.x()(a);
      xyz(n + a, i) = g.y()(a);
    }
    xyz(2 * n, i) = g.t();
  }
  std::vector<double> thr2(static_cast<std::size_t>(L));
  for (int q = 0; q < L; ++q) {
    const double r = lambda_pow(n, -(w.first + q) - 1) * (1 + kTieTol);
    thr2[q] = r * r;
  }
  // bucket(x, k): pair weight for pairs whose largest admissible level is k.
  Eigen::MatrixXd bucket = Eigen::MatrixXd::Zero(S, L);
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index a = 0; a < S; ++a) {
    const std::int64_t x = c.support[a];
    const double own = std::pow(std::abs(c.s(x)), p);
    const double* h = &xyz(0, x);
    for (std::int64_t y = 0; y < N; ++y) {
      if (y == x) continue;
      const bool ys = c.in_support[static_cast<std::size_t>(y)];
      if (ys && y < x) continue;
      // Squared gauge norm of c_x^{-1} c_y.
      const double* g = &xyz(0, y);
      double t = g[2 * n] - h[2 * n];
      double d2 = 0.0;
      for (int i = 0; i < n; ++i) {
        t += 2 * (h[i] * g[n + i] - h[n + i] * g[i]);
        const double dx = g[i] - h[i], dy = g[n + i] - h[n + i];
        d2 = std::max(d2, std::max(dx * dx, dy * dy));
      }
      d2 = std::max(d2, std::abs(t));
      if (d2 > thr2[0]) continue;
      int q = 0;
      while (q + 1 < L && d2 <= thr2[q + 1]) ++q;
      // Ordered pairs: (x, y) and (y, x).
      bucket(a, q) += 2 * (ys ? std::pow(std::abs(c.s(x) - c.s(y)), p) : own) * mu * mu;
    }
  }
  double total = 0.0, running = 0.0;
  e.per_level.assign(static_cast<std::size_t>(L), 0.0);
  for (int q = L - 1; q >= 0; --q) {
    running += bucket.col(q).sum();
    e.per_level[q] = std::pow(lambda_pow(n, w.first + q), 2 * Q) * running;
  }
  for (double v : e.per_level) total += v;
  e.value = std::pow(total, 1.0 / p);
  return e;
}

BesovEstimate besov_martingale(const SymbolGrid& b, double p, const MartingaleOptions& opt) {
  check_p(p);
  const Region& R = *b.region;
  const int n = R.dim();
  const int Q = 2 * n + 2;
  const double mu = R.fine_measure();
  const auto w = opt.levels.value_or(region_levels(R));
  check_window(R, w);
  BesovEstimate e;
  e.method = BesovMethod::martingale;
  e.p = p;
  e.alpha = Q / p;
  e.k_lo = w.first;
  e.k_hi = w.second;
  const Centered c = centered(b);
  const SymbolGrid s = make_grid(b.region, c.s);
  double total = 0.0;
  for (int k = w.first; k <= w.second; ++k) {
    const Eigen::VectorXd d = conditional_expectation(s, k + 1).values - conditional_expectation(s, k).values;
    const double v = std::pow(lambda_pow(n, k), Q) * d.array().abs().pow(p).sum() * mu;
    e.per_level.push_back(v);
    total += v;
  }
  if (opt.coarse_tail > 0 && !opt.levels) {
    const double I = c.s.sum() * mu;
    for (int j = 1; j <= opt.coarse_tail; ++j) {
      const int level = R.root().level + j;
      const double small = tile_measure(n, level - 1), big = tile_measure(n, level);
      const double v = small * std::pow(std::abs(I / small - I / big), p) + (big - small) * std::pow(std::abs(I / big), p);
      e.tail += std::pow(lambda_pow(n, -level), Q) * v;
    }
    total += e.tail;
  }
  e.value = std::pow(total, 1.0 / p);
  return e;
}

}  // namespace heisenberg

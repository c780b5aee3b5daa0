#include "heisenberg/spectra.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

namespace heisenberg {

Eigen::VectorXd sorted_spectrum(Eigen::VectorXd s) {
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s(i))) throw std::invalid_argument("sorted_spectrum: non-finite value");
    s(i) = std::max(s(i), 0.0);
  }
  std::sort(s.data(), s.data() + s.size(), std::greater<double>());
  return s;
}

double schatten_power_sum(const Eigen::VectorXd& s, double p) {
  if (!(p > 0) || std::isinf(p)) throw std::invalid_argument("schatten_power_sum: p must be positive and finite");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) sum += std::pow(s(i), p);
  return sum;
}

double schatten_norm(const Eigen::VectorXd& s, double p) {
  if (!(p > 0)) throw std::invalid_argument("schatten_norm: p must be positive");
  if (s.size() == 0) return 0.0;
  const double top = s.cwiseAbs().maxCoeff();
  if (std::isinf(p) || top == 0.0) return top;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) sum += std::pow(s(i) / top, p);
  return top * std::pow(sum, 1.0 / p);
}

double schatten_weak(const Eigen::VectorXd& s, double p) {
  if (!(p > 0)) throw std::invalid_argument("schatten_weak: p must be positive");
  const Eigen::VectorXd t = sorted_spectrum(s);
  double best = 0.0;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    best = std::max(best, std::isinf(p) ? t(k) : std::pow(static_cast<double>(k + 1), 1.0 / p) * t(k));
  }
  return best;
}

SpectrumReport spectrum_report(Eigen::VectorXd singular_values, const std::vector<double>& ps, std::string source_hash) {
  SpectrumReport r;
  r.singular_values = sorted_spectrum(std::move(singular_values));
  for (double p : ps) {
    r.schatten[p] = schatten_norm(r.singular_values, p);
    r.weak_schatten[p] = schatten_weak(r.singular_values, p);
  }
  r.source_hash = std::move(source_hash);
  return r;
}

nlohmann::ordered_json SpectrumReport::to_json(int max_values) const {
  nlohmann::ordered_json j;
  j["source_hash"] = source_hash;
  j["dimension"] = singular_values.size();
  nlohmann::ordered_json sp = nlohmann::ordered_json::array(), wk = nlohmann::ordered_json::array();
  for (const auto& [p, v] : schatten) sp.push_back({{"p", p}, {"value", v}});
  for (const auto& [p, v] : weak_schatten) wk.push_back({{"p", p}, {"value", v}});
  j["schatten"] = sp;
  j["weak_schatten"] = wk;
  const Eigen::Index m = max_values < 0 ? singular_values.size() : std::min<Eigen::Index>(max_values, singular_values.size());
  j["singular_values"] = std::vector<double>(singular_values.data(), singular_values.data() + m);
  return j;
}

std::string SpectrumReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17) << "index,singular_value\n";
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) os << i + 1 << "," << singular_values(i) << "\n";
  return os.str();
}

}  // namespace heisenberg

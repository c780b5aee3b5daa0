#include "heisenberg/experiments.hpp"

#include "heisenberg/haar.hpp"
#include "heisenberg/io.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#ifndef HEISENBERG_BUILD_ID
#define HEISENBERG_BUILD_ID "unknown"
#endif

namespace heisenberg {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------- config

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

QuadratureConfig quadrature_from_json(const json& j) {
  check_keys(j, "quadrature", {"lambda_cutoff", "lambda_nodes", "h_substitution", "h_nodes", "abs_tol", "rel_tol"});
  QuadratureConfig q;
  read(j, "lambda_cutoff", q.lambda_cutoff, "quadrature");
  read(j, "lambda_nodes", q.lambda_nodes, "quadrature");
  read(j, "h_substitution", q.h_substitution, "quadrature");
  read(j, "h_nodes", q.h_nodes, "quadrature");
  read(j, "abs_tol", q.abs_tol, "quadrature");
  read(j, "rel_tol", q.rel_tol, "quadrature");
  return q;
}

}  // namespace

ojson to_json(const QuadratureConfig& q) {
  ojson j;
  j["lambda_cutoff"] = q.lambda_cutoff;
  j["lambda_nodes"] = q.lambda_nodes;
  j["h_substitution"] = q.h_substitution;
  j["h_nodes"] = q.h_nodes;
  j["abs_tol"] = q.abs_tol;
  j["rel_tol"] = q.rel_tol;
  return j;
}

namespace {

CertifyConfig certify_from_json(const json& j) {
  check_keys(j, "certify", {"A0", "samples_per_axis", "radii", "directions", "scan_resolution", "min_fraction"});
  CertifyConfig c;
  read(j, "A0", c.A0, "certify");
  read(j, "samples_per_axis", c.samples_per_axis, "certify");
  read(j, "radii", c.radii, "certify");
  read(j, "directions", c.directions, "certify");
  read(j, "scan_resolution", c.scan_resolution, "certify");
  read(j, "min_fraction", c.min_fraction, "certify");
  return c;
}

}  // namespace

ojson to_json(const CertifyConfig& c) {
  ojson j;
  j["A0"] = c.A0;
  j["samples_per_axis"] = c.samples_per_axis;
  j["radii"] = c.radii;
  j["directions"] = c.directions;
  j["scan_resolution"] = c.scan_resolution;
  j["min_fraction"] = c.min_fraction;
  return j;
}

namespace {

SymbolFamilyConfig symbols_from_json(const json& j) {
  check_keys(j, "symbols", {"family", "radius", "amplitude", "scales", "translates", "count", "value"});
  SymbolFamilyConfig s;
  read(j, "family", s.family, "symbols");
  read(j, "radius", s.radius, "symbols");
  read(j, "amplitude", s.amplitude, "symbols");
  read(j, "scales", s.scales, "symbols");
  read(j, "translates", s.translates, "symbols");
  read(j, "count", s.count, "symbols");
  read(j, "value", s.value, "symbols");
  return s;
}

}  // namespace

ojson to_json(const SymbolFamilyConfig& s) {
  ojson j;
  j["family"] = s.family;
  j["radius"] = s.radius;
  j["amplitude"] = s.amplitude;
  j["scales"] = s.scales;
  j["translates"] = s.translates;
  j["count"] = s.count;
  j["value"] = s.value;
  return j;
}

namespace {

Tolerances tolerances_from_json(const json& j) {
  check_keys(j, "tolerances", {"spread", "refinement", "growth", "spectral_change", "nwo_constant", "nwo_skip_fraction",
                               "russo_constant", "mixed_besov_spread"});
  Tolerances t;
  read(j, "spread", t.spread, "tolerances");
  read(j, "refinement", t.refinement, "tolerances");
  read(j, "growth", t.growth, "tolerances");
  read(j, "spectral_change", t.spectral_change, "tolerances");
  read(j, "nwo_constant", t.nwo_constant, "tolerances");
  read(j, "nwo_skip_fraction", t.nwo_skip_fraction, "tolerances");
  read(j, "russo_constant", t.russo_constant, "tolerances");
  read(j, "mixed_besov_spread", t.mixed_besov_spread, "tolerances");
  return t;
}

}  // namespace

ojson to_json(const Tolerances& t) {
  ojson j;
  j["spread"] = t.spread;
  j["refinement"] = t.refinement;
  j["growth"] = t.growth;
  j["spectral_change"] = t.spectral_change;
  j["nwo_constant"] = t.nwo_constant;
  j["nwo_skip_fraction"] = t.nwo_skip_fraction;
  j["russo_constant"] = t.russo_constant;
  j["mixed_besov_spread"] = t.mixed_besov_spread;
  return j;
}

namespace {

// ---------------------------------------------------------------- small helpers

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Scientific notation keeps the CSV stable and readable.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// JSON cannot carry inf/nan; they become strings.
json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

Point random_point(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> U(-scale, scale);
  HVector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x(i) = U(rng);
    y(i) = U(rng);
  }
  return Point(x, y, U(rng) * scale * scale);
}

Point koranyi_sphere_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(-0.5 * kPi, 0.5 * kPi);
  std::normal_distribution<double> G;
  const double phi = U(rng);
  HVector<double> x(n), y(n);
  double s = 0;
  for (int i = 0; i < n; ++i) {
    x(i) = G(rng);
    y(i) = G(rng);
    s += x(i) * x(i) + y(i) * y(i);
  }
  const double r = std::sqrt(std::cos(phi) / s);
  return Point(x * r, y * r, std::sin(phi));
}

double rel_err(double a, double b) {
  const double d = std::abs(a - b);
  return d == 0 ? 0.0 : d / std::max(std::abs(a), std::abs(b));
}

// Membership in the base tile by plain recursion on the refinement equation; shares no
// code with tile_of / contains.
double f_reference(int n, HVector<double> x, HVector<double> y, int depth) {
  if (depth == 0) return 1.0 / (4.0 * n);
  const double lam = 2 * n + 1;
  HVector<double> dx(n), dy(n);
  for (int i = 0; i < n; ++i) {
    dx(i) = std::floor(lam * x(i) + 0.5);
    dy(i) = std::floor(lam * y(i) + 0.5);
  }
  const double cross = 2.0 * lam * (dy.dot(x) - dx.dot(y));
  return ((n + 1) + cross + f_reference(n, lam * x - dx, lam * y - dy, depth - 1)) / (lam * lam);
}

bool in_base_tile_reference(const Point& q) {
  const int n = q.dim();
  for (int i = 0; i < 2 * n; ++i) {
    if (q.u(i) < -0.5 || q.u(i) >= 0.5) return false;
  }
  const double f = f_reference(n, q.x(), q.y(), 16);
  return q.t() >= f - 1.0 / (2 * n) && q.t() < f;
}

KernelEvaluator make_evaluator(const ExperimentConfig& cfg, const KernelSpec& spec) {
  return KernelEvaluator::make(spec, cfg.quadrature, cfg.cache_dir, cfg.table_nodes);
}

bool& progress_flag() {
  static bool on = false;
  return on;
}

bool progress_enabled() { return progress_flag(); }

class ReportBuilder {
 public:
  ReportBuilder(std::string experiment, const ExperimentConfig& cfg, bool fatal)
      : cfg_(cfg), fatal_(fatal) {
    report_.experiment = std::move(experiment);
    report_.config_hash = cfg.hash();
    report_.build_id = build_id();
  }

  // Runs one check; exceptions become failing rows, or abort when the report is fatal.
  void check(const std::string& id, const std::function<void(ReportRow&)>& body) {
    ReportRow row;
    row.id = id;
    const auto t0 = Clock::now();
    try {
      body(row);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      if (fatal_) throw StageError(report_.experiment + "/" + id, report_.config_hash, e.what());
      row.pass = false;
      row.quantities["error"] = e.what();
    }
    row.runtime = seconds_since(t0);
    if (progress_enabled()) {
      std::fprintf(stderr, "[%s] %-28s %s %8.1f s\n", report_.experiment.c_str(), row.id.c_str(),
                   row.pass ? "ok  " : "FAIL", row.runtime);
    }
    report_.rows.push_back(std::move(row));
  }

  void plot(const std::string& name, std::string csv) { report_.plots[name] = std::move(csv); }
  Report finish() { return std::move(report_); }
  const ExperimentConfig& cfg() const { return cfg_; }

 private:
  const ExperimentConfig& cfg_;
  bool fatal_;
  Report report_;
};

void flatten(const ojson& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
  } else if (j.is_number()) {
    out.emplace_back(prefix, num(j.get<double>()));
  } else if (j.is_boolean()) {
    out.emplace_back(prefix, j.get<bool>() ? "1" : "0");
  } else if (j.is_string()) {
    std::string s = j.get<std::string>();
    std::replace(s.begin(), s.end(), ',', ';');
    out.emplace_back(prefix, s);
  }
}

std::string scale_tag(double p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

int homogeneous_dim(int n) { return 2 * n + 2; }

}  // namespace

// ---------------------------------------------------------------- ExperimentConfig

KernelSpec kernel_spec_from_json(const json& j) {
  check_keys(j, "kernel", {"kind", "ell", "j", "k", "c"});
  if (!j.contains("kind")) throw ConfigError("kernel.kind is required");
  KernelSpec s;
  try {
    s.kind = kernel_kind_from_string(j.at("kind").get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(std::string("kernel.kind: ") + e.what());
  }
  read(j, "ell", s.ell, "kernel");
  read(j, "j", s.j, "kernel");
  read(j, "k", s.k, "kernel");
  read(j, "c", s.cs_constant, "kernel");
  return s;
}

ojson to_json(const KernelSpec& spec) {
  ojson j;
  j["kind"] = to_string(spec.kind);
  j["ell"] = spec.ell;
  j["j"] = spec.j;
  j["k"] = spec.k;
  j["c"] = spec.cs_constant;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, "config",
             {"n", "depth", "kernel", "symbols", "p", "levels", "quadrature", "table_nodes", "cache_dir", "output_dir",
              "seed", "mc_shifts", "near_samples", "refine", "oscillation_B0", "certify", "certify_tiles",
              "structure_samples", "tolerances"});
  ExperimentConfig c;
  read(j, "n", c.n, "config");
  read(j, "depth", c.depth, "config");
  if (j.contains("kernel")) c.kernel = kernel_spec_from_json(j.at("kernel"));
  c.kernel.n = c.n;
  if (j.contains("symbols")) c.symbols = symbols_from_json(j.at("symbols"));
  read(j, "p", c.p, "config");
  if (j.contains("levels") && !j.at("levels").is_null()) {
    const auto& l = j.at("levels");
    if (!l.is_array() || l.size() != 2) throw ConfigError("config.levels must be [k_lo, k_hi] or null");
    c.levels = std::make_pair(l[0].get<int>(), l[1].get<int>());
  }
  if (j.contains("quadrature")) c.quadrature = quadrature_from_json(j.at("quadrature"));
  read(j, "table_nodes", c.table_nodes, "config");
  read(j, "cache_dir", c.cache_dir, "config");
  read(j, "output_dir", c.output_dir, "config");
  read(j, "seed", c.seed, "config");
  read(j, "mc_shifts", c.mc_shifts, "config");
  read(j, "near_samples", c.near_samples, "config");
  read(j, "refine", c.refine, "config");
  read(j, "oscillation_B0", c.oscillation_B0, "config");
  if (j.contains("certify")) c.certify = certify_from_json(j.at("certify"));
  read(j, "certify_tiles", c.certify_tiles, "config");
  read(j, "structure_samples", c.structure_samples, "config");
  if (j.contains("tolerances")) c.tol = tolerances_from_json(j.at("tolerances"));
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return from_json(j);
}

ojson ExperimentConfig::to_json() const {
  ojson j;
  j["n"] = n;
  j["depth"] = depth;
  j["kernel"] = heisenberg::to_json(kernel);
  j["symbols"] = heisenberg::to_json(symbols);
  j["p"] = p;
  j["levels"] = levels ? ojson::array({levels->first, levels->second}) : ojson();
  j["quadrature"] = heisenberg::to_json(quadrature);
  j["table_nodes"] = table_nodes;
  j["cache_dir"] = cache_dir;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["mc_shifts"] = mc_shifts;
  j["near_samples"] = near_samples;
  j["refine"] = refine;
  j["oscillation_B0"] = oscillation_B0;
  j["certify"] = heisenberg::to_json(certify);
  j["certify_tiles"] = certify_tiles;
  j["structure_samples"] = structure_samples;
  j["tolerances"] = heisenberg::to_json(tol);
  return j;
}

std::string ExperimentConfig::hash() const {
  ojson j = to_json();
  // Where files go does not change any result.
  j.erase("cache_dir");
  j.erase("output_dir");
  return fnv1a_hex(j.dump());
}

void ExperimentConfig::validate() const {
  if (n < 1 || n > kMaxN) throw ConfigError("n must be in [1, " + std::to_string(kMaxN) + "]");
  if (depth < 1 || depth > 4) throw ConfigError("depth must be in [1, 4]");
  if (kernel.n != n) throw ConfigError("kernel.n must equal n");
  try {
    kernel.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  for (double q : p) {
    if (!(q >= 1) || !std::isfinite(q)) throw ConfigError("every p must be finite and >= 1");
  }
  const auto& s = symbols;
  if (s.family != "bump" && s.family != "random_bump" && s.family != "constant") {
    throw ConfigError("symbols.family must be bump, random_bump or constant");
  }
  if (!(s.radius > 0)) throw ConfigError("symbols.radius must be positive");
  if (s.family == "bump") {
    if (s.scales.empty() || s.translates.empty()) throw ConfigError("bump family needs scales and translates");
    for (const auto& c : s.translates) {
      if (static_cast<int>(c.size()) != 2 * n + 1) throw ConfigError("each translate needs 2n+1 coordinates");
    }
  }
  if (s.family == "random_bump" && s.count < 1) throw ConfigError("symbols.count must be positive");
  if (table_nodes < 5) throw ConfigError("table_nodes must be at least 5");
  if (mc_shifts < 10) throw ConfigError("mc_shifts must be at least 10");
  if (near_samples < 0) throw ConfigError("near_samples must be nonnegative");
  if (oscillation_B0 < 1 || oscillation_B0 >= depth) throw ConfigError("oscillation_B0 must be in [1, depth)");
  if (certify_tiles < 1) throw ConfigError("certify_tiles must be positive");
  if (structure_samples < 1000) throw ConfigError("structure_samples must be at least 1000");
}

// ---------------------------------------------------------------- symbols

std::vector<SymbolInstance> family_instances(const ExperimentConfig& cfg) {
  const int n = cfg.n;
  const auto& s = cfg.symbols;
  std::vector<SymbolInstance> out;
  if (s.family == "constant") {
    out.push_back({"constant", 0, true, Symbol::constant(n, s.value), origin_tile(n, 0)});
  } else if (s.family == "bump") {
    for (int scale : s.scales) {
      for (std::size_t t = 0; t < s.translates.size(); ++t) {
        const auto& c = s.translates[t];
        HVector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
          x(i) = c[i];
          y(i) = c[n + i];
        }
        const Symbol base = Symbol::bump(Point(x, y, c[2 * n]), s.radius, s.amplitude);
        SymbolInstance inst;
        inst.id = "bump_s" + std::to_string(scale) + "_t" + std::to_string(t);
        inst.scale = scale;
        inst.symbol = base.dilated(lambda_pow(n, scale));
        inst.root = origin_tile(n, -scale);
        out.push_back(std::move(inst));
      }
    }
  } else {
    std::mt19937_64 rng(cfg.seed * 7919 + 17);
    std::uniform_real_distribution<double> C(-0.08, 0.08), T(-0.03, 0.03), R(0.12, 0.24), A(0.5, 1.5);
    for (int i = 0; i < s.count; ++i) {
      HVector<double> x(n), y(n);
      for (int a = 0; a < n; ++a) {
        x(a) = C(rng);
        y(a) = C(rng);
      }
      const double t = T(rng);
      const double r = R(rng);
      const double amp = A(rng);
      char id[32];
      std::snprintf(id, sizeof id, "random_%02d", i);
      out.push_back({id, 0, false, Symbol::bump(Point(x, y, t), r, amp), origin_tile(n, 0)});
    }
  }
  return out;
}

std::size_t smallest_instance(const std::vector<SymbolInstance>& family) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < family.size(); ++i) {
    if (family[i].scale > family[best].scale) best = i;
  }
  return best;
}

SymbolGrid instance_grid(const SymbolInstance& s, int depth) {
  return sample_symbol(std::make_shared<const Region>(s.root, depth), s.symbol);
}

// ---------------------------------------------------------------- reports

std::string build_id() { return HEISENBERG_BUILD_ID; }

void set_progress(bool on) { progress_flag() = on; }

bool Report::pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.pass; });
}

ojson Report::to_json() const {
  ojson j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["build_id"] = build_id;
  j["pass"] = pass();
  ojson rs = ojson::array();
  for (const auto& r : rows) {
    ojson row;
    row["id"] = r.id;
    row["config_hash"] = config_hash;
    row["build_id"] = build_id;
    row["pass"] = r.pass;
    row["quantities"] = r.quantities;
    row["tolerance"] = r.tolerance;
    rs.push_back(std::move(row));
  }
  j["rows"] = std::move(rs);
  return j;
}

std::string Report::to_csv() const {
  std::ostringstream os;
  os << "experiment,row,quantity,value,pass,config_hash,build_id\n";
  for (const auto& r : rows) {
    std::vector<std::pair<std::string, std::string>> flat;
    flatten(r.quantities, "", flat);
    flatten(r.tolerance, "tolerance", flat);
    for (const auto& [k, v] : flat) {
      os << experiment << ',' << r.id << ',' << k << ',' << v << ',' << (r.pass ? 1 : 0) << ',' << config_hash << ','
         << build_id << '\n';
    }
  }
  return os.str();
}

ojson Report::timings() const {
  ojson j;
  j["experiment"] = experiment;
  double total = 0;
  for (const auto& r : rows) {
    j["rows"][r.id] = r.runtime;
    total += r.runtime;
  }
  j["total_seconds"] = total;
  return j;
}

void Report::write(const std::string& dir, bool plots_too) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base = fs::path(dir) / experiment;
  {
    std::ofstream out(base.string() + ".json");
    out << to_json().dump(2) << '\n';
  }
  {
    std::ofstream out(base.string() + ".csv");
    out << to_csv();
  }
  {
    std::ofstream out(base.string() + ".timings.json");
    out << timings().dump(2) << '\n';
  }
  if (plots_too && !plots.empty()) {
    const fs::path pdir = fs::path(dir) / "plots";
    fs::create_directories(pdir);
    for (const auto& [name, csv] : plots) {
      std::ofstream out((pdir / (experiment + "_" + name + ".csv")).string());
      out << csv;
    }
  }
}

// ---------------------------------------------------------------- spectrum cache

namespace {

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, Eigen::VectorXd>& spectrum_cache() {
  static std::map<std::string, Eigen::VectorXd> c;
  return c;
}

template <typename Scalar>
Eigen::VectorXd compute_spectrum(const SymbolGrid& b, const KernelEvaluator& K, const AssembleOptions& opt) {
  const double bg = background_value(b);
  const auto support = symbol_support(b, bg);
  if (4 * static_cast<std::int64_t>(support.size()) < b.size()) {
    return singular_values(assemble_reduced<Scalar>(b, K, opt));
  }
  return commutator_spectrum(assemble<Scalar>(b, K, opt));
}

}  // namespace

const Eigen::VectorXd& cached_spectrum(const SymbolGrid& b, const ExperimentConfig& cfg) {
  const std::string key = symbol_hash(b) + "|" + cfg.kernel.name() + "|" + std::to_string(cfg.near_samples) + "|" +
                          std::to_string(cfg.table_nodes) + "|" + fnv1a_hex(to_json(cfg.quadrature).dump());
  {
    std::lock_guard<std::mutex> lock(cache_mutex());
    auto it = spectrum_cache().find(key);
    if (it != spectrum_cache().end()) return it->second;
  }
  const KernelEvaluator K = make_evaluator(cfg, cfg.kernel);
  AssembleOptions opt;
  opt.near_samples = cfg.near_samples;
  Eigen::VectorXd sv = K.is_complex() ? compute_spectrum<cdouble>(b, K, opt) : compute_spectrum<double>(b, K, opt);
  std::lock_guard<std::mutex> lock(cache_mutex());
  return spectrum_cache().emplace(key, std::move(sv)).first->second;
}

void clear_spectrum_cache() {
  std::lock_guard<std::mutex> lock(cache_mutex());
  spectrum_cache().clear();
}

// ---------------------------------------------------------------- structure

Report run_structure_checks(const ExperimentConfig& cfg) {
  ReportBuilder rb("structure", cfg, false);
  const int n = cfg.n;
  const int cases = 10000;

  rb.check("group.associativity", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed);
    double worst = 0;
    for (int i = 0; i < cases; ++i) {
      const Point a = random_point(rng, n, 2.0), b = random_point(rng, n, 2.0), c = random_point(rng, n, 2.0);
      const Point l = (a * b) * c, r = a * (b * c);
      worst = std::max(worst, max_abs_difference(l, r) / std::max(1.0, max_abs_coordinate(l)));
    }
    row.quantities["cases"] = cases;
    row.quantities["max_rel_err"] = worst;
    row.tolerance["max_rel_err"] = 1e-12;
    row.pass = worst <= 1e-12;
  });

  rb.check("group.identity_inverse", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 1);
    const Point e(n);
    double worst = 0;
    for (int i = 0; i < cases; ++i) {
      const Point g = random_point(rng, n, 2.0);
      const double s = std::max(1.0, max_abs_coordinate(g));
      worst = std::max({worst, max_abs_difference(g * e, g) / s, max_abs_difference(e * g, g) / s,
                        max_abs_coordinate(g * inverse(g)) / s, max_abs_coordinate(inverse(g) * g) / s});
    }
    row.quantities["cases"] = cases;
    row.quantities["max_rel_err"] = worst;
    row.tolerance["max_rel_err"] = 1e-12;
    row.pass = worst <= 1e-12;
  });

  rb.check("group.left_invariance", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 2);
    double worst = 0;
    for (int i = 0; i < cases; ++i) {
      const Point h = random_point(rng, n, 2.0), g = random_point(rng, n, 2.0), g2 = random_point(rng, n, 2.0);
      for (MetricKind kind : {MetricKind::rho_max, MetricKind::gauge, MetricKind::koranyi}) {
        worst = std::max(worst, rel_err(distance(kind, h * g, h * g2), distance(kind, g, g2)));
      }
    }
    row.quantities["cases"] = cases;
    row.quantities["max_rel_err"] = worst;
    row.tolerance["max_rel_err"] = 1e-12;
    row.pass = worst <= 1e-12;
  });

  rb.check("group.dilation_homogeneity", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 3);
    std::uniform_real_distribution<double> L(std::log(0.1), std::log(10.0));
    double worst = 0;
    for (int i = 0; i < cases; ++i) {
      const Point g = random_point(rng, n, 2.0), h = random_point(rng, n, 2.0);
      const double r = std::exp(L(rng));
      for (MetricKind kind : {MetricKind::rho_max, MetricKind::gauge, MetricKind::koranyi}) {
        worst = std::max(worst, rel_err(norm(kind, dilate(r, g)), r * norm(kind, g)));
      }
      const Point l = dilate(r, g * h), rr = dilate(r, g) * dilate(r, h);
      worst = std::max(worst, max_abs_difference(l, rr) / std::max(1.0, max_abs_coordinate(l)));
    }
    row.quantities["cases"] = cases;
    row.quantities["max_rel_err"] = worst;
    row.tolerance["max_rel_err"] = 1e-12;
    row.pass = worst <= 1e-12;
  });

  rb.check("tiling.partition_nesting", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 4);
    const std::int64_t samples = cfg.structure_samples;
    std::int64_t boundary = 0, violations = 0, nesting = 0;
    for (std::int64_t i = 0; i < samples; ++i) {
      const int level = static_cast<int>(i % 7) - 3;
      const Point g = random_point(rng, n, 3.0 * lambda_pow(n, level));
      TileId T;
      try {
        T = tile_of(g, level);
      } catch (const BoundaryError&) {
        ++boundary;
        continue;
      }
      // Exactly one tile among the lattice neighbours claims g, and it is T.
      const double s = lambda_pow(n, level);
      const Point q0(g.x() / s, g.y() / s, g.t() / (s * s));
      int claims = 0;
      const int dirs = 2 * n;
      std::int64_t combos = 1;
      for (int d = 0; d < dirs; ++d) combos *= 3;
      for (std::int64_t c = 0; c < combos; ++c) {
        IVector m = T.m;
        std::int64_t code = c;
        bool centre = true;
        for (int d = 0; d < dirs; ++d) {
          const int off = static_cast<int>(code % 3) - 1;
          code /= 3;
          m(d) += off;
          centre = centre && off == 0;
        }
        for (std::int64_t dk = -4 * n - 4; dk <= 4 * n + 4; ++dk) {
          if (in_base_tile_reference(left_quotient(lattice_point(m, T.k + dk), q0))) {
            ++claims;
            if (!(centre && dk == 0)) ++violations;
          }
        }
      }
      if (claims != 1) ++violations;
      try {
        if (ancestor(T, level + 1) != tile_of(g, level + 1)) ++nesting;
      } catch (const BoundaryError&) {
        ++boundary;
      }
    }
    const double excluded = static_cast<double>(boundary) / samples;
    row.quantities["samples"] = samples;
    row.quantities["partition_violations"] = violations;
    row.quantities["nesting_violations"] = nesting;
    row.quantities["boundary_excluded_fraction"] = excluded;
    row.tolerance["violations"] = 0;
    row.tolerance["boundary_excluded_fraction"] = 0.005;
    row.pass = violations == 0 && nesting == 0 && excluded < 0.005;
  });

  rb.check("tiling.child_count", [&](ReportRow& row) {
    const std::int64_t expected = static_cast<std::int64_t>(std::llround(std::pow(2 * n + 1, 2 * n + 2)));
    const auto kids = children(origin_tile(n, 0));
    std::set<std::string> distinct;
    for (const auto& c : kids) distinct.insert(c.to_string());
    row.quantities["children"] = static_cast<std::int64_t>(kids.size());
    row.quantities["distinct"] = static_cast<std::int64_t>(distinct.size());
    row.tolerance["children"] = expected;
    row.pass = static_cast<std::int64_t>(kids.size()) == expected && distinct.size() == kids.size() &&
               children_count(n) == expected;
  });

  rb.check("tiling.base_measure", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 5);
    std::uniform_real_distribution<double> U(-0.5, 0.5), V(-1.0, 1.0);
    const std::int64_t N = 1000000;
    const TileId T0 = origin_tile(n, 0);
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < N; ++i) {
      HVector<double> x(n), y(n);
      for (int a = 0; a < n; ++a) {
        x(a) = U(rng);
        y(a) = U(rng);
      }
      if (contains(T0, Point(x, y, V(rng)))) ++hits;
    }
    const double box = 2.0;
    const double f = static_cast<double>(hits) / N;
    const double est = box * f, sigma = box * std::sqrt(f * (1 - f) / N);
    const double expected = 1.0 / (2 * n);
    row.quantities["samples"] = N;
    row.quantities["measure"] = est;
    row.quantities["sigma"] = sigma;
    row.quantities["expected"] = expected;
    row.tolerance["sigmas"] = 3;
    row.pass = std::abs(est - expected) <= 3 * sigma;
  });

  rb.check("tiling.boundary_function", [&](ReportRow& row) {
    const HVector<double> z = HVector<double>::Zero(n);
    const double f0 = boundary_f(z, z);
    std::mt19937_64 rng(cfg.seed + 6);
    std::uniform_real_distribution<double> U(-0.5, 0.5);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    const int N = 10000;
    for (int i = 0; i < N; ++i) {
      HVector<double> x(n), y(n);
      for (int a = 0; a < n; ++a) {
        x(a) = U(rng);
        y(a) = U(rng);
      }
      const double f = boundary_f(x, y);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    row.quantities["f0"] = f0;
    row.quantities["f_min"] = lo;
    row.quantities["f_max"] = hi;
    row.quantities["samples"] = N;
    row.tolerance["f0"] = 0.25;
    row.tolerance["f0_tol"] = 1e-12;
    row.tolerance["f_range"] = {0.125, 0.375};
    row.pass = std::abs(f0 - 0.25) <= 1e-12 && lo >= 0.125 && hi <= 0.375;
  });

  // Haar on a depth-2 region.
  const auto region = std::make_shared<const Region>(origin_tile(n, 0), 2);
  const double mu = region->fine_measure();
  std::mt19937_64 hrng(cfg.seed + 7);
  Eigen::VectorXd vals(region->size());
  std::normal_distribution<double> G;
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals(i) = G(hrng);
  const SymbolGrid b = make_grid(region, vals);

  rb.check("haar.gram_cancellation", [&](ReportRow& row) {
    double gram = 0, cancel = 0;
    std::vector<TileId> tiles = {region->root(), region->tiles_at(region->root().level - 1)[0],
                                 region->tiles_at(region->root().level - 1)[40]};
    for (const TileId& T : tiles) {
      const auto basis = build_basis(*region, T);
      std::vector<SymbolGrid> grids;
      for (const auto& h : basis) grids.push_back(haar_grid(region, h));
      for (std::size_t i = 0; i < grids.size(); ++i) {
        cancel = std::max(cancel, std::abs(grids[i].values.sum() * mu));
        for (std::size_t k = i; k < grids.size(); ++k) {
          gram = std::max(gram, std::abs(grid_inner(grids[i], grids[k]) - (i == k ? 1.0 : 0.0)));
        }
      }
    }
    row.quantities["gram_max_err"] = gram;
    row.quantities["cancellation_max"] = cancel;
    row.tolerance["gram_max_err"] = 1e-12;
    row.tolerance["cancellation_max"] = 1e-12;
    row.pass = gram <= 1e-12 && cancel <= 1e-12;
  });

  rb.check("haar.round_trip_parseval", [&](ReportRow& row) {
    const HaarCoefficients c = haar_expand(b);
    const SymbolGrid back = haar_reconstruct(c);
    const double rt = (back.values - b.values).cwiseAbs().maxCoeff() / b.values.cwiseAbs().maxCoeff();
    const double l2 = std::pow(grid_norm(b, 2.0), 2);
    const double pars = std::abs(c.squared_norm() - l2) / l2;
    row.quantities["round_trip_rel_err"] = rt;
    row.quantities["parseval_rel_err"] = pars;
    row.tolerance["round_trip_rel_err"] = 1e-10;
    row.tolerance["parseval_rel_err"] = 1e-10;
    row.pass = rt <= 1e-10 && pars <= 1e-10;
  });

  rb.check("haar.martingale_differences", [&](ReportRow& row) {
    const int k_lo = -region->root().level, k_hi = -region->fine_level();
    Eigen::VectorXd sum = conditional_expectation(b, k_lo).values;
    double proj = 0;
    const HaarCoefficients c = haar_expand(b);
    for (int k = k_lo; k < k_hi; ++k) {
      const SymbolGrid d = martingale_difference(b, k);
      sum += d.values;
      // Same difference from the Haar coefficients of tiles at level -k alone.
      HaarCoefficients only = c;
      only.coarse = 0;
      for (int lev = 0; lev < static_cast<int>(only.levels.size()); ++lev) {
        if (region->root().level - lev != -k) only.levels[lev].setZero();
      }
      proj = std::max(proj, (haar_reconstruct(only).values - d.values).cwiseAbs().maxCoeff());
    }
    const double scale = b.values.cwiseAbs().maxCoeff();
    const double ident = (sum - b.values).cwiseAbs().maxCoeff() / scale;
    row.quantities["telescoping_rel_err"] = ident;
    row.quantities["haar_projection_rel_err"] = proj / scale;
    row.tolerance["rel_err"] = 1e-10;
    row.pass = ident <= 1e-10 && proj / scale <= 1e-10;
  });

  return rb.finish();
}

// ---------------------------------------------------------------- kernels

Report run_kernel_checks(const ExperimentConfig& cfg) {
  ReportBuilder rb("kernel", cfg, false);
  const int n = cfg.n;
  const int Q = homogeneous_dim(n);
  const QuadratureConfig& qc = cfg.quadrature;

  rb.check("heat.origin", [&](ReportRow& row) {
    double worst = 0;
    ojson vals = ojson::array();
    for (double h : {0.5, 1.0, 2.0}) {
      const double v = heat_kernel(Point(n), h, qc);
      // p_h(o) = c_n h^{-Q/2}; for n = 1, c_1 = 1/64.
      const double normalized = v * std::pow(h, Q / 2) * (n == 1 ? 64.0 : 1.0 / heat_kernel(Point(n), 1.0, qc));
      vals.push_back(normalized);
      worst = std::max(worst, std::abs(normalized - 1.0));
    }
    row.quantities["normalized"] = vals;
    row.quantities["max_err"] = worst;
    row.tolerance["max_err"] = 1e-6;
    row.pass = worst <= 1e-6;
  });

  rb.check("heat.scaling_symmetry", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 10);
    std::uniform_real_distribution<double> L(std::log(0.3), std::log(3.0));
    double scaling = 0, sym = 0;
    for (int i = 0; i < 100; ++i) {
      const Point g = random_point(rng, n, 1.5);
      const double h = std::exp(L(rng)), r = std::exp(L(rng));
      const double v = heat_kernel(g, h, qc);
      scaling = std::max(scaling, rel_err(heat_kernel(dilate(r, g), r * r * h, qc), v * std::pow(r, -Q)));
      sym = std::max(sym, rel_err(heat_kernel(inverse(g), h, qc), v));
    }
    row.quantities["scaling_max_rel_err"] = scaling;
    row.quantities["inverse_max_rel_err"] = sym;
    row.tolerance["scaling_max_rel_err"] = 1e-6;
    row.tolerance["inverse_max_rel_err"] = 1e-10;
    row.pass = scaling <= 1e-6 && sym <= 1e-10;
  });

  const KernelSpec rspec = cfg.kernel.kind == KernelKind::riesz ? cfg.kernel : KernelSpec::riesz(1, n);

  rb.check("riesz.scaling", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 11);
    std::uniform_real_distribution<double> L(std::log(0.2), std::log(5.0));
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
      const Point g = random_point(rng, n, 1.0);
      const double r = std::exp(L(rng));
      worst = std::max(worst, rel_err(riesz_kernel(rspec.ell, dilate(r, g), qc),
                                      riesz_kernel(rspec.ell, g, qc) * std::pow(r, -Q)));
    }
    row.quantities["pairs"] = 50;
    row.quantities["max_rel_err"] = worst;
    row.tolerance["max_rel_err"] = 1e-4;
    row.pass = worst <= 1e-4;
  });

  rb.check("riesz.size_bound", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 12);
    QuadratureConfig fine = qc;
    fine.abs_tol *= 1e-2;
    fine.rel_tol *= 1e-2;
    fine.lambda_nodes *= 2;
    fine.h_nodes *= 2;
    double sup = 0, sup_fine = 0;
    for (int i = 0; i < 500; ++i) {
      const Point g = koranyi_sphere_point(rng, n);
      sup = std::max(sup, std::abs(riesz_kernel(rspec.ell, g, qc)));
      sup_fine = std::max(sup_fine, std::abs(riesz_kernel(rspec.ell, g, fine)));
    }
    const double change = rel_err(sup, sup_fine);
    row.quantities["sphere_samples"] = 500;
    row.quantities["sup"] = sup;
    row.quantities["sup_refined"] = sup_fine;
    row.quantities["relative_change"] = change;
    row.tolerance["relative_change"] = 0.05;
    row.pass = std::isfinite(sup) && sup > 0 && change <= 0.05;
  });

  rb.check("riesz.table_vs_direct", [&](ReportRow& row) {
    const KernelEvaluator K = make_evaluator(cfg, rspec);
    std::mt19937_64 rng(cfg.seed + 13);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      const Point g = random_point(rng, n, 1.0);
      worst = std::max(worst, rel_err(K(g), riesz_kernel(rspec.ell, g, qc)));
    }
    row.quantities["points"] = 100;
    row.quantities["table_nodes"] = cfg.table_nodes;
    row.quantities["max_rel_err"] = worst;
    row.tolerance["max_rel_err"] = 1e-3;
    row.pass = worst <= 1e-3;
  });

  rb.check("second_order_T.closed_form", [&](ReportRow& row) {
    std::mt19937_64 rng(cfg.seed + 14);
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
      const Point g = random_point(rng, n, 1.0);
      const double d = koranyi_norm(g);
      // n = 1: t / (8 pi d^6)
      const double closed = n == 1 ? g.t() / (8 * kPi * std::pow(d, 6)) : closed_form_T_kernel(g);
      worst = std::max(worst, rel_err(second_order_T_kernel(g, qc), closed));
    }
    HVector<double> z = HVector<double>::Zero(n);
    const double at_unit = second_order_T_kernel(Point(z, z, 1.0), qc);
    const double expected = n == 1 ? 1.0 / (8 * kPi) : closed_form_T_kernel(Point(z, z, 1.0));
    row.quantities["points"] = 50;
    row.quantities["max_rel_err"] = worst;
    row.quantities["K_001"] = at_unit;
    row.quantities["K_001_expected"] = expected;
    row.tolerance["max_rel_err"] = 1e-3;
    row.tolerance["K_001_rel"] = 1e-3;
    row.pass = worst <= 1e-3 && std::abs(at_unit - expected) <= 1e-3 * std::abs(expected);
  });

  rb.check("second_order_T.constant_C2", [&](ReportRow& row) {
    const cdouble c2 = constant_C2(n);
    // n = 1: -i / (8 pi^2)
    const cdouble expected = n == 1 ? cdouble(0, -1.0 / (8 * kPi * kPi)) : -cdouble(0, 1) * double(n) * constant_C1(n);
    const double err = std::abs(c2 - expected);
    row.quantities["C2_re"] = c2.real();
    row.quantities["C2_im"] = c2.imag();
    row.quantities["abs_err"] = err;
    row.tolerance["abs_err"] = 1e-12;
    row.pass = err <= 1e-12;
  });

  for (const KernelSpec& spec : {rspec, KernelSpec::second_order_T(n), KernelSpec::cauchy_szego(1.0, n)}) {
    rb.check(std::string("sphere_scan.") + to_string(spec.kind), [&](ReportRow& row) {
      const KernelEvaluator K = make_evaluator(cfg, spec);
      const SphereScan s = sphere_scan(K, 20000);
      row.quantities = s.summary();
      row.pass = std::isfinite(s.max_magnitude);
    });
  }
  return rb.finish();
}

// ---------------------------------------------------------------- certification

Report run_certify(const ExperimentConfig& cfg) {
  ReportBuilder rb("certify", cfg, false);
  const int n = cfg.n;
  std::vector<KernelSpec> specs = {KernelSpec::riesz(1, n), KernelSpec::second_order_T(n)};
  if (cfg.kernel.name() != specs[0].name() && cfg.kernel.name() != specs[1].name()) specs.push_back(cfg.kernel);

  std::mt19937_64 rng(cfg.seed + 20);
  std::uniform_int_distribution<int> D(-6, 6);
  std::vector<TileId> tiles;
  for (int i = 0; i < cfg.certify_tiles; ++i) {
    IVector m(2 * n);
    for (int a = 0; a < 2 * n; ++a) m(a) = D(rng);
    tiles.push_back(TileId{0, m, D(rng)});
  }

  for (const KernelSpec& spec : specs) {
    const KernelEvaluator K = make_evaluator(cfg, spec);
    const auto dirs = certify_directions(K, cfg.certify);
    for (int N = 0; N <= 2; ++N) {
      rb.check(std::string(to_string(spec.kind)) + ".N" + std::to_string(N), [&](ReportRow& row) {
        int found = 0, attempts = 0, sign_failures = 0;
        double worst_drift = 0, c_min = std::numeric_limits<double>::infinity(), c_max = 0;
        std::mt19937_64 srng(cfg.seed * 31 + N);
        const int dense = 4 * static_cast<int>(std::pow(cfg.certify.samples_per_axis, 2 * n + 1));
        for (const TileId& T : tiles) {
          double c0 = 0;
          for (int j : {0, -1, 1}) {
            const TileId Tj = dilate_tile(T, j);
            const Certificate c = nondegen_certify(Tj, N, K, cfg.certify, dirs);
            ++attempts;
            if (!c.found) continue;
            ++found;
            if (j == 0) {
              c0 = c.min_scaled;
              // 4x the certifier's sample count, drawn independently in each tile.
              std::vector<Point> a, bpts;
              for (int s = 0; s < dense; ++s) {
                a.push_back(random_point_in_tile(Tj, srng));
                bpts.push_back(random_point_in_tile(c.partner, srng));
              }
              bool ok = true;
              for (const Point& g : a) {
                for (const Point& h : bpts) {
                  const double v = K.is_complex() ? K.complex_value(left_quotient(h, g)).real() : K(left_quotient(h, g));
                  if (!(v * c.sign > 0)) ok = false;
                }
                if (!ok) break;
              }
              if (!ok) ++sign_failures;
            } else if (c0 > 0) {
              worst_drift = std::max(worst_drift, std::abs(c.min_scaled / c0 - 1.0));
            }
            c_min = std::min(c_min, c.min_scaled);
            c_max = std::max(c_max, c.min_scaled);
          }
        }
        const double rate = static_cast<double>(found) / attempts;
        row.quantities["tiles"] = static_cast<int>(tiles.size());
        row.quantities["attempts"] = attempts;
        row.quantities["certified_rate"] = rate;
        row.quantities["dense_sign_failures"] = sign_failures;
        row.quantities["dense_samples_per_tile"] = dense;
        row.quantities["C_min"] = finite_or_string(c_min);
        row.quantities["C_max"] = c_max;
        row.quantities["C_max_drift_over_j"] = worst_drift;
        row.tolerance["certified_rate"] = 1.0;
        row.tolerance["C_drift"] = 0.2;
        row.pass = found == attempts && sign_failures == 0 && worst_drift <= 0.2;
      });
    }
  }
  return rb.finish();
}

// ---------------------------------------------------------------- commutator

namespace {

struct InstanceData {
  SymbolInstance inst;
  SymbolGrid grid;
};

std::vector<InstanceData> family_grids(const ExperimentConfig& cfg, int depth) {
  std::vector<InstanceData> out;
  for (auto& s : family_instances(cfg)) {
    SymbolGrid g = instance_grid(s, depth);
    out.push_back({std::move(s), std::move(g)});
  }
  return out;
}

template <typename Scalar>
void commutator_rows(ReportBuilder& rb, const ExperimentConfig& cfg, const KernelEvaluator& K,
                     const std::vector<InstanceData>& family, double p, std::vector<double>& nwo_ratios,
                     std::vector<double>& russo_ratios, std::vector<double>& mixed_besov) {
  const int Q = homogeneous_dim(cfg.n);
  for (const auto& d : family) {
    rb.check(d.inst.id + ".p" + scale_tag(p), [&](ReportRow& row) {
      AssembleOptions opt;
      opt.near_samples = cfg.near_samples;
      const auto A = assemble<Scalar>(d.grid, K, opt);
      const Eigen::VectorXd& sv = cached_spectrum(d.grid, cfg);
      const double sp = schatten_norm(sv, p);
      const double weak = schatten_weak(sv, p);
      row.quantities["schatten"] = sp;
      row.quantities["weak_schatten"] = weak;
      if (sp == 0) {
        row.quantities["skipped"] = "constant symbol";
        return;
      }
      NwoOptions nopt;
      nopt.certify = cfg.certify;
      const NwoResult nwo = nwo_sum(A, d.grid, K, p, d.inst.root.level - 1, nopt);
      const double skip = nwo.tiles ? static_cast<double>(nwo.skipped) / nwo.tiles : 0.0;
      row.quantities["nwo"] = nwo.value;
      row.quantities["nwo_tiles"] = nwo.tiles;
      row.quantities["nwo_skipped"] = nwo.skipped;
      row.quantities["nwo_ratio"] = nwo.value / sp;
      nwo_ratios.push_back(nwo.value / sp);
      row.tolerance["nwo_skip_fraction"] = cfg.tol.nwo_skip_fraction;
      bool ok = skip <= cfg.tol.nwo_skip_fraction;
      if (p > 2) {
        const MixedNorm mn = mixed_norm(A, p);
        const double geo = std::sqrt(mn.forward * mn.adjoint);
        row.quantities["mixed_forward"] = mn.forward;
        row.quantities["mixed_adjoint"] = mn.adjoint;
        row.quantities["russo_ratio"] = weak / geo;
        russo_ratios.push_back(weak / geo);
        DirectOptions dopt;
        dopt.shifts_per_shell = cfg.mc_shifts;
        dopt.seed = cfg.seed;
        const BesovEstimate be = besov_direct(d.grid, p, Q / p, dopt);
        row.quantities["besov_direct"] = be.value;
        row.quantities["besov_direct_errbar"] = be.errbar;
        row.quantities["mixed_besov_ratio"] = geo / be.value;
        mixed_besov.push_back(geo / be.value);
      }
      row.pass = ok;
    });
  }
}

ojson minmax(const std::vector<double>& v) {
  if (v.empty()) return ojson::array();
  return ojson::array({*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end())});
}

double spread_of(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

}  // namespace

Report run_commutator(const ExperimentConfig& cfg) {
  ReportBuilder rb("commutator", cfg, false);
  const KernelEvaluator K = make_evaluator(cfg, cfg.kernel);
  const auto family = family_grids(cfg, cfg.depth);
  for (double p : cfg.p) {
    std::vector<double> nwo, russo, mb;
    if (K.is_complex()) {
      commutator_rows<cdouble>(rb, cfg, K, family, p, nwo, russo, mb);
    } else {
      commutator_rows<double>(rb, cfg, K, family, p, nwo, russo, mb);
    }
    rb.check("constants.p" + scale_tag(p), [&](ReportRow& row) {
      const double c_nwo = nwo.empty() ? 0 : *std::max_element(nwo.begin(), nwo.end());
      const double c_russo = russo.empty() ? 0 : *std::max_element(russo.begin(), russo.end());
      row.quantities["nwo_constant"] = c_nwo;
      row.quantities["russo_constant"] = c_russo;
      row.quantities["mixed_besov_range"] = minmax(mb);
      row.quantities["mixed_besov_spread"] = spread_of(mb);
      row.tolerance["nwo_constant"] = cfg.tol.nwo_constant;
      row.tolerance["russo_constant"] = cfg.tol.russo_constant;
      row.tolerance["mixed_besov_spread"] = cfg.tol.mixed_besov_spread;
      row.pass = c_nwo <= cfg.tol.nwo_constant && c_russo <= cfg.tol.russo_constant &&
                 spread_of(mb) <= cfg.tol.mixed_besov_spread;
    });
  }
  return rb.finish();
}

// ---------------------------------------------------------------- schatten, besov

Report run_schatten(const ExperimentConfig& cfg) {
  ReportBuilder rb("schatten", cfg, true);
  for (const auto& d : family_grids(cfg, cfg.depth)) {
    rb.check(d.inst.id, [&](ReportRow& row) {
      const Eigen::VectorXd& sv = cached_spectrum(d.grid, cfg);
      const SpectrumReport rep = spectrum_report(sv, cfg.p, symbol_hash(d.grid));
      row.quantities = rep.to_json(20);
      rb.plot("spectrum_" + d.inst.id, rep.to_csv());
    });
  }
  return rb.finish();
}

Report run_besov(const ExperimentConfig& cfg) {
  ReportBuilder rb("besov", cfg, true);
  const int Q = homogeneous_dim(cfg.n);
  for (const auto& d : family_grids(cfg, cfg.depth)) {
    for (double p : cfg.p) {
      rb.check(d.inst.id + ".p" + scale_tag(p), [&](ReportRow& row) {
        MartingaleOptions mopt;
        mopt.levels = cfg.levels;
        DirectOptions dopt;
        dopt.shifts_per_shell = cfg.mc_shifts;
        dopt.seed = cfg.seed;
        const BesovEstimate m = besov_martingale(d.grid, p, mopt);
        const BesovEstimate s = besov_shell(d.grid, p, cfg.levels);
        row.quantities["martingale"] = m.to_json();
        row.quantities["shell"] = s.to_json();
        if (m.value > 0) {
          const BesovEstimate dir = besov_direct(d.grid, p, Q / p, dopt);
          row.quantities["direct"] = dir.to_json();
        }
      });
    }
  }
  return rb.finish();
}

// ---------------------------------------------------------------- equivalence

Report run_equivalence(const ExperimentConfig& cfg) {
  ReportBuilder rb("equivalence", cfg, true);
  const int n = cfg.n;
  const int Q = homogeneous_dim(n);
  for (double p : cfg.p) {
    if (!(p > Q)) throw StageError("equivalence", cfg.hash(), "p must exceed 2n+2");
  }
  const auto family = family_grids(cfg, cfg.depth);
  const std::size_t smallest = smallest_instance([&] {
    std::vector<SymbolInstance> v;
    for (const auto& d : family) v.push_back(d.inst);
    return v;
  }());

  for (double p : cfg.p) {
    std::vector<double> ratios;
    double ratio_smallest = 0;
    std::ostringstream plot;
    plot << "id,scale,schatten,martingale,shell,direct,ratio\n";
    for (std::size_t i = 0; i < family.size(); ++i) {
      const auto& d = family[i];
      rb.check(d.inst.id + ".p" + scale_tag(p), [&](ReportRow& row) {
        const double sp = schatten_norm(cached_spectrum(d.grid, cfg), p);
        MartingaleOptions mopt;
        mopt.levels = cfg.levels;
        const double mart = besov_martingale(d.grid, p, mopt).value;
        row.quantities["schatten"] = sp;
        row.quantities["martingale"] = mart;
        if (mart == 0 && sp <= 1e-12) {
          row.quantities["skipped"] = "constant symbol";
          return;
        }
        const double shell = besov_shell(d.grid, p, cfg.levels).value;
        DirectOptions dopt;
        dopt.shifts_per_shell = cfg.mc_shifts;
        dopt.seed = cfg.seed;
        const BesovEstimate dir = besov_direct(d.grid, p, Q / p, dopt);
        row.quantities["shell"] = shell;
        row.quantities["direct"] = dir.value;
        row.quantities["direct_errbar"] = dir.errbar;
        row.quantities["ratio_martingale"] = sp / mart;
        row.quantities["ratio_shell"] = sp / shell;
        row.quantities["ratio_direct"] = sp / dir.value;
        ratios.push_back(sp / mart);
        if (i == smallest) ratio_smallest = sp / mart;
        plot << d.inst.id << ',' << d.inst.scale << ',' << num(sp) << ',' << num(mart) << ',' << num(shell) << ','
             << num(dir.value) << ',' << num(sp / mart) << '\n';
      });
    }
    rb.plot("ratio_vs_scale_p" + scale_tag(p), plot.str());
    rb.check("spread.p" + scale_tag(p), [&](ReportRow& row) {
      row.quantities["ratio_range"] = minmax(ratios);
      row.quantities["spread"] = spread_of(ratios);
      row.tolerance["spread"] = cfg.tol.spread;
      row.pass = spread_of(ratios) <= cfg.tol.spread;
    });
    if (cfg.refine && ratio_smallest > 0) {
      rb.check("refinement.p" + scale_tag(p), [&](ReportRow& row) {
        const auto& inst = family[smallest].inst;
        const SymbolGrid fine = instance_grid(inst, cfg.depth + 1);
        const double sp = schatten_norm(cached_spectrum(fine, cfg), p);
        MartingaleOptions mopt;
        mopt.levels = cfg.levels;
        const double mart = besov_martingale(fine, p, mopt).value;
        const double r = sp / mart;
        const double change = std::abs(r / ratio_smallest - 1.0);
        row.quantities["instance"] = inst.id;
        row.quantities["depth"] = cfg.depth + 1;
        row.quantities["schatten"] = sp;
        row.quantities["martingale"] = mart;
        row.quantities["ratio"] = r;
        row.quantities["ratio_coarse"] = ratio_smallest;
        row.quantities["relative_change"] = change;
        row.tolerance["relative_change"] = cfg.tol.refinement;
        row.pass = change <= cfg.tol.refinement;
      });
    }
  }
  return rb.finish();
}

// ---------------------------------------------------------------- constancy

Report run_constancy(const ExperimentConfig& cfg) {
  ReportBuilder rb("constancy", cfg, true);
  const int n = cfg.n;
  const double q = homogeneous_dim(n);
  auto family = family_instances(cfg);
  if (std::none_of(family.begin(), family.end(), [](const SymbolInstance& s) { return s.constant; })) {
    family.push_back({"constant", 0, true, Symbol::constant(n, cfg.symbols.amplitude), origin_tile(n, 0)});
  }

  for (const auto& inst : family) {
    rb.check(inst.id + ".oscillation", [&](ReportRow& row) {
      const SymbolGrid coarse = instance_grid(inst, cfg.depth);
      const SymbolGrid fine = instance_grid(inst, cfg.depth + 1);
      const auto oc = oscillation_profile(coarse, cfg.oscillation_B0);
      const auto of = oscillation_profile(fine, cfg.oscillation_B0);
      const double a = oc.cumulative.back(), b = of.cumulative.back();
      row.quantities["exponent"] = oc.exponent;
      row.quantities["levels_coarse"] = oc.levels;
      row.quantities["cumulative_coarse"] = oc.cumulative;
      row.quantities["levels_fine"] = of.levels;
      row.quantities["cumulative_fine"] = of.cumulative;
      std::ostringstream plot;
      plot << "depth,level,per_level,cumulative\n";
      for (const auto* prof : {&oc, &of}) {
        for (std::size_t i = 0; i < prof->levels.size(); ++i) {
          plot << (prof == &oc ? cfg.depth : cfg.depth + 1) << ',' << prof->levels[i] << ',' << num(prof->per_level[i])
               << ',' << num(prof->cumulative[i]) << '\n';
        }
      }
      rb.plot("partial_sums_" + inst.id, plot.str());
      if (inst.constant) {
        row.quantities["max_sum"] = std::max(a, b);
        row.tolerance["max_sum"] = 0.0;
        row.pass = a == 0 && b == 0;
      } else {
        row.quantities["growth"] = b / a;
        row.tolerance["growth"] = cfg.tol.growth;
        row.pass = b >= cfg.tol.growth * a;
      }
    });
  }

  // Spectral partial sums: the smallest instance (shared with the equivalence refinement)
  // and the constant symbol.
  std::vector<const SymbolInstance*> spectral;
  spectral.push_back(&family[smallest_instance(family)]);
  for (const auto& s : family) {
    if (s.constant && &s != spectral.front()) spectral.push_back(&s);
  }
  for (const SymbolInstance* inst : spectral) {
    rb.check(inst->id + ".spectral", [&](ReportRow& row) {
      const Eigen::VectorXd& sc = cached_spectrum(instance_grid(*inst, cfg.depth), cfg);
      const Eigen::VectorXd& sf = cached_spectrum(instance_grid(*inst, cfg.depth + 1), cfg);
      const double c_crit = schatten_power_sum(sc, q), f_crit = schatten_power_sum(sf, q);
      row.quantities["critical_p"] = q;
      row.quantities["critical_sum_coarse"] = c_crit;
      row.quantities["critical_sum_fine"] = f_crit;
      bool ok = true;
      if (inst->constant) {
        row.quantities["max_sum"] = std::max(c_crit, f_crit);
        ok = c_crit == 0 && f_crit == 0;
      } else {
        row.quantities["critical_growth"] = f_crit / c_crit;
      }
      ojson changes = ojson::object();
      for (double p : cfg.p) {
        if (!(p > q)) continue;
        const double a = schatten_power_sum(sc, p), b = schatten_power_sum(sf, p);
        if (inst->constant) {
          ok = ok && a == 0 && b == 0;
          continue;
        }
        const double change = std::abs(b / a - 1.0);
        changes[scale_tag(p)] = {{"sum_coarse", a}, {"sum_fine", b}, {"relative_change", change}};
        ok = ok && change <= cfg.tol.spectral_change;
      }
      row.quantities["supercritical"] = changes;
      row.tolerance["spectral_change"] = cfg.tol.spectral_change;
      row.pass = ok;
    });
  }
  return rb.finish();
}

// ---------------------------------------------------------------- dispatch

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"structure", "kernel",  "certify",     "commutator",
                                                 "schatten",  "besov",   "equivalence", "constancy"};
  return names;
}

Report run_experiment(const std::string& name, const ExperimentConfig& cfg) {
  if (name == "structure") return run_structure_checks(cfg);
  if (name == "kernel") return run_kernel_checks(cfg);
  if (name == "certify") return run_certify(cfg);
  if (name == "commutator") return run_commutator(cfg);
  if (name == "schatten") return run_schatten(cfg);
  if (name == "besov") return run_besov(cfg);
  if (name == "equivalence") return run_equivalence(cfg);
  if (name == "constancy") return run_constancy(cfg);
  throw ConfigError("unknown experiment " + name);
}

}  // namespace heisenberg

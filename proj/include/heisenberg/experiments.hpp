// Config-driven experiments: one report per subcommand, one row per check.
#pragma once

#include "heisenberg/besov.hpp"
#include "heisenberg/commutator.hpp"
#include "heisenberg/kernels.hpp"
#include "heisenberg/symbols.hpp"
#include "heisenberg/tiling.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace heisenberg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a stage throws; carries the stage name and config hash.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& hash, const std::string& what)
      : std::runtime_error("stage " + stage + " failed (config " + hash + "): " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct SymbolFamilyConfig {
  std::string family = "bump";  // bump | random_bump | constant
  double radius = 0.16;
  double amplitude = 1.0;
  /// Dilation exponents s: the instance is the base bump dilated by lambda^{-s} on the
  /// region rooted at origin_tile(n, -s).
  std::vector<int> scales = {0, 1, 2};
  /// Centers of the base bump, 2n+1 coordinates each.
  std::vector<std::vector<double>> translates = {{0.0, 0.0, 0.0}, {0.04, -0.03, 0.01}};
  int count = 10;  // random_bump
  double value = 1.0;  // constant
};

struct Tolerances {
  double spread = 10.0;           // max/min ratio across a family
  double refinement = 0.25;       // relative ratio change from depth D to D+1
  double growth = 1.3;            // oscillation growth when a level is added
  double spectral_change = 0.05;  // p-th power partial sums, D to D+1
  double nwo_constant = 100.0;
  double nwo_skip_fraction = 0.02;
  double russo_constant = 10.0;
  double mixed_besov_spread = 10.0;
};

struct ExperimentConfig {
  int n = 1;
  int depth = 2;
  KernelSpec kernel = KernelSpec::riesz(1);
  SymbolFamilyConfig symbols;
  std::vector<double> p = {6.0, 8.0};
  std::optional<std::pair<int, int>> levels;  // Besov window, scale lambda^{-k}
  QuadratureConfig quadrature;
  int table_nodes = 2049;
  std::string cache_dir;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int mc_shifts = 200;
  int near_samples = 0;
  /// Recompute the smallest-scale instance one level deeper.
  bool refine = true;
  int oscillation_B0 = 1;
  CertifyConfig certify;
  int certify_tiles = 50;
  std::int64_t structure_samples = 100000;
  Tolerances tol;

  /// Strict: unknown keys are errors.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  nlohmann::ordered_json to_json() const;
  /// FNV-1a of the canonical JSON dump.
  std::string hash() const;
  void validate() const;
};

KernelSpec kernel_spec_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const KernelSpec& spec);

struct SymbolInstance {
  std::string id;
  int scale = 0;
  bool constant = false;
  Symbol symbol{1};
  TileId root;
};

std::vector<SymbolInstance> family_instances(const ExperimentConfig& cfg);
/// Smallest-scale instance (largest s, first translate); the refinement target.
std::size_t smallest_instance(const std::vector<SymbolInstance>& family);
SymbolGrid instance_grid(const SymbolInstance& s, int depth);

struct ReportRow {
  std::string id;
  nlohmann::ordered_json quantities = nlohmann::ordered_json::object();
  nlohmann::ordered_json tolerance = nlohmann::ordered_json::object();
  bool pass = true;
  double runtime = 0.0;  // seconds; kept out of the JSON report
};

struct Report {
  std::string experiment;
  std::string config_hash;
  std::string build_id;
  std::vector<ReportRow> rows;
  /// name -> CSV text, written only with --emit-plot-data
  std::map<std::string, std::string> plots;

  bool pass() const;
  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
  nlohmann::ordered_json timings() const;
  /// Writes <dir>/<experiment>.json, .csv, .timings.json and optionally plots/.
  void write(const std::string& dir, bool plots_too) const;
};

/// git describe at configure time.
std::string build_id();
/// One line per finished row on stderr.
void set_progress(bool on);

Report run_structure_checks(const ExperimentConfig& cfg);
Report run_kernel_checks(const ExperimentConfig& cfg);
Report run_certify(const ExperimentConfig& cfg);
Report run_commutator(const ExperimentConfig& cfg);
Report run_schatten(const ExperimentConfig& cfg);
Report run_besov(const ExperimentConfig& cfg);
Report run_equivalence(const ExperimentConfig& cfg);
Report run_constancy(const ExperimentConfig& cfg);

/// Subcommand name -> runner.
Report run_experiment(const std::string& name, const ExperimentConfig& cfg);
const std::vector<std::string>& experiment_names();

/// Singular values of [b, K] for the configured kernel, memoized by symbol hash, kernel and
/// near-field setting so that experiments sharing a symbol share the work.
const Eigen::VectorXd& cached_spectrum(const SymbolGrid& b, const ExperimentConfig& cfg);
void clear_spectrum_cache();

}  // namespace heisenberg

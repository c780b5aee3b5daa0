// heisenberg: run one experiment from a JSON config and write its report.
#include "heisenberg/experiments.hpp"
#include "heisenberg/io.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <iostream>

using namespace heisenberg;

int main(int argc, char** argv) {
  CLI::App app{"Commutator and Besov experiments on the Heisenberg group"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, kernel_cache, out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool plots = false, quiet = false;
  app.add_option("--config", config_path, "Experiment config (JSON); defaults apply when omitted")
      ->check(CLI::ExistingFile);
  app.add_option("--kernel-cache", kernel_cache, "Directory for sphere-table caches");
  app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_option("--seed", seed, "RNG seed (overrides seed)");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--emit-plot-data", plots, "Write per-figure CSVs under <out>/plots");
  app.add_flag("--quiet", quiet, "No progress lines on stderr");

  std::string matrix_stem;
  for (const auto& name : experiment_names()) {
    auto* sub = app.add_subcommand(name, "Run the " + name + " experiment");
    if (name == "commutator") {
      sub->add_option("--save-matrix", matrix_stem, "Also save the first instance's operator (file stem)");
    }
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (!kernel_cache.empty()) cfg.cache_dir = kernel_cache;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.seed = *seed;
    cfg.validate();
    set_progress(!quiet);
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    if (!matrix_stem.empty()) {
      const auto family = family_instances(cfg);
      const SymbolGrid grid = instance_grid(family.front(), cfg.depth);
      const KernelEvaluator K = KernelEvaluator::make(cfg.kernel, cfg.quadrature, cfg.cache_dir, cfg.table_nodes);
      if (K.is_complex()) throw ConfigError("--save-matrix supports real kernels only");
      const RealOperator A = assemble<double>(grid, K);
      nlohmann::ordered_json meta;
      meta["instance"] = family.front().id;
      meta["kernel"] = cfg.kernel.name();
      meta["depth"] = cfg.depth;
      meta["config_hash"] = cfg.hash();
      meta["symbol_hash"] = symbol_hash(grid);
      save_matrix(matrix_stem, A.entries, meta);
    }

    const Report report = run_experiment(name, cfg);
    report.write(cfg.output_dir, plots);
    for (const auto& row : report.rows) {
      std::printf("%s  %s\n", row.pass ? "PASS" : "FAIL", row.id.c_str());
    }
    std::printf("%s: %s (config %s, build %s)\n", name.c_str(), report.pass() ? "pass" : "FAIL",
                report.config_hash.c_str(), report.build_id.c_str());
    return report.pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}

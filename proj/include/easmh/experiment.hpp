#pragma once

#include <filesystem>

#include "easmh/config.hpp"
#include "easmh/samplers.hpp"

namespace easmh {

/// Everything produced by one pipeline run, before it is written to disk.
struct ExperimentResult {
  ChainOutput chain;
  std::optional<ActiveSubspace> subspace;
  long long construction_evaluations = 0;
  long long divergence_count = 0;
  double wall_time_seconds = 0.0;
};

/// Build the target named by the config (lorenz96 data generated on the fly
/// gets written to data_csv when non-empty).
DensityModel build_target(const RunConfig& cfg,
                          const std::filesystem::path& data_csv = {},
                          std::shared_ptr<std::atomic<long long>> divergences = nullptr);

/// Construction stage alone: draw points, build the configured subspace.
ActiveSubspace build_subspace(const RunConfig& cfg, const DensityModel& target,
                              long long* evaluations = nullptr);

/// Full pipeline in memory (no artifact files). Used by run_experiment and tests.
ExperimentResult run_pipeline(const RunConfig& cfg,
                              const std::filesystem::path& data_csv = {});

/// Full pipeline plus all artifact files in cfg.output_dir.
/// Returns 0 on success, 2 on runtime failure (a FAILED marker is left behind).
int run_experiment(const RunConfig& cfg);

/// Side-by-side tables (acceptance, autocorrelation, occupancy) for completed
/// run directories; writes CSVs into out_dir.
void compare_runs(const std::vector<std::string>& run_dirs, std::size_t max_lag,
                  const std::string& out_dir);

// ChainOutput CSV schemas: y_samples.csv `iter,accepted,y1..yn,log_d`,
// x_samples.csv `iter,j,weight,x1..xm`.
void save_y_samples_csv(const ChainOutput& chain, const std::filesystem::path& file);
void save_x_samples_csv(const std::vector<WeightedSample>& samples, std::size_t dim,
                        const std::filesystem::path& file);

}  // namespace easmh

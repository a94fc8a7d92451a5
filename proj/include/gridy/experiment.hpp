#pragma once

#include "gridy/measures.hpp"
#include "gridy/pipeline.hpp"
#include "gridy/simulation.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gridy {

struct ExperimentOptions {
  GridyOptions gridy;
  /// Fit with the simulated ranks (r_J + r_G initial, r_J joint), as in the
  /// measure study; otherwise ranks are estimated.
  bool true_ranks = true;
  Execution execution = Execution::parallel;  // over replications
};

struct ReplicationOutcome {
  std::size_t config = 0;
  int rep = 0;
  bool failed = false;
  std::string error;
  std::array<StructureMeasures, 3> measures{};
  double snr = 0.0;
  /// Per fitted subject: (refit SSE, simultaneous-component SSE).
  std::vector<std::pair<double, double>> sse;
  /// Per fitted subject: singular values of the directed network.
  std::vector<Vector> network_singvals;
  int joint_rank = 0;
  int group_rank = 0;
};

/// One replication: data from derive_seed(seed, "sim", rep), estimation from
/// derive_seed(seed, "gridy", rep).
ReplicationOutcome run_replication(const SimulationConfig& config, const ExperimentOptions& options, int rep,
                                   std::uint64_t seed);

struct ExperimentTable {
  std::vector<SimulationConfig> grid;
  std::vector<ReplicationOutcome> outcomes;  // grid-major, rep-minor
};

/// Failed replications are recorded, not fatal.
ExperimentTable run_experiment(const std::vector<SimulationConfig>& grid, const ExperimentOptions& options,
                               int reps, std::uint64_t seed);

/// Tidy CSV: config, rep, measure, structure, value plus the grid cell's
/// parameters. Failed replications are listed with an empty value.
void write_experiment_csv(const ExperimentTable& table, const std::filesystem::path& path);

struct RankFrequency {
  std::size_t config = 0;
  int estimated_rank = 0;
  int count = 0;
};

/// Counts of per-subject bootstrap ranks pooled over `reps` simulated datasets.
std::vector<RankFrequency> rank_frequencies(const std::vector<SimulationConfig>& grid,
                                            const BootstrapOptions& options, int reps, std::uint64_t seed);

/// Columns r_J, r_G, c, d, T, estimated_rank, count.
void write_rank_frequency_csv(const std::vector<SimulationConfig>& grid, const std::vector<RankFrequency>& rows,
                              const std::filesystem::path& path);

}  // namespace gridy

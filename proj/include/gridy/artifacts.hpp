#pragma once

#include "gridy/experiment.hpp"
#include "gridy/measures.hpp"
#include "gridy/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace gridy {

namespace fs = std::filesystem;

nlohmann::json options_to_json(const GridyOptions& options);

// rank.json
void write_rank_json(const fs::path& path, const MultiBlockDataset& data, const RankStage& ranks,
                     const GridyOptions& options);
RankStage read_rank_json(const fs::path& path, const MultiBlockDataset& data);

// seg/: report.json, joint_basis.csv, joint/<id>.csv, group/<id>.csv
void write_segment_dir(const fs::path& dir, const std::vector<std::string>& variables, const SegmentStage& seg);
SegmentStage read_segment_dir(const fs::path& dir);

// fit/: loadings, cores, correlations, scales, factors/<structure>/<id>.csv, report.json
void write_fit_dir(const fs::path& dir, const std::vector<std::string>& variables, const FitStage& fit,
                   const GridyOptions& options);
/// Restores subjects, groups, ranks, loadings, correlations and factors.
FitStage read_fit_dir(const fs::path& dir);

// dyn/: refit factors, transitions, innovation and noise covariances, r2.csv
void write_dynamics_dir(const fs::path& dir, const std::vector<std::string>& variables, const FitStage& fit,
                        const std::vector<Matrix>& blocks, const std::vector<SubjectDynamics>& dynamics,
                        const GridyOptions& options);
struct DynamicsArtifacts {
  FitStage fit;  // loadings and subject list only
  std::vector<SubjectDynamics> dynamics;
  std::vector<std::string> variables;
  int var_order = 1;
};
DynamicsArtifacts read_dynamics_dir(const fs::path& dir);

// net/: directed/<id>.csv, contemporaneous/<id>.csv, group means, report.json
void write_network_dir(const fs::path& dir, const std::vector<std::string>& variables, const FitStage& fit,
                       const std::vector<VarNetwork>& networks, NoiseCovarianceMode mode);

/// Tidy rows subject, group, structure, factor, variable, r2, zero_variance.
void write_r2_csv(const fs::path& path, const std::vector<std::string>& variables, const FitStage& fit,
                  const std::vector<Matrix>& blocks, const std::vector<SubjectDynamics>& dynamics);

/// Tidy rows measure, structure, value.
void write_evaluation_csv(const fs::path& path, const std::array<StructureMeasures, 3>& measures);

/// Writes every stage plus report.json, config.json and run.log into `dir`.
nlohmann::json write_run(const fs::path& dir, const MultiBlockDataset& data, const GridyResult& result,
                         const GridyOptions& options, const nlohmann::json& config_echo);

/// Problems found in a run report; empty when it matches the expected schema.
std::vector<std::string> validate_report(const nlohmann::json& report);

/// Simulation grid from a JSON object whose fields (d, T, K, r_J, r_G, type, c,
/// sigma_xi, sigma_eps, burn_in, exact_cross_products) may be scalars or
/// arrays; arrays expand into the Cartesian product. A top-level "grid" array
/// of such objects is also accepted.
std::vector<SimulationConfig> simulation_grid_from_json(const nlohmann::json& doc);
nlohmann::json simulation_config_to_json(const SimulationConfig& config);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& doc);

}  // namespace gridy

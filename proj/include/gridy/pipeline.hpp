#pragma once

#include "gridy/ajive.hpp"
#include "gridy/core_data.hpp"
#include "gridy/dynamics.hpp"
#include "gridy/rank_selection.hpp"
#include "gridy/sca_fit.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridy {

enum class ModelKind { pf2, ind };

std::string to_string(ModelKind m);
ModelKind parse_model_kind(const std::string& s);

struct GridyOptions {
  std::uint64_t seed = 7;
  BootstrapOptions bootstrap;      // xi, L
  int ajive_reps = 100;            // M = L for the segmentation thresholds
  ScaOptions sca;
  ModelKind model = ModelKind::pf2;
  std::optional<int> rank;         // initial rank r, bypasses the bootstrap
  std::optional<int> joint_rank;   // r_J, bypasses the AJIVE rule
  std::optional<int> group_rank;   // r_G, otherwise r - r_J
  int var_order = 1;
  NoiseCovarianceMode noise_mode = NoiseCovarianceMode::paper;
  Execution execution = Execution::parallel;
};

struct Exclusion {
  std::string subject;
  std::string reason;
};

struct RankStage {
  std::vector<int> subject_ranks;  // per dataset subject
  int initial_rank = 0;
  bool overridden = false;
  std::optional<RankReport> report;
};

RankStage run_rank_stage(const MultiBlockDataset& data, const GridyOptions& options);

/// Subjects entering the fitting stage together with their segmented blocks.
struct SegmentStage {
  std::vector<std::string> subjects;
  std::vector<Group> groups;
  std::vector<int> subject_ranks;  // own initial rank estimate
  std::vector<Matrix> joint_blocks;
  std::vector<Matrix> group_blocks;
  int initial_rank = 0;
  SegmentationResult segmentation;  // blocks are moved out into the fields above
  std::vector<Exclusion> exclusions;
};

/// Subjects with a zero own rank are excluded; the rest are segmented with the
/// common initial rank.
SegmentStage run_segment_stage(const MultiBlockDataset& data, const RankStage& ranks, const GridyOptions& options);

struct FitStage {
  std::vector<std::string> subjects;
  std::vector<Group> groups;
  int joint_rank = 0;
  int group_rank = 0;
  Matrix B_joint;
  std::array<Matrix, 2> B_group;
  Matrix Phi_joint;
  std::array<Matrix, 2> Phi_group;
  std::optional<ScaModel> joint_model;
  std::array<ScaModel, 2> group_models;
  std::vector<Matrix> F_joint;  // factors from the simultaneous component fit
  std::vector<Matrix> F_group;
  std::vector<Exclusion> exclusions;

  const Matrix& group_loadings(std::size_t k) const { return B_group[static_cast<std::size_t>(group_index(groups[k]))]; }
};

/// Fits the joint structure over all subjects and each group's individual
/// structure within the group. Subjects whose own rank leaves no room for a
/// group component are excluded.
FitStage run_fit_stage(const SegmentStage& seg, int joint_rank, const GridyOptions& options);

/// Refit and VAR estimation for the fitted subjects; `blocks[k]` is the raw
/// block of fit.subjects[k].
std::vector<SubjectDynamics> run_dynamics_stage(const std::vector<Matrix>& blocks, const FitStage& fit,
                                                const GridyOptions& options);

std::vector<VarNetwork> run_network_stage(const FitStage& fit, const std::vector<SubjectDynamics>& dynamics,
                                          const GridyOptions& options);

struct GridyResult {
  RankStage ranks;
  SegmentStage segments;
  FitStage fit;
  std::vector<Matrix> blocks;  // raw blocks of fit.subjects
  std::vector<SubjectDynamics> dynamics;
  std::vector<VarNetwork> networks;

  std::vector<Exclusion> exclusions() const;
  /// Per fitted subject ||X_k - F_k B'||^2 using the simultaneous component factors.
  std::vector<double> sca_sse() const;
};

GridyResult estimate_gridy(const MultiBlockDataset& data, const GridyOptions& options);

/// Raw blocks of the listed subjects, looked up by id.
std::vector<Matrix> blocks_for(const MultiBlockDataset& data, const std::vector<std::string>& subjects);

}  // namespace gridy

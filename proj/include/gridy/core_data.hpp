#pragma once

#include "gridy/types.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace gridy {

/// One subject's T_k x d observation matrix (rows are time points).
struct TimeSeriesBlock {
  std::string subject_id;
  Matrix values;
  Group group = Group::first;
};

/// Immutable multi-subject, two-group dataset. Construction validates that all
/// blocks share d, have at least two rows, contain only finite values and that
/// both groups are non-empty. Blocks keep their input order.
class MultiBlockDataset {
 public:
  MultiBlockDataset() = default;
  MultiBlockDataset(std::vector<TimeSeriesBlock> blocks, std::vector<std::string> variable_names);

  const std::vector<TimeSeriesBlock>& blocks() const { return blocks_; }
  const TimeSeriesBlock& block(std::size_t k) const { return blocks_.at(k); }
  const std::vector<std::string>& variable_names() const { return variable_names_; }
  std::size_t size() const { return blocks_.size(); }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(variable_names_.size()); }

  /// (K_1, K_2)
  std::array<std::size_t, 2> group_sizes() const;
  /// Positions of the subjects belonging to `g`, in dataset order.
  std::vector<std::size_t> indices_of(Group g) const;

  /// A new dataset holding only the listed subjects.
  MultiBlockDataset subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<TimeSeriesBlock> blocks_;
  std::vector<std::string> variable_names_;
};

struct LoadOptions {
  /// Subtract per-subject column means after reading.
  bool center = true;
};

/// Reads a JSON manifest (array of {"subject", "group", "path"}) and the
/// per-subject CSV files it references. Relative paths resolve against the
/// manifest's directory.
MultiBlockDataset load_dataset(const std::filesystem::path& manifest, const LoadOptions& options = {});

/// Writes one CSV per subject plus manifest.json into `dir`; returns the manifest path.
std::filesystem::path write_dataset(const MultiBlockDataset& data, const std::filesystem::path& dir);

/// Simulation truth for a GRIDY data-generating process.
struct GroundTruth {
  Matrix B_joint;                     // d x r_J
  std::array<Matrix, 2> B_group;      // d x r_G each
  std::vector<Matrix> F_joint;        // per subject, T_k x r_J
  std::vector<Matrix> F_group;        // per subject, T_k x r_G
  Matrix Psi_joint;                   // scaled-factor transition
  Matrix Psi_group;
  Vector C_joint;                     // diagonal of C_k (identical across k)
  Vector C_group;
  Matrix Phi_joint;
  Matrix Phi_group;
  double sigma_eps = 1.0;

  /// F_k B' for the joint part of subject k.
  Matrix joint_block(std::size_t k) const { return F_joint[k] * B_joint.transpose(); }
  Matrix group_block(std::size_t k, Group g) const {
    return F_group[k] * B_group[group_index(g)].transpose();
  }
  /// Transition of the unscaled factors F = C A, i.e. C Psi C^{-1}.
  Matrix factor_transition_joint() const;
  Matrix factor_transition_group() const;
};

void write_ground_truth(const GroundTruth& truth, const MultiBlockDataset& data, const std::filesystem::path& dir);
GroundTruth read_ground_truth(const MultiBlockDataset& data, const std::filesystem::path& dir);

}  // namespace gridy

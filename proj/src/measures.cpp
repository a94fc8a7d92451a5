#include "gridy/measures.hpp"

#include "gridy/alignment.hpp"
#include "gridy/error.hpp"

#include <cmath>

namespace gridy {

double congruence(const Matrix& truth, const Matrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw ConfigError("congruence: shape mismatch");
  const double nt = truth.norm();
  const double ne = estimate.norm();
  if (!(nt > 0.0) || !(ne > 0.0)) throw NumericalError("congruence: zero-norm input");
  return (truth.array() * estimate.array()).sum() / (nt * ne);
}

double column_congruence(const Matrix& truth, const Matrix& estimate) {
  if (truth.cols() == 0) throw ConfigError("column_congruence: no columns");
  double total = 0.0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) total += congruence(truth.col(j), estimate.col(j));
  return total / static_cast<double>(truth.cols());
}

double r2_structure(const std::vector<Matrix>& blocks, const std::vector<Matrix>& fitted) {
  if (blocks.size() != fitted.size() || blocks.empty()) throw ConfigError("r2_structure: block count mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const double energy = blocks[k].squaredNorm();
    if (!(energy > 0.0)) throw NumericalError("r2_structure: zero-norm block");
    total += 1.0 - (blocks[k] - fitted[k]).squaredNorm() / energy;
  }
  return total / static_cast<double>(blocks.size());
}

double rmse_structure(const std::vector<Matrix>& truth, const std::vector<Matrix>& fitted) {
  if (truth.size() != fitted.size() || truth.empty()) throw ConfigError("rmse_structure: block count mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k].rows() != fitted[k].rows() || truth[k].cols() != fitted[k].cols())
      throw ConfigError("rmse_structure: shape mismatch");
    total += (truth[k] - fitted[k]).squaredNorm() / static_cast<double>(truth[k].rows());
  }
  const double d = static_cast<double>(truth.front().cols());
  return std::sqrt(total / (static_cast<double>(truth.size()) * d));
}

namespace {

struct StructureData {
  Matrix b_true;                     // raw truth loadings
  Matrix transition;                 // truth factor transition
  std::vector<Matrix> f_true;        // truth factors of the evaluated subjects
  std::vector<Matrix> x;             // raw blocks
  Matrix b_est;
  std::vector<Matrix> f_est;
  std::vector<Matrix> psi_est;
};

StructureMeasures measure(const StructureData& s) {
  StructureMeasures m;
  std::vector<Matrix> fitted, truth_blocks;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    fitted.push_back(s.f_est[k] * s.b_est.transpose());
    truth_blocks.push_back(s.f_true[k] * s.b_true.transpose());
  }
  m.r2 = r2_structure(s.x, fitted);
  m.rmse = rmse_structure(truth_blocks, fitted);

  // Unit-norm loadings scale: B D^{-1}, F D, transition D T D^{-1}.
  const Vector norms = s.b_true.colwise().norm().transpose();
  const Matrix b_unit = s.b_true * norms.cwiseInverse().asDiagonal();
  const Matrix transition = norms.asDiagonal() * s.transition * norms.cwiseInverse().asDiagonal();
  const Vector est_norms = s.b_est.colwise().norm().transpose();
  const Matrix b_est = s.b_est * est_norms.cwiseInverse().asDiagonal();
  const Alignment al = align_to_truth(b_est, b_unit);
  m.cc_b = column_congruence(b_unit, al.aligned);
  double cc_f = 0.0, cc_psi = 0.0;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    cc_f += column_congruence(s.f_true[k] * norms.asDiagonal(), align_columns(s.f_est[k], al));
    const Matrix psi_unit = est_norms.asDiagonal() * s.psi_est[k] * est_norms.cwiseInverse().asDiagonal();
    cc_psi += congruence(transition, align_transition(psi_unit, al));
  }
  m.cc_f = cc_f / static_cast<double>(s.x.size());
  m.cc_psi = cc_psi / static_cast<double>(s.x.size());
  return m;
}

}  // namespace

std::array<StructureMeasures, 3> evaluate_structures(const GroundTruth& truth, const EstimateView& est) {
  const std::size_t n = est.blocks.size();
  if (est.truth_index.size() != n || est.groups.size() != n || est.F_joint.size() != n || est.F_group.size() != n ||
      est.Psi_joint.size() != n || est.Psi_group.size() != n)
    throw ConfigError("evaluate_structures: inconsistent estimate sizes");
  if (est.B_joint.cols() != truth.B_joint.cols() || est.B_group[0].cols() != truth.B_group[0].cols())
    throw ConfigError("evaluate_structures: estimated ranks differ from the truth");

  std::array<StructureMeasures, 3> out;
  StructureData joint;
  joint.b_true = truth.B_joint;
  joint.transition = truth.factor_transition_joint();
  joint.b_est = est.B_joint;
  std::array<StructureData, 2> group;
  for (std::size_t g = 0; g < 2; ++g) {
    group[g].b_true = truth.B_group[g];
    group[g].transition = truth.factor_transition_group();
    group[g].b_est = est.B_group[g];
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t t = est.truth_index[k];
    joint.x.push_back(est.blocks[k]);
    joint.f_true.push_back(truth.F_joint.at(t));
    joint.f_est.push_back(est.F_joint[k]);
    joint.psi_est.push_back(est.Psi_joint[k]);
    auto& gs = group[static_cast<std::size_t>(group_index(est.groups[k]))];
    gs.x.push_back(est.blocks[k]);
    gs.f_true.push_back(truth.F_group.at(t));
    gs.f_est.push_back(est.F_group[k]);
    gs.psi_est.push_back(est.Psi_group[k]);
  }
  if (joint.b_true.cols() > 0) out[0] = measure(joint);
  for (std::size_t g = 0; g < 2; ++g) {
    if (group[g].x.empty()) throw ConfigError("evaluate_structures: a group has no evaluated subjects");
    out[g + 1] = measure(group[g]);
  }
  return out;
}

}  // namespace gridy

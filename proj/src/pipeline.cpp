#include "gridy/pipeline.hpp"

#include "gridy/error.hpp"
#include "gridy/random.hpp"

#include <algorithm>
#include <map>

namespace gridy {

std::string to_string(ModelKind m) { return m == ModelKind::pf2 ? "pf2" : "ind"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "pf2") return ModelKind::pf2;
  if (s == "ind") return ModelKind::ind;
  throw ConfigError("unknown model '" + s + "' (expected pf2 or ind)");
}

RankStage run_rank_stage(const MultiBlockDataset& data, const GridyOptions& options) {
  RankStage out;
  if (options.rank) {
    if (*options.rank < 1) throw ConfigError("rank override must be >= 1");
    out.initial_rank = *options.rank;
    out.overridden = true;
    out.subject_ranks.assign(data.size(), *options.rank);
    return out;
  }
  BootstrapOptions boot = options.bootstrap;
  boot.execution = options.execution;
  out.report = select_ranks(data, boot, derive_seed(options.seed, "rank"));
  out.subject_ranks = out.report->ranks();
  out.initial_rank = out.report->voted_rank;
  return out;
}

SegmentStage run_segment_stage(const MultiBlockDataset& data, const RankStage& ranks, const GridyOptions& options) {
  if (ranks.subject_ranks.size() != data.size()) throw ConfigError("segment: rank list does not match the dataset");
  if (ranks.initial_rank < 1) throw ConfigError("segment: the initial rank is zero; nothing to segment");
  SegmentStage out;
  out.initial_rank = ranks.initial_rank;
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (ranks.subject_ranks[k] == 0) {
      out.exclusions.push_back({data.block(k).subject_id, "estimated rank is zero"});
      continue;
    }
    kept.push_back(k);
  }
  const MultiBlockDataset subset = data.subset(kept);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.subjects.push_back(subset.block(i).subject_id);
    out.groups.push_back(subset.block(i).group);
    out.subject_ranks.push_back(ranks.subject_ranks[kept[i]]);
  }
  const std::vector<int> common(kept.size(), ranks.initial_rank);
  AjiveOptions ajive;
  ajive.reps = options.ajive_reps;
  ajive.joint_rank = options.joint_rank;
  ajive.execution = options.execution;
  out.segmentation = segment(subset, common, ajive, derive_seed(options.seed, "ajive"));
  out.joint_blocks = std::move(out.segmentation.joint_blocks);
  out.group_blocks = std::move(out.segmentation.group_blocks);
  out.segmentation.joint_blocks.clear();
  out.segmentation.group_blocks.clear();
  return out;
}

namespace {

ScaModel fit_structure(const std::vector<Matrix>& blocks, int rank, const GridyOptions& options,
                       std::uint64_t seed) {
  ScaOptions sca = options.sca;
  sca.execution = options.execution;
  return options.model == ModelKind::pf2 ? fit_pf2(blocks, rank, sca, seed) : fit_sca_ind(blocks, rank, sca, seed);
}

}  // namespace

FitStage run_fit_stage(const SegmentStage& seg, int joint_rank, const GridyOptions& options) {
  FitStage out;
  out.joint_rank = joint_rank;
  const int group_rank = options.group_rank.value_or(seg.initial_rank - joint_rank);
  if (group_rank < 1)
    throw ConfigError("fit: group rank is " + std::to_string(group_rank) +
                      " (initial rank " + std::to_string(seg.initial_rank) + ", joint rank " +
                      std::to_string(joint_rank) + "); pass an explicit group rank");
  out.group_rank = group_rank;

  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < seg.subjects.size(); ++k) {
    if (!options.group_rank && seg.subject_ranks[k] - joint_rank < 1) {
      out.exclusions.push_back({seg.subjects[k], "group individual rank is zero"});
      continue;
    }
    kept.push_back(k);
  }

  std::vector<Matrix> joint_blocks;
  std::array<std::vector<Matrix>, 2> group_blocks;
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const std::size_t k = kept[i];
    out.subjects.push_back(seg.subjects[k]);
    out.groups.push_back(seg.groups[k]);
    joint_blocks.push_back(seg.joint_blocks[k]);
    const auto g = static_cast<std::size_t>(group_index(seg.groups[k]));
    group_blocks[g].push_back(seg.group_blocks[k]);
    members[g].push_back(i);
  }
  for (std::size_t g = 0; g < 2; ++g)
    if (members[g].empty())
      throw ConfigError("fit: group " + std::to_string(g + 1) + " has no subjects left after exclusions");

  const std::size_t n = kept.size();
  const Eigen::Index d = seg.joint_blocks.front().cols();
  out.F_joint.assign(n, Matrix());
  out.F_group.assign(n, Matrix());
  if (joint_rank > 0) {
    out.joint_model = fit_structure(joint_blocks, joint_rank, options, derive_seed(options.seed, "fit", 0));
    out.B_joint = out.joint_model->B;
    out.Phi_joint = out.joint_model->Phi;
    auto factors = extract_factors(*out.joint_model);
    for (std::size_t i = 0; i < n; ++i) out.F_joint[i] = std::move(factors[i]);
  } else {
    out.B_joint = Matrix(d, 0);
    out.Phi_joint = Matrix(0, 0);
    for (std::size_t i = 0; i < n; ++i) out.F_joint[i] = Matrix(joint_blocks[i].rows(), 0);
  }
  for (std::size_t g = 0; g < 2; ++g) {
    out.group_models[g] = fit_structure(group_blocks[g], group_rank, options, derive_seed(options.seed, "fit", g + 1));
    out.B_group[g] = out.group_models[g].B;
    out.Phi_group[g] = out.group_models[g].Phi;
    auto factors = extract_factors(out.group_models[g]);
    for (std::size_t j = 0; j < members[g].size(); ++j) out.F_group[members[g][j]] = std::move(factors[j]);
  }
  return out;
}

std::vector<SubjectDynamics> run_dynamics_stage(const std::vector<Matrix>& blocks, const FitStage& fit,
                                                const GridyOptions& options) {
  if (blocks.size() != fit.subjects.size()) throw ConfigError("dynamics: block list does not match the fit");
  std::vector<Matrix> group_loadings;
  for (std::size_t k = 0; k < fit.subjects.size(); ++k) group_loadings.push_back(fit.group_loadings(k));
  return estimate_dynamics(blocks, fit.B_joint, group_loadings, options.var_order, options.execution);
}

std::vector<VarNetwork> run_network_stage(const FitStage& fit, const std::vector<SubjectDynamics>& dynamics,
                                          const GridyOptions& options) {
  if (options.var_order != 1) throw ConfigError("network: the VAR conversion requires order 1");
  std::vector<VarNetwork> out(dynamics.size());
  parallel_for(options.execution, static_cast<std::ptrdiff_t>(dynamics.size()), [&](std::ptrdiff_t i) {
    const auto k = static_cast<std::size_t>(i);
    const auto& dyn = dynamics[k];
    const Matrix empty(0, 0);
    const Matrix& psi_j = fit.joint_rank > 0 ? dyn.joint.Psi.front() : empty;
    const Matrix& eta_j = fit.joint_rank > 0 ? dyn.joint.Sigma_eta : empty;
    out[k] = build_network(fit.B_joint, fit.group_loadings(k), psi_j, dyn.group.Psi.front(), dyn.sigma_e, eta_j,
                           dyn.group.Sigma_eta, options.noise_mode);
  });
  return out;
}

std::vector<Matrix> blocks_for(const MultiBlockDataset& data, const std::vector<std::string>& subjects) {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < data.size(); ++k) index[data.block(k).subject_id] = k;
  std::vector<Matrix> out;
  for (const auto& s : subjects) {
    auto it = index.find(s);
    if (it == index.end()) throw ConfigError("subject '" + s + "' is not in the dataset");
    out.push_back(data.block(it->second).values);
  }
  return out;
}

std::vector<Exclusion> GridyResult::exclusions() const {
  std::vector<Exclusion> out = segments.exclusions;
  out.insert(out.end(), fit.exclusions.begin(), fit.exclusions.end());
  return out;
}

std::vector<double> GridyResult::sca_sse() const {
  std::vector<double> out;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Matrix fitted =
        fit.F_joint[k] * fit.B_joint.transpose() + fit.F_group[k] * fit.group_loadings(k).transpose();
    out.push_back((blocks[k] - fitted).squaredNorm());
  }
  return out;
}

GridyResult estimate_gridy(const MultiBlockDataset& data, const GridyOptions& options) {
  GridyResult out;
  out.ranks = run_rank_stage(data, options);
  out.segments = run_segment_stage(data, out.ranks, options);
  out.fit = run_fit_stage(out.segments, out.segments.segmentation.joint_rank, options);
  out.blocks = blocks_for(data, out.fit.subjects);
  out.dynamics = run_dynamics_stage(out.blocks, out.fit, options);
  if (options.var_order == 1) out.networks = run_network_stage(out.fit, out.dynamics, options);
  return out;
}

}  // namespace gridy

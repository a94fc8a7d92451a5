#include "gridy/artifacts.hpp"

#include "gridy/csv.hpp"
#include "gridy/error.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace gridy {

using nlohmann::json;

namespace {

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json exclusions_json(const std::vector<Exclusion>& list) {
  json out = json::array();
  for (const auto& e : list) out.push_back({{"subject", e.subject}, {"reason", e.reason}});
  return out;
}

std::vector<Exclusion> exclusions_from(const json& j) {
  std::vector<Exclusion> out;
  for (const auto& e : j) out.push_back({e.at("subject").get<std::string>(), e.at("reason").get<std::string>()});
  return out;
}

json subjects_json(const std::vector<std::string>& ids, const std::vector<Group>& groups) {
  json out = json::array();
  for (std::size_t k = 0; k < ids.size(); ++k) out.push_back({{"subject", ids[k]}, {"group", static_cast<int>(groups[k])}});
  return out;
}

std::string mode_name(NoiseCovarianceMode m) { return m == NoiseCovarianceMode::paper ? "paper" : "expanded"; }

std::string csv_name(const std::string& id) { return id + ".csv"; }

/// Factor-indexed headers f1..fr.
std::vector<std::string> factor_names(Eigen::Index r) { return default_names(r, "f"); }

Matrix read_plain(const fs::path& path) { return read_csv_matrix(path).values; }

Matrix read_labeled(const fs::path& path) { return read_csv_matrix(path, true).values; }

/// Loadings are labeled by variable; a zero-rank structure has no file.
void write_loadings(const fs::path& path, const Matrix& b, const std::vector<std::string>& variables) {
  if (b.cols() == 0) return;
  write_csv_matrix(path, b, factor_names(b.cols()), variables, "variable");
}

Matrix read_loadings(const fs::path& path, Eigen::Index d, Eigen::Index rank) {
  if (rank == 0) return Matrix(d, 0);
  return read_labeled(path);
}

json sca_report(const std::optional<ScaModel>& model, int rank) {
  if (!model) return {{"rank", rank}};
  json trace = json(model->sse_trace);
  return {{"rank", rank},          {"sse", model->sse},     {"iterations", model->iterations},
          {"converged", model->converged}, {"start", model->start}, {"sse_trace", trace}};
}

}  // namespace

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    json doc;
    in >> doc;
    return doc;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<SimulationConfig> simulation_grid_from_json(const json& doc) {
  if (doc.is_object() && doc.contains("grid")) {
    std::vector<SimulationConfig> out;
    for (const auto& cell : doc.at("grid")) {
      auto part = simulation_grid_from_json(cell);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  if (!doc.is_object()) throw ConfigError("simulation config must be a JSON object");
  static const std::vector<std::string> known = {"d",         "T",         "K",       "r_J",
                                                 "r_G",       "type",      "c",       "sigma_xi",
                                                 "sigma_eps", "burn_in",   "exact_cross_products"};
  for (const auto& [key, value] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("simulation config: unknown field '" + key + "'");

  std::vector<SimulationConfig> grid(1);
  try {
    for (const auto& key : known) {
      if (!doc.contains(key)) continue;
      const json& field = doc.at(key);
      const json values = field.is_array() ? field : json::array({field});
      if (values.empty()) throw ConfigError("simulation config: '" + key + "' is an empty list");
      std::vector<SimulationConfig> next;
      for (const auto& base : grid)
        for (const auto& v : values) {
          SimulationConfig c = base;
          if (key == "d") c.d = v.get<Eigen::Index>();
          else if (key == "T") c.T = v.get<Eigen::Index>();
          else if (key == "K") c.K = v.get<std::size_t>();
          else if (key == "r_J") c.r_joint = v.get<Eigen::Index>();
          else if (key == "r_G") c.r_group = v.get<Eigen::Index>();
          else if (key == "type") c.corr_type = v.get<int>();
          else if (key == "c") c.c = v.get<double>();
          else if (key == "sigma_xi") c.sigma_xi = v.get<double>();
          else if (key == "sigma_eps") c.sigma_eps = v.get<double>();
          else if (key == "burn_in") c.burn_in = v.get<int>();
          else c.exact_cross_products = v.get<bool>();
          next.push_back(c);
        }
      grid = std::move(next);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("simulation config: ") + e.what());
  }
  for (const auto& c : grid) c.validate();
  return grid;
}

json simulation_config_to_json(const SimulationConfig& c) {
  return {{"d", c.d},           {"T", c.T},
          {"K", c.K},           {"r_J", c.r_joint},
          {"r_G", c.r_group},   {"type", c.corr_type},
          {"c", c.c},           {"sigma_xi", c.xi_variance()},
          {"sigma_eps", c.sigma_eps}, {"burn_in", c.burn_in},
          {"exact_cross_products", c.exact_cross_products}};
}

json options_to_json(const GridyOptions& o) {
  auto opt = [](const std::optional<int>& v) { return v ? json(*v) : json(nullptr); };
  return {{"seed", o.seed},
          {"xi", o.bootstrap.xi},
          {"bootstrap_reps", o.bootstrap.reps},
          {"ajive_reps", o.ajive_reps},
          {"tol", o.sca.tol},
          {"max_iter", o.sca.max_iter},
          {"n_starts", o.sca.n_starts},
          {"model", to_string(o.model)},
          {"rank", opt(o.rank)},
          {"rank_joint", opt(o.joint_rank)},
          {"rank_group", opt(o.group_rank)},
          {"var_order", o.var_order},
          {"noise_covariance", mode_name(o.noise_mode)}};
}

void write_rank_json(const fs::path& path, const MultiBlockDataset& data, const RankStage& ranks,
                     const GridyOptions& options) {
  json subjects = json::array();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& b = data.block(k);
    json s = {{"subject", b.subject_id}, {"group", static_cast<int>(b.group)}, {"rank", ranks.subject_ranks[k]}};
    if (ranks.report) {
      const auto& diag = ranks.report->subjects[k].diagnostics;
      s["max_rank"] = diag.shrinkage.max_rank;
      s["kappa"] = diag.shrinkage.kappa;
      s["theta0_u"] = diag.theta0_u;
      s["theta0_v"] = diag.theta0_v;
      s["angle95_u"] = diag.angle95_u;
      s["angle95_v"] = diag.angle95_v;
      s["degenerate"] = diag.degenerate;
    }
    subjects.push_back(std::move(s));
  }
  json doc = {{"voted_rank", ranks.initial_rank},
              {"overridden", ranks.overridden},
              {"xi", options.bootstrap.xi},
              {"reps", options.bootstrap.reps},
              {"seed", options.seed},
              {"subjects", subjects}};
  write_json(path, doc);
}

RankStage read_rank_json(const fs::path& path, const MultiBlockDataset& data) {
  const json doc = read_json(path);
  RankStage out;
  try {
    out.initial_rank = doc.at("voted_rank").get<int>();
    out.overridden = doc.value("overridden", false);
    std::map<std::string, int> by_id;
    for (const auto& s : doc.at("subjects")) by_id[s.at("subject").get<std::string>()] = s.at("rank").get<int>();
    for (const auto& b : data.blocks()) {
      auto it = by_id.find(b.subject_id);
      if (it == by_id.end()) throw ConfigError("rank file has no entry for subject '" + b.subject_id + "'");
      out.subject_ranks.push_back(it->second);
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed rank file " + path.string() + ": " + e.what());
  }
  return out;
}

void write_segment_dir(const fs::path& dir, const std::vector<std::string>& variables, const SegmentStage& seg) {
  fs::create_directories(dir);
  const auto& s = seg.segmentation;
  json subjects = subjects_json(seg.subjects, seg.groups);
  for (std::size_t k = 0; k < seg.subjects.size(); ++k) subjects[k]["rank"] = seg.subject_ranks[k];
  json doc = {{"joint_rank", s.joint_rank},
              {"joint_rank_overridden", s.joint_rank_overridden},
              {"initial_rank", seg.initial_rank},
              {"thresholds", {{"random_direction", s.random_direction_threshold}, {"wedin", s.wedin_threshold}}},
              {"stacked_singvals", to_json(s.stacked_singvals)},
              {"subjects", subjects},
              {"excluded", exclusions_json(seg.exclusions)},
              {"variables", variables}};
  write_json(dir / "report.json", doc);
  if (s.joint_rank > 0) write_loadings(dir / "joint_basis.csv", s.joint_basis, variables);
  for (std::size_t k = 0; k < seg.subjects.size(); ++k) {
    write_csv_matrix(dir / "joint" / csv_name(seg.subjects[k]), seg.joint_blocks[k], variables);
    write_csv_matrix(dir / "group" / csv_name(seg.subjects[k]), seg.group_blocks[k], variables);
  }
}

SegmentStage read_segment_dir(const fs::path& dir) {
  const json doc = read_json(dir / "report.json");
  SegmentStage seg;
  try {
    const auto variables = doc.at("variables").get<std::vector<std::string>>();
    const auto d = static_cast<Eigen::Index>(variables.size());
    seg.initial_rank = doc.at("initial_rank").get<int>();
    auto& s = seg.segmentation;
    s.joint_rank = doc.at("joint_rank").get<int>();
    s.joint_rank_overridden = doc.value("joint_rank_overridden", false);
    s.random_direction_threshold = doc.at("thresholds").at("random_direction").get<double>();
    s.wedin_threshold = doc.at("thresholds").at("wedin").get<double>();
    s.stacked_singvals = vector_from(doc.at("stacked_singvals"));
    s.joint_basis = read_loadings(dir / "joint_basis.csv", d, s.joint_rank);
    seg.exclusions = exclusions_from(doc.at("excluded"));
    for (const auto& e : doc.at("subjects")) {
      const auto id = e.at("subject").get<std::string>();
      seg.subjects.push_back(id);
      seg.groups.push_back(static_cast<Group>(e.at("group").get<int>()));
      seg.subject_ranks.push_back(e.at("rank").get<int>());
      seg.joint_blocks.push_back(read_plain(dir / "joint" / csv_name(id)));
      seg.group_blocks.push_back(read_plain(dir / "group" / csv_name(id)));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed segmentation report in " + dir.string() + ": " + e.what());
  }
  if (seg.subjects.empty()) throw ConfigError("segmentation in " + dir.string() + " lists no subjects");
  return seg;
}

void write_fit_dir(const fs::path& dir, const std::vector<std::string>& variables, const FitStage& fit,
                   const GridyOptions& options) {
  fs::create_directories(dir);
  write_loadings(dir / "B_joint.csv", fit.B_joint, variables);
  const auto fj = factor_names(fit.joint_rank);
  const auto fg = factor_names(fit.group_rank);
  if (fit.joint_rank > 0) {
    write_csv_matrix(dir / "Phi_joint.csv", fit.Phi_joint, fj);
    write_csv_matrix(dir / "A_joint.csv", fit.joint_model->A, fj);
  }
  for (std::size_t g = 0; g < 2; ++g) {
    const std::string tag = "group" + std::to_string(g + 1);
    write_loadings(dir / ("B_" + tag + ".csv"), fit.B_group[g], variables);
    write_csv_matrix(dir / ("Phi_" + tag + ".csv"), fit.Phi_group[g], fg);
    write_csv_matrix(dir / ("A_" + tag + ".csv"), fit.group_models[g].A, fg);
  }
  // Scales C_k, one row per subject.
  std::array<std::vector<std::string>, 2> group_ids;
  std::array<std::vector<Vector>, 2> group_scales;
  std::array<std::size_t, 2> seen{0, 0};
  std::vector<Vector> joint_scales;
  for (std::size_t k = 0; k < fit.subjects.size(); ++k) {
    const auto g = static_cast<std::size_t>(group_index(fit.groups[k]));
    group_ids[g].push_back(fit.subjects[k]);
    group_scales[g].push_back(fit.group_models[g].C[seen[g]++]);
    if (fit.joint_model) joint_scales.push_back(fit.joint_model->C[k]);
  }
  auto stack_rows = [](const std::vector<Vector>& rows, Eigen::Index r) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), r);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return m;
  };
  if (fit.joint_model) write_csv_matrix(dir / "C_joint.csv", stack_rows(joint_scales, fit.joint_rank), fj, fit.subjects, "subject");
  for (std::size_t g = 0; g < 2; ++g)
    write_csv_matrix(dir / ("C_group" + std::to_string(g + 1) + ".csv"), stack_rows(group_scales[g], fit.group_rank),
                     fg, group_ids[g], "subject");
  for (std::size_t k = 0; k < fit.subjects.size(); ++k) {
    if (fit.joint_rank > 0) write_csv_matrix(dir / "factors" / "joint" / csv_name(fit.subjects[k]), fit.F_joint[k], fj);
    write_csv_matrix(dir / "factors" / "group" / csv_name(fit.subjects[k]), fit.F_group[k], fg);
  }
  json doc = {{"model", to_string(options.model)},
              {"joint_rank", fit.joint_rank},
              {"group_rank", fit.group_rank},
              {"subjects", subjects_json(fit.subjects, fit.groups)},
              {"excluded", exclusions_json(fit.exclusions)},
              {"variables", variables},
              {"structures",
               {{"joint", sca_report(fit.joint_model, fit.joint_rank)},
                {"group1", sca_report(fit.group_models[0], fit.group_rank)},
                {"group2", sca_report(fit.group_models[1], fit.group_rank)}}}};
  write_json(dir / "report.json", doc);
}

FitStage read_fit_dir(const fs::path& dir) {
  const json doc = read_json(dir / "report.json");
  FitStage fit;
  try {
    const auto variables = doc.at("variables").get<std::vector<std::string>>();
    const auto d = static_cast<Eigen::Index>(variables.size());
    fit.joint_rank = doc.at("joint_rank").get<int>();
    fit.group_rank = doc.at("group_rank").get<int>();
    fit.exclusions = exclusions_from(doc.at("excluded"));
    for (const auto& e : doc.at("subjects")) {
      fit.subjects.push_back(e.at("subject").get<std::string>());
      fit.groups.push_back(static_cast<Group>(e.at("group").get<int>()));
    }
    fit.B_joint = read_loadings(dir / "B_joint.csv", d, fit.joint_rank);
    fit.Phi_joint = fit.joint_rank > 0 ? read_plain(dir / "Phi_joint.csv") : Matrix(0, 0);
    for (std::size_t g = 0; g < 2; ++g) {
      const std::string tag = "group" + std::to_string(g + 1);
      fit.B_group[g] = read_loadings(dir / ("B_" + tag + ".csv"), d, fit.group_rank);
      fit.Phi_group[g] = read_plain(dir / ("Phi_" + tag + ".csv"));
    }
    for (const auto& id : fit.subjects) {
      fit.F_group.push_back(read_plain(dir / "factors" / "group" / csv_name(id)));
      fit.F_joint.push_back(fit.joint_rank > 0 ? read_plain(dir / "factors" / "joint" / csv_name(id))
                                               : Matrix(fit.F_group.back().rows(), 0));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed fit report in " + dir.string() + ": " + e.what());
  }
  return fit;
}

namespace {

std::vector<std::string> lag_names(Eigen::Index r, std::size_t p) {
  std::vector<std::string> out;
  for (std::size_t lag = 1; lag <= p; ++lag)
    for (Eigen::Index j = 1; j <= r; ++j) out.push_back("lag" + std::to_string(lag) + "_f" + std::to_string(j));
  return out;
}

Matrix hstack(const std::vector<Matrix>& parts, Eigen::Index r) {
  Matrix out(r, r * static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) out.middleCols(static_cast<Eigen::Index>(i) * r, r) = parts[i];
  return out;
}

std::vector<Matrix> hsplit(const Matrix& m) {
  std::vector<Matrix> out;
  const Eigen::Index r = m.rows();
  if (r == 0) return out;
  for (Eigen::Index at = 0; at < m.cols(); at += r) out.push_back(m.middleCols(at, r));
  return out;
}

void write_var(const fs::path& dir, const std::string& tag, const std::string& id, const VarFit& var, Eigen::Index r) {
  if (r == 0) return;
  write_csv_matrix(dir / ("Psi_" + tag) / csv_name(id), hstack(var.Psi, r), lag_names(r, var.Psi.size()));
  write_csv_matrix(dir / ("Sigma_eta_" + tag) / csv_name(id), var.Sigma_eta, factor_names(r));
}

VarFit read_var(const fs::path& dir, const std::string& tag, const std::string& id, Eigen::Index r) {
  VarFit var;
  if (r == 0) return var;
  var.Psi = hsplit(read_plain(dir / ("Psi_" + tag) / csv_name(id)));
  var.Sigma_eta = read_plain(dir / ("Sigma_eta_" + tag) / csv_name(id));
  var.spectral_radius = companion_spectral_radius(var.Psi);
  return var;
}

}  // namespace

void write_r2_csv(const fs::path& path, const std::vector<std::string>& variables, const FitStage& fit,
                  const std::vector<Matrix>& blocks, const std::vector<SubjectDynamics>& dynamics) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "subject,group,structure,factor,variable,r2,zero_variance\n";
  for (std::size_t k = 0; k < fit.subjects.size(); ++k) {
    const int g = static_cast<int>(fit.groups[k]);
    auto emit = [&](const Matrix& f, const std::string& structure) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) {
        const VariableR2 r2 = r2_per_variable(blocks[k], f.col(j));
        for (std::size_t i = 0; i < variables.size(); ++i)
          out << fit.subjects[k] << ',' << g << ',' << structure << ",f" << j + 1 << ',' << variables[i] << ','
              << format_double(r2.r2(static_cast<Eigen::Index>(i))) << ',' << (r2.zero_variance[i] ? 1 : 0) << '\n';
      }
    };
    emit(dynamics[k].factors.joint, "joint");
    emit(dynamics[k].factors.group, "group" + std::to_string(g));
  }
}

void write_dynamics_dir(const fs::path& dir, const std::vector<std::string>& variables, const FitStage& fit,
                        const std::vector<Matrix>& blocks, const std::vector<SubjectDynamics>& dynamics,
                        const GridyOptions& options) {
  fs::create_directories(dir);
  write_loadings(dir / "B_joint.csv", fit.B_joint, variables);
  write_loadings(dir / "B_group1.csv", fit.B_group[0], variables);
  write_loadings(dir / "B_group2.csv", fit.B_group[1], variables);
  json subjects = subjects_json(fit.subjects, fit.groups);
  for (std::size_t k = 0; k < fit.subjects.size(); ++k) {
    const auto& id = fit.subjects[k];
    const auto& dyn = dynamics[k];
    if (fit.joint_rank > 0)
      write_csv_matrix(dir / "F_joint" / csv_name(id), dyn.factors.joint, factor_names(fit.joint_rank));
    write_csv_matrix(dir / "F_group" / csv_name(id), dyn.factors.group, factor_names(fit.group_rank));
    write_var(dir, "joint", id, dyn.joint, fit.joint_rank);
    write_var(dir, "group", id, dyn.group, fit.group_rank);
    write_csv_matrix(dir / "Sigma_E" / csv_name(id), dyn.sigma_e.diagonal().transpose(), variables);
    subjects[k]["refit_sse"] = dyn.refit_sse;
    subjects[k]["spectral_radius_joint"] = fit.joint_rank > 0 ? json(dyn.joint.spectral_radius) : json(nullptr);
    subjects[k]["spectral_radius_group"] = dyn.group.spectral_radius;
  }
  write_r2_csv(dir / "r2.csv", variables, fit, blocks, dynamics);
  json doc = {{"var_order", options.var_order},
              {"joint_rank", fit.joint_rank},
              {"group_rank", fit.group_rank},
              {"variables", variables},
              {"subjects", subjects}};
  write_json(dir / "report.json", doc);
}

DynamicsArtifacts read_dynamics_dir(const fs::path& dir) {
  const json doc = read_json(dir / "report.json");
  DynamicsArtifacts out;
  try {
    out.variables = doc.at("variables").get<std::vector<std::string>>();
    const auto d = static_cast<Eigen::Index>(out.variables.size());
    out.var_order = doc.at("var_order").get<int>();
    auto& fit = out.fit;
    fit.joint_rank = doc.at("joint_rank").get<int>();
    fit.group_rank = doc.at("group_rank").get<int>();
    fit.B_joint = read_loadings(dir / "B_joint.csv", d, fit.joint_rank);
    fit.B_group[0] = read_loadings(dir / "B_group1.csv", d, fit.group_rank);
    fit.B_group[1] = read_loadings(dir / "B_group2.csv", d, fit.group_rank);
    for (const auto& e : doc.at("subjects")) {
      const auto id = e.at("subject").get<std::string>();
      fit.subjects.push_back(id);
      fit.groups.push_back(static_cast<Group>(e.at("group").get<int>()));
      SubjectDynamics dyn;
      dyn.factors.group = read_plain(dir / "F_group" / csv_name(id));
      dyn.factors.joint = fit.joint_rank > 0 ? read_plain(dir / "F_joint" / csv_name(id))
                                             : Matrix(dyn.factors.group.rows(), 0);
      dyn.joint = read_var(dir, "joint", id, fit.joint_rank);
      dyn.group = read_var(dir, "group", id, fit.group_rank);
      dyn.sigma_e = read_plain(dir / "Sigma_E" / csv_name(id)).row(0).transpose().asDiagonal();
      dyn.refit_sse = e.value("refit_sse", 0.0);
      out.dynamics.push_back(std::move(dyn));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed dynamics report in " + dir.string() + ": " + e.what());
  }
  return out;
}

void write_network_dir(const fs::path& dir, const std::vector<std::string>& variables, const FitStage& fit,
                       const std::vector<VarNetwork>& networks, NoiseCovarianceMode mode) {
  fs::create_directories(dir);
  const auto d = static_cast<Eigen::Index>(variables.size());
  std::array<Matrix, 2> directed_sum{Matrix::Zero(d, d), Matrix::Zero(d, d)};
  std::array<Matrix, 2> contemporaneous_sum{Matrix::Zero(d, d), Matrix::Zero(d, d)};
  std::array<int, 2> counts{0, 0};
  const int bound = fit.joint_rank + fit.group_rank;
  json subjects = subjects_json(fit.subjects, fit.groups);
  bool holds = true;
  for (std::size_t k = 0; k < networks.size(); ++k) {
    const Matrix directed = networks[k].directed();
    write_csv_matrix(dir / "directed" / csv_name(fit.subjects[k]), directed, variables, variables, "variable");
    write_csv_matrix(dir / "contemporaneous" / csv_name(fit.subjects[k]), networks[k].sigma_zeta, variables, variables,
                     "variable");
    const auto g = static_cast<std::size_t>(group_index(fit.groups[k]));
    directed_sum[g] += directed;
    contemporaneous_sum[g] += networks[k].sigma_zeta;
    ++counts[g];
    const Eigen::Index rank = numerical_rank(directed, 1e-8);
    subjects[k]["directed_rank"] = rank;
    holds = holds && rank <= bound;
  }
  for (std::size_t g = 0; g < 2; ++g) {
    if (counts[g] == 0) continue;
    const std::string tag = "group" + std::to_string(g + 1);
    write_csv_matrix(dir / (tag + "_directed_mean.csv"), directed_sum[g] / counts[g], variables, variables, "variable");
    write_csv_matrix(dir / (tag + "_contemporaneous_mean.csv"), contemporaneous_sum[g] / counts[g], variables,
                     variables, "variable");
  }
  json doc = {{"noise_covariance", mode_name(mode)},
              {"rank_bound", bound},
              {"rank_bound_holds", holds},
              {"variables", variables},
              {"subjects", subjects}};
  write_json(dir / "report.json", doc);
}

void write_evaluation_csv(const fs::path& path, const std::array<StructureMeasures, 3>& measures) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "measure,structure,value\n";
  static const char* structures[3] = {"joint", "group1", "group2"};
  for (std::size_t m = 0; m < kMeasureNames.size(); ++m)
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& sm = measures[s];
      const double v[5] = {sm.r2, sm.rmse, sm.cc_b, sm.cc_f, sm.cc_psi};
      out << kMeasureNames[m] << ',' << structures[s] << ',' << format_double(v[m]) << '\n';
    }
}

json write_run(const fs::path& dir, const MultiBlockDataset& data, const GridyResult& result,
               const GridyOptions& options, const json& config_echo) {
  fs::create_directories(dir);
  std::ofstream log(dir / "run.log", std::ios::app);
  auto stamp = [&](const std::string& what) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    log << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << ' ' << what << '\n';
  };
  stamp("writing artifacts");
  if (options.rank) stamp("initial rank overridden: " + std::to_string(*options.rank));
  if (options.joint_rank) stamp("joint rank overridden: " + std::to_string(*options.joint_rank));
  if (options.group_rank) stamp("group rank overridden: " + std::to_string(*options.group_rank));
  const auto& variables = data.variable_names();
  write_json(dir / "config.json", config_echo);
  write_rank_json(dir / "rank.json", data, result.ranks, options);
  write_segment_dir(dir / "seg", variables, result.segments);
  write_fit_dir(dir / "fit", variables, result.fit, options);
  write_dynamics_dir(dir / "dyn", variables, result.fit, result.blocks, result.dynamics, options);
  if (!result.networks.empty())
    write_network_dir(dir / "net", variables, result.fit, result.networks, options.noise_mode);

  const auto sca = result.sca_sse();
  std::vector<double> refit;
  bool dominates = true;
  for (std::size_t k = 0; k < result.dynamics.size(); ++k) {
    refit.push_back(result.dynamics[k].refit_sse);
    dominates = dominates && refit.back() <= sca[k] + 1e-12 * result.blocks[k].squaredNorm();
  }
  const auto& seg = result.segments.segmentation;
  json report = {
      {"schema", "gridy-run/1"},
      {"subjects",
       {{"total", data.size()}, {"fitted", result.fit.subjects}, {"excluded", exclusions_json(result.exclusions())}}},
      {"ranks",
       {{"initial", result.ranks.initial_rank},
        {"initial_overridden", result.ranks.overridden},
        {"joint", result.fit.joint_rank},
        {"joint_overridden", seg.joint_rank_overridden},
        {"group", result.fit.group_rank},
        {"group_overridden", options.group_rank.has_value()}}},
      {"segmentation",
       {{"random_direction_threshold", seg.random_direction_threshold},
        {"wedin_threshold", seg.wedin_threshold},
        {"stacked_singvals", to_json(seg.stacked_singvals)}}},
      {"fit",
       {{"model", to_string(options.model)},
        {"structures",
         {{"joint", sca_report(result.fit.joint_model, result.fit.joint_rank)},
          {"group1", sca_report(result.fit.group_models[0], result.fit.group_rank)},
          {"group2", sca_report(result.fit.group_models[1], result.fit.group_rank)}}}}},
      {"dynamics",
       {{"var_order", options.var_order}, {"refit_sse", refit}, {"sca_sse", sca}, {"refit_dominates", dominates}}},
      {"network", nullptr},
      {"artifacts", json::array({"rank.json", "seg", "fit", "dyn"})}};
  if (!result.networks.empty()) {
    int max_rank = 0;
    for (const auto& n : result.networks)
      max_rank = std::max(max_rank, static_cast<int>(numerical_rank(n.directed(), 1e-8)));
    const int bound = result.fit.joint_rank + result.fit.group_rank;
    report["network"] = {{"noise_covariance", mode_name(options.noise_mode)},
                         {"max_directed_rank", max_rank},
                         {"rank_bound", bound},
                         {"rank_bound_holds", max_rank <= bound}};
    report["artifacts"].push_back("net");
  }
  write_json(dir / "report.json", report);
  stamp("done");
  return report;
}

std::vector<std::string> validate_report(const json& r) {
  std::vector<std::string> problems;
  auto need = [&](const json& obj, const std::string& path, const std::string& key, json::value_t type) {
    if (!obj.is_object() || !obj.contains(key)) {
      problems.push_back("missing " + path + key);
      return false;
    }
    const auto t = obj.at(key).type();
    const bool number_ok = type == json::value_t::number_float &&
                           (t == json::value_t::number_integer || t == json::value_t::number_unsigned);
    const bool int_ok = type == json::value_t::number_integer && t == json::value_t::number_unsigned;
    if (t != type && !number_ok && !int_ok) {
      problems.push_back(path + key + " has the wrong type");
      return false;
    }
    return true;
  };
  using vt = json::value_t;
  if (need(r, "", "schema", vt::string) && r.at("schema") != "gridy-run/1") problems.push_back("unknown schema");
  if (need(r, "", "subjects", vt::object)) {
    const auto& s = r.at("subjects");
    need(s, "subjects.", "total", vt::number_integer);
    need(s, "subjects.", "fitted", vt::array);
    need(s, "subjects.", "excluded", vt::array);
  }
  if (need(r, "", "ranks", vt::object)) {
    const auto& s = r.at("ranks");
    for (const char* k : {"initial", "joint", "group"}) need(s, "ranks.", k, vt::number_integer);
    for (const char* k : {"initial_overridden", "joint_overridden", "group_overridden"}) need(s, "ranks.", k, vt::boolean);
  }
  if (need(r, "", "segmentation", vt::object)) {
    const auto& s = r.at("segmentation");
    need(s, "segmentation.", "random_direction_threshold", vt::number_float);
    need(s, "segmentation.", "wedin_threshold", vt::number_float);
    need(s, "segmentation.", "stacked_singvals", vt::array);
  }
  if (need(r, "", "fit", vt::object)) {
    const auto& f = r.at("fit");
    need(f, "fit.", "model", vt::string);
    if (need(f, "fit.", "structures", vt::object))
      for (const char* k : {"joint", "group1", "group2"})
        if (need(f.at("structures"), "fit.structures.", k, vt::object))
          need(f.at("structures").at(k), std::string("fit.structures.") + k + ".", "rank", vt::number_integer);
  }
  if (need(r, "", "dynamics", vt::object)) {
    const auto& dyn = r.at("dynamics");
    need(dyn, "dynamics.", "var_order", vt::number_integer);
    need(dyn, "dynamics.", "refit_sse", vt::array);
    need(dyn, "dynamics.", "sca_sse", vt::array);
    need(dyn, "dynamics.", "refit_dominates", vt::boolean);
  }
  if (!r.contains("network")) {
    problems.push_back("missing network");
  } else if (!r.at("network").is_null()) {
    const auto& n = r.at("network");
    need(n, "network.", "max_directed_rank", vt::number_integer);
    need(n, "network.", "rank_bound", vt::number_integer);
    need(n, "network.", "rank_bound_holds", vt::boolean);
  }
  need(r, "", "artifacts", vt::array);
  return problems;
}

}  // namespace gridy

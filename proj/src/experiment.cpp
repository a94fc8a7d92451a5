#include "gridy/experiment.hpp"

#include "gridy/csv.hpp"
#include "gridy/error.hpp"
#include "gridy/random.hpp"

#include <fstream>
#include <map>

namespace gridy {

namespace {

EstimateView view_of(const GridyResult& result, const MultiBlockDataset& data) {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < data.size(); ++k) index[data.block(k).subject_id] = k;
  EstimateView v;
  const auto& fit = result.fit;
  v.groups = fit.groups;
  v.blocks = result.blocks;
  v.B_joint = fit.B_joint;
  v.B_group = fit.B_group;
  for (std::size_t k = 0; k < fit.subjects.size(); ++k) {
    v.truth_index.push_back(index.at(fit.subjects[k]));
    const auto& dyn = result.dynamics[k];
    v.F_joint.push_back(dyn.factors.joint);
    v.F_group.push_back(dyn.factors.group);
    v.Psi_joint.push_back(dyn.joint.Psi.empty() ? Matrix(0, 0) : dyn.joint.Psi.front());
    v.Psi_group.push_back(dyn.group.Psi.empty() ? Matrix(0, 0) : dyn.group.Psi.front());
  }
  return v;
}

}  // namespace

ReplicationOutcome run_replication(const SimulationConfig& config, const ExperimentOptions& options, int rep,
                                   std::uint64_t seed) {
  ReplicationOutcome out;
  out.rep = rep;
  try {
    SimulationConfig cfg = config;
    cfg.seed = derive_seed(seed, "sim", static_cast<std::uint64_t>(rep));
    const SimulatedData sim = simulate_dataset(cfg);
    out.snr = snr_value(sim.truth);

    GridyOptions gopt = options.gridy;
    gopt.seed = derive_seed(seed, "gridy", static_cast<std::uint64_t>(rep));
    if (options.true_ranks) {
      gopt.rank = static_cast<int>(cfg.r_joint + cfg.r_group);
      gopt.joint_rank = static_cast<int>(cfg.r_joint);
    }
    const GridyResult result = estimate_gridy(sim.data, gopt);
    out.joint_rank = result.fit.joint_rank;
    out.group_rank = result.fit.group_rank;
    const auto sca = result.sca_sse();
    for (std::size_t k = 0; k < sca.size(); ++k) out.sse.emplace_back(result.dynamics[k].refit_sse, sca[k]);
    for (const auto& net : result.networks) {
      Eigen::JacobiSVD<Matrix> svd(net.directed());
      out.network_singvals.push_back(svd.singularValues());
    }
    out.measures = evaluate_structures(sim.truth, view_of(result, sim.data));
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

ExperimentTable run_experiment(const std::vector<SimulationConfig>& grid, const ExperimentOptions& options,
                               int reps, std::uint64_t seed) {
  if (reps < 1) throw ConfigError("run_experiment: reps must be >= 1");
  for (const auto& c : grid) c.validate();
  ExperimentTable table;
  table.grid = grid;
  table.outcomes.resize(grid.size() * static_cast<std::size_t>(reps));
  ExperimentOptions inner = options;
  inner.gridy.execution = Execution::serial;
  parallel_for(options.execution, static_cast<std::ptrdiff_t>(table.outcomes.size()), [&](std::ptrdiff_t i) {
    const auto cell = static_cast<std::size_t>(i) / static_cast<std::size_t>(reps);
    const int rep = static_cast<int>(static_cast<std::size_t>(i) % static_cast<std::size_t>(reps));
    auto& slot = table.outcomes[static_cast<std::size_t>(i)];
    slot = run_replication(grid[cell], inner, rep, derive_seed(seed, "cell", cell));
    slot.config = cell;
  });
  return table;
}

void write_experiment_csv(const ExperimentTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "config,rep,measure,structure,value,d,T,K,r_J,r_G,type,c,sigma_xi,sigma_eps\n";
  static const char* structures[3] = {"joint", "group1", "group2"};
  for (const auto& o : table.outcomes) {
    const auto& c = table.grid[o.config];
    const std::string echo = std::to_string(c.d) + "," + std::to_string(c.T) + "," + std::to_string(c.K) + "," +
                             std::to_string(c.r_joint) + "," + std::to_string(c.r_group) + "," +
                             std::to_string(c.corr_type) + "," + format_double(c.c) + "," +
                             format_double(c.xi_variance()) + "," + format_double(c.sigma_eps);
    for (std::size_t m = 0; m < kMeasureNames.size(); ++m) {
      for (std::size_t s = 0; s < 3; ++s) {
        std::string value;
        if (!o.failed) {
          const auto& sm = o.measures[s];
          const double v[5] = {sm.r2, sm.rmse, sm.cc_b, sm.cc_f, sm.cc_psi};
          value = format_double(v[m]);
        }
        out << o.config << ',' << o.rep << ',' << kMeasureNames[m] << ',' << structures[s] << ',' << value << ','
            << echo << '\n';
      }
    }
  }
}

std::vector<RankFrequency> rank_frequencies(const std::vector<SimulationConfig>& grid,
                                            const BootstrapOptions& options, int reps, std::uint64_t seed) {
  std::vector<RankFrequency> rows;
  for (std::size_t cell = 0; cell < grid.size(); ++cell) {
    std::map<int, int> counts;
    for (int rep = 0; rep < reps; ++rep) {
      SimulationConfig cfg = grid[cell];
      const std::uint64_t cell_seed = derive_seed(seed, "cell", cell);
      cfg.seed = derive_seed(cell_seed, "sim", static_cast<std::uint64_t>(rep));
      const SimulatedData sim = simulate_dataset(cfg);
      const RankReport report = select_ranks(sim.data, options, derive_seed(cell_seed, "rank", static_cast<std::uint64_t>(rep)));
      for (int r : report.ranks()) ++counts[r];
    }
    for (const auto& [rank, count] : counts) rows.push_back({cell, rank, count});
  }
  return rows;
}

void write_rank_frequency_csv(const std::vector<SimulationConfig>& grid, const std::vector<RankFrequency>& rows,
                              const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "r_J,r_G,c,d,T,estimated_rank,count\n";
  for (const auto& r : rows) {
    const auto& c = grid.at(r.config);
    out << c.r_joint << ',' << c.r_group << ',' << format_double(c.c) << ',' << c.d << ',' << c.T << ','
        << r.estimated_rank << ',' << r.count << '\n';
  }
}

}  // namespace gridy

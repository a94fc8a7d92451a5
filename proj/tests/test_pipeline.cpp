#include "gridy/artifacts.hpp"
#include "gridy/csv.hpp"
#include "gridy/error.hpp"
#include "gridy/experiment.hpp"
#include "gridy/linalg.hpp"
#include "gridy/pipeline.hpp"
#include "gridy/plot_data.hpp"
#include "gridy/simulation.hpp"
#include "test_util.hpp"

#include <fstream>
#include <sstream>

using namespace gridy;
using gridy::testing::ScratchDir;

namespace {

SimulatedData small_data(std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.d = 24;
  cfg.T = 80;
  cfg.K = 5;
  cfg.c = 2.0;
  cfg.seed = seed;
  return simulate_dataset(cfg);
}

GridyOptions quick_options() {
  GridyOptions o;
  o.seed = 11;
  o.bootstrap.reps = 30;
  o.ajive_reps = 30;
  o.sca.n_starts = 2;
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Pipeline, EndToEndReportValidates) {
  ScratchDir dir("pipe");
  const auto sim = small_data(1);
  const auto result = estimate_gridy(sim.data, quick_options());
  const auto report = write_run(dir.path(), sim.data, result, quick_options(), {{"test", true}});
  EXPECT_TRUE(validate_report(report).empty());
  EXPECT_TRUE(validate_report(read_json(dir / "report.json")).empty());
  for (const char* p : {"config.json", "rank.json", "run.log", "seg/report.json", "fit/report.json", "dyn/report.json",
                        "net/report.json", "net/group1_directed_mean.csv"})
    EXPECT_TRUE(std::filesystem::exists(dir / p)) << p;
  EXPECT_TRUE(report.at("network").at("rank_bound_holds").get<bool>());
  EXPECT_TRUE(report.at("dynamics").at("refit_dominates").get<bool>());
  nlohmann::json broken = report;
  broken.erase("ranks");
  EXPECT_FALSE(validate_report(broken).empty());
}

TEST(Pipeline, RankOverridesBypassSelectionAndAreRecorded) {
  ScratchDir dir("pipe");
  const auto sim = small_data(2);
  auto o = quick_options();
  o.joint_rank = 2;
  o.group_rank = 1;
  const auto result = estimate_gridy(sim.data, o);
  EXPECT_EQ(result.fit.joint_rank, 2);
  EXPECT_EQ(result.fit.group_rank, 1);
  EXPECT_TRUE(result.segments.segmentation.joint_rank_overridden);
  const auto report = write_run(dir.path(), sim.data, result, o, {});
  EXPECT_TRUE(report.at("ranks").at("joint_overridden").get<bool>());
  EXPECT_TRUE(report.at("ranks").at("group_overridden").get<bool>());
  EXPECT_NE(slurp(dir / "run.log").find("joint rank overridden: 2"), std::string::npos);
}

TEST(Pipeline, NetworkRankBoundAndSegmentationIdentity) {
  const auto sim = small_data(3);
  const auto result = estimate_gridy(sim.data, quick_options());
  const int bound = result.fit.joint_rank + result.fit.group_rank;
  for (const auto& net : result.networks) {
    const Vector s = thin_svd(net.directed()).S;
    for (Eigen::Index i = bound; i < s.size(); ++i) EXPECT_LE(s(i), 1e-8 * s(0));
  }
  for (std::size_t k = 0; k < result.dynamics.size(); ++k)
    EXPECT_LE(result.dynamics[k].refit_sse, result.sca_sse()[k] + 1e-12 * result.blocks[k].squaredNorm());
}

TEST(Pipeline, ReproducibleArtifacts) {
  ScratchDir a("pipe_a"), b("pipe_b");
  const auto sim = small_data(4);
  for (const auto* dir : {&a, &b}) {
    const auto result = estimate_gridy(sim.data, quick_options());
    write_run(dir->path(), sim.data, result, quick_options(), {{"seed", 11}});
    write_plot_data(dir->path() / "plots", sim.data, result);
  }
  int compared = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file() || entry.path().filename() == "run.log") continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    EXPECT_EQ(slurp(entry.path()), slurp(b.path() / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 30);
}

TEST(Pipeline, SerialAndParallelAgree) {
  const auto sim = small_data(5);
  auto s = quick_options();
  s.execution = Execution::serial;
  const auto a = estimate_gridy(sim.data, s);
  const auto b = estimate_gridy(sim.data, quick_options());
  EXPECT_EQ(a.ranks.subject_ranks, b.ranks.subject_ranks);
  EXPECT_EQ(a.fit.joint_rank, b.fit.joint_rank);
  EXPECT_TRUE(a.fit.B_joint == b.fit.B_joint);
  EXPECT_TRUE(a.networks.front().directed() == b.networks.front().directed());
}

TEST(Pipeline, StagedArtifactsRoundTrip) {
  ScratchDir dir("pipe");
  const auto sim = small_data(6);
  auto o = quick_options();
  o.rank = 4;
  const auto ranks = run_rank_stage(sim.data, o);
  write_rank_json(dir / "rank.json", sim.data, ranks, o);
  const auto ranks_back = read_rank_json(dir / "rank.json", sim.data);
  EXPECT_EQ(ranks_back.subject_ranks, ranks.subject_ranks);
  EXPECT_EQ(ranks_back.initial_rank, 4);

  const auto seg = run_segment_stage(sim.data, ranks, o);
  write_segment_dir(dir / "seg", sim.data.variable_names(), seg);
  const auto seg_back = read_segment_dir(dir / "seg");
  EXPECT_EQ(seg_back.segmentation.joint_rank, seg.segmentation.joint_rank);
  ASSERT_EQ(seg_back.joint_blocks.size(), seg.joint_blocks.size());
  for (std::size_t k = 0; k < seg.joint_blocks.size(); ++k) {
    EXPECT_TRUE(seg_back.joint_blocks[k] == seg.joint_blocks[k]);
    EXPECT_TRUE(seg_back.group_blocks[k] == seg.group_blocks[k]);
  }

  const auto fit = run_fit_stage(seg_back, seg_back.segmentation.joint_rank, o);
  write_fit_dir(dir / "fit", sim.data.variable_names(), fit, o);
  const auto fit_back = read_fit_dir(dir / "fit");
  EXPECT_TRUE(fit_back.B_joint == fit.B_joint);
  EXPECT_EQ(fit_back.subjects, fit.subjects);

  const auto blocks = blocks_for(sim.data, fit_back.subjects);
  const auto dyn = run_dynamics_stage(blocks, fit_back, o);
  write_dynamics_dir(dir / "dyn", sim.data.variable_names(), fit_back, blocks, dyn, o);
  const auto art = read_dynamics_dir(dir / "dyn");
  ASSERT_EQ(art.dynamics.size(), dyn.size());
  EXPECT_TRUE(art.dynamics[0].joint.Psi[0] == dyn[0].joint.Psi[0]);
  EXPECT_TRUE(art.dynamics[0].sigma_e == dyn[0].sigma_e);
  const auto nets = run_network_stage(art.fit, art.dynamics, o);
  write_network_dir(dir / "net", art.variables, art.fit, nets, o.noise_mode);
  const auto directed = read_csv_matrix(dir / "net" / "directed" / (fit.subjects[0] + ".csv"), true);
  EXPECT_EQ(directed.row_labels, sim.data.variable_names());
  EXPECT_EQ(directed.header, sim.data.variable_names());
}

TEST(Pipeline, ExcludesSubjectsWithoutGroupComponent) {
  const auto sim = small_data(7);
  auto o = quick_options();
  RankStage ranks;
  ranks.subject_ranks.assign(sim.data.size(), 4);
  ranks.subject_ranks[1] = 2;
  ranks.subject_ranks[7] = 0;
  ranks.initial_rank = 4;
  const auto seg = run_segment_stage(sim.data, ranks, o);
  ASSERT_EQ(seg.exclusions.size(), 1u);
  EXPECT_EQ(seg.exclusions[0].subject, sim.data.block(7).subject_id);
  const auto fit = run_fit_stage(seg, 2, o);
  ASSERT_EQ(fit.exclusions.size(), 1u);
  EXPECT_EQ(fit.exclusions[0].subject, sim.data.block(1).subject_id);
  EXPECT_EQ(fit.subjects.size(), sim.data.size() - 2);
}

TEST(Pipeline, InvalidOverridesAreConfigErrors) {
  const auto sim = small_data(8);
  auto o = quick_options();
  o.rank = 2;
  o.joint_rank = 2;
  EXPECT_THROW(estimate_gridy(sim.data, o), ConfigError);
  o.joint_rank = 3;
  EXPECT_THROW(estimate_gridy(sim.data, o), ConfigError);
  EXPECT_THROW(parse_model_kind("pca"), ConfigError);
}

TEST(Pipeline, IndModelFixesCorrelation) {
  const auto sim = small_data(9);
  auto o = quick_options();
  o.model = ModelKind::ind;
  const auto result = estimate_gridy(sim.data, o);
  EXPECT_TRUE(result.fit.Phi_group[0] == Matrix::Identity(result.fit.group_rank, result.fit.group_rank));
}

TEST(Experiment, ShapeAndDeterminism) {
  ScratchDir dir("exp");
  SimulationConfig cfg;
  cfg.d = 20;
  cfg.T = 60;
  cfg.K = 3;
  ExperimentOptions eo;
  eo.gridy = quick_options();
  const auto a = run_experiment({cfg}, eo, 2, 5);
  const auto b = run_experiment({cfg}, eo, 2, 5);
  write_experiment_csv(a, dir / "a.csv");
  write_experiment_csv(b, dir / "b.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  const auto text = slurp(dir / "a.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 2 * 5 * 3);
  for (const auto& o : a.outcomes) EXPECT_FALSE(o.failed) << o.error;
  for (const auto& o : a.outcomes)
    for (const auto& m : o.measures) {
      for (double cc : {m.cc_b, m.cc_f, m.cc_psi}) {
        EXPECT_GE(cc, -1.0);
        EXPECT_LE(cc, 1.0);
      }
      EXPECT_GE(m.rmse, 0.0);
    }
}

TEST(Experiment, GridExpansion) {
  const auto grid = simulation_grid_from_json(nlohmann::json::parse(R"({"d": [20, 30], "c": [0.5, 1, 2], "K": 2})"));
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_EQ(grid[5].d, 30);
  EXPECT_DOUBLE_EQ(grid[5].c, 2.0);
  EXPECT_EQ(grid[0].K, 2u);
  const auto listed = simulation_grid_from_json(nlohmann::json::parse(R"({"grid": [{"d": 20}, {"d": 40, "type": 2}]})"));
  ASSERT_EQ(listed.size(), 2u);
  EXPECT_EQ(listed[1].corr_type, 2);
  EXPECT_THROW(simulation_grid_from_json(nlohmann::json::parse(R"({"dd": 3})")), ConfigError);
  EXPECT_THROW(simulation_grid_from_json(nlohmann::json::parse(R"({"d": "x"})")), ConfigError);
}

TEST(Experiment, RankFrequenciesCountEverySubject) {
  SimulationConfig cfg;
  cfg.d = 20;
  cfg.T = 60;
  cfg.K = 2;
  BootstrapOptions bo;
  bo.reps = 20;
  const auto rows = rank_frequencies({cfg}, bo, 2, 3);
  int total = 0;
  for (const auto& r : rows) total += r.count;
  EXPECT_EQ(total, 2 * 4);
}

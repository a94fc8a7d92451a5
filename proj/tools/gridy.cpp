#include "gridy/artifacts.hpp"
#include "gridy/error.hpp"
#include "gridy/experiment.hpp"
#include "gridy/parallel.hpp"
#include "gridy/pipeline.hpp"
#include "gridy/plot_data.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::uint64_t seed = 7;
  bool no_center = false;
};

gridy::MultiBlockDataset load(const std::string& manifest, bool no_center) {
  gridy::LoadOptions opts;
  opts.center = !no_center;
  return gridy::load_dataset(manifest, opts);
}

gridy::NoiseCovarianceMode parse_mode(const std::string& s) {
  if (s == "paper") return gridy::NoiseCovarianceMode::paper;
  if (s == "expanded") return gridy::NoiseCovarianceMode::expanded;
  throw gridy::ConfigError("unknown noise covariance mode '" + s + "' (expected paper or expanded)");
}

void add_fit_flags(CLI::App* cmd, gridy::GridyOptions& o, std::string& model) {
  cmd->add_option("--model", model, "pf2 or ind")->check(CLI::IsMember({"pf2", "ind"}));
  cmd->add_option("--tol", o.sca.tol, "relative SSE decrease that stops the fit");
  cmd->add_option("--max-iter", o.sca.max_iter, "iteration cap per start");
  cmd->add_option("--n-starts", o.sca.n_starts, "number of starts");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group integrative dynamic factor models: rank selection, segmentation, fitting and networks"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "thread cap for all kernels (default: GRIDY_THREADS or all cores)");
  app.fallthrough();

  gridy::GridyOptions opt;
  std::string model = "pf2";
  std::string noise_mode = "paper";
  std::string manifest, out;
  bool no_center = false;
  std::optional<int> rank, rank_joint, rank_group;

  // simulate
  auto* sim = app.add_subcommand("simulate", "run the simulation study and write tidy measures");
  std::string sim_config;
  int sim_reps = 100;
  std::string emit_data, rank_freq;
  bool estimate_ranks = false;
  sim->add_option("--config", sim_config, "simulation grid JSON")->required();
  sim->add_option("--reps", sim_reps, "replications per grid cell");
  sim->add_option("--seed", opt.seed, "master seed");
  sim->add_option("--out", out, "results CSV")->required();
  sim->add_option("--emit-data", emit_data, "also write every simulated dataset and its truth here");
  sim->add_option("--rank-frequencies", rank_freq, "also write bootstrap rank frequencies to this CSV");
  sim->add_flag("--estimate-ranks", estimate_ranks, "estimate ranks instead of using the simulated ones");
  sim->add_option("--xi", opt.bootstrap.xi, "bootstrap angle factor");
  sim->add_option("--boot-reps", opt.bootstrap.reps, "bootstrap replications");
  sim->add_option("--ajive-reps", opt.ajive_reps, "segmentation threshold replications");
  add_fit_flags(sim, opt, model);

  // rank
  auto* rank_cmd = app.add_subcommand("rank", "estimate per-subject initial ranks");
  rank_cmd->add_option("--manifest", manifest, "dataset manifest")->required();
  rank_cmd->add_option("--xi", opt.bootstrap.xi, "bootstrap angle factor");
  rank_cmd->add_option("--reps", opt.bootstrap.reps, "bootstrap replications");
  rank_cmd->add_option("--seed", opt.seed, "master seed");
  rank_cmd->add_option("--out", out, "rank JSON")->required();
  rank_cmd->add_flag("--no-center", no_center, "do not center columns per subject");

  // segment
  auto* seg_cmd = app.add_subcommand("segment", "split blocks into joint and group individual structures");
  std::string ranks_path;
  seg_cmd->add_option("--manifest", manifest, "dataset manifest")->required();
  seg_cmd->add_option("--ranks", ranks_path, "rank JSON from `gridy rank`");
  seg_cmd->add_option("--rank", rank, "initial rank for every subject (instead of --ranks)");
  seg_cmd->add_option("--rank-joint", rank_joint, "joint rank, bypassing the threshold rule");
  seg_cmd->add_option("--reps", opt.ajive_reps, "threshold replications");
  seg_cmd->add_option("--seed", opt.seed, "master seed");
  seg_cmd->add_option("--out", out, "output directory")->required();
  seg_cmd->add_flag("--no-center", no_center, "do not center columns per subject");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit simultaneous component models to each structure");
  std::string seg_dir;
  fit_cmd->add_option("--segments", seg_dir, "directory from `gridy segment`")->required();
  fit_cmd->add_option("--rank-joint", rank_joint, "must match the segmentation's joint rank");
  fit_cmd->add_option("--rank-group", rank_group, "group individual rank (default: initial - joint)");
  fit_cmd->add_option("--seed", opt.seed, "master seed");
  fit_cmd->add_option("--out", out, "output directory")->required();
  add_fit_flags(fit_cmd, opt, model);

  // dynamics
  auto* dyn_cmd = app.add_subcommand("dynamics", "refit factors and estimate their VAR dynamics");
  std::string fit_dir;
  dyn_cmd->add_option("--fit", fit_dir, "directory from `gridy fit`")->required();
  dyn_cmd->add_option("--manifest", manifest, "dataset manifest")->required();
  dyn_cmd->add_option("--order", opt.var_order, "VAR order");
  dyn_cmd->add_option("--out", out, "output directory")->required();
  dyn_cmd->add_flag("--no-center", no_center, "do not center columns per subject");

  // network
  auto* net_cmd = app.add_subcommand("network", "directed and contemporaneous networks per subject");
  std::string dyn_dir;
  net_cmd->add_option("--dyn", dyn_dir, "directory from `gridy dynamics`")->required();
  net_cmd->add_option("--noise-covariance", noise_mode, "paper or expanded")
      ->check(CLI::IsMember({"paper", "expanded"}));
  net_cmd->add_option("--out", out, "output directory")->required();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "compare estimates against simulation truth");
  std::string truth_dir;
  eval_cmd->add_option("--dyn", dyn_dir, "directory from `gridy dynamics`")->required();
  eval_cmd->add_option("--manifest", manifest, "dataset manifest")->required();
  eval_cmd->add_option("--truth", truth_dir, "truth directory written by `gridy simulate --emit-data`")->required();
  eval_cmd->add_option("--out", out, "measures CSV")->required();
  eval_cmd->add_flag("--no-center", no_center, "do not center columns per subject");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "run every stage and write a complete artifact directory");
  pipe->add_option("--manifest", manifest, "dataset manifest")->required();
  pipe->add_option("--out", out, "output directory")->required();
  pipe->add_option("--seed", opt.seed, "master seed");
  pipe->add_option("--xi", opt.bootstrap.xi, "bootstrap angle factor");
  pipe->add_option("--reps", opt.bootstrap.reps, "bootstrap replications");
  pipe->add_option("--ajive-reps", opt.ajive_reps, "segmentation threshold replications");
  pipe->add_option("--rank", rank, "initial rank, bypassing the bootstrap");
  pipe->add_option("--rank-joint", rank_joint, "joint rank, bypassing the threshold rule");
  pipe->add_option("--rank-group", rank_group, "group individual rank");
  pipe->add_option("--order", opt.var_order, "VAR order");
  pipe->add_option("--noise-covariance", noise_mode, "paper or expanded")->check(CLI::IsMember({"paper", "expanded"}));
  pipe->add_flag("--no-center", no_center, "do not center columns per subject");
  add_fit_flags(pipe, opt, model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    gridy::set_thread_cap(threads > 0 ? threads : gridy::thread_cap_from_env());
    opt.model = gridy::parse_model_kind(model);
    opt.noise_mode = parse_mode(noise_mode);
    opt.rank = rank;
    opt.joint_rank = rank_joint;
    opt.group_rank = rank_group;

    if (*sim) {
      const auto grid = gridy::simulation_grid_from_json(gridy::read_json(sim_config));
      gridy::ExperimentOptions eo;
      eo.gridy = opt;
      eo.true_ranks = !estimate_ranks;
      const auto table = gridy::run_experiment(grid, eo, sim_reps, opt.seed);
      gridy::write_experiment_csv(table, out);
      json echo = {{"seed", opt.seed}, {"reps", sim_reps}, {"true_ranks", eo.true_ranks},
                   {"options", gridy::options_to_json(opt)}, {"grid", json::array()}};
      for (const auto& c : grid) echo["grid"].push_back(gridy::simulation_config_to_json(c));
      gridy::write_json(fs::path(out).replace_extension(".config.json"), echo);
      int failed = 0;
      for (const auto& o : table.outcomes)
        if (o.failed) {
          ++failed;
          std::cerr << "config " << o.config << " rep " << o.rep << " failed: " << o.error << '\n';
        }
      if (!emit_data.empty()) {
        for (std::size_t cell = 0; cell < grid.size(); ++cell)
          for (int rep = 0; rep < sim_reps; ++rep) {
            gridy::SimulationConfig cfg = grid[cell];
            cfg.seed = gridy::derive_seed(gridy::derive_seed(opt.seed, "cell", cell), "sim", static_cast<std::uint64_t>(rep));
            const auto data = gridy::simulate_dataset(cfg);
            const fs::path dir = fs::path(emit_data) / ("config_" + std::to_string(cell)) / ("rep_" + std::to_string(rep));
            gridy::write_dataset(data.data, dir);
            gridy::write_ground_truth(data.truth, data.data, dir / "truth");
          }
      }
      if (!rank_freq.empty()) {
        const auto rows = gridy::rank_frequencies(grid, opt.bootstrap, sim_reps, opt.seed);
        gridy::write_rank_frequency_csv(grid, rows, rank_freq);
      }
      std::cout << table.outcomes.size() - static_cast<std::size_t>(failed) << " replications written to " << out;
      if (failed) std::cout << " (" << failed << " failed)";
      std::cout << '\n';
    } else if (*rank_cmd) {
      const auto data = load(manifest, no_center);
      const auto ranks = gridy::run_rank_stage(data, opt);
      gridy::write_rank_json(out, data, ranks, opt);
      std::cout << "voted rank " << ranks.initial_rank << '\n';
    } else if (*seg_cmd) {
      const auto data = load(manifest, no_center);
      gridy::RankStage ranks;
      if (rank) {
        ranks = gridy::run_rank_stage(data, opt);
      } else if (!ranks_path.empty()) {
        ranks = gridy::read_rank_json(ranks_path, data);
      } else {
        throw gridy::ConfigError("segment needs --ranks or --rank");
      }
      const auto seg = gridy::run_segment_stage(data, ranks, opt);
      gridy::write_segment_dir(out, data.variable_names(), seg);
      std::cout << "joint rank " << seg.segmentation.joint_rank
                << (seg.segmentation.joint_rank_overridden ? " (override)" : "") << '\n';
    } else if (*fit_cmd) {
      const auto seg = gridy::read_segment_dir(seg_dir);
      const int joint = seg.segmentation.joint_rank;
      if (rank_joint && *rank_joint != joint)
        throw gridy::ConfigError("--rank-joint " + std::to_string(*rank_joint) +
                                 " differs from the segmentation's joint rank " + std::to_string(joint) +
                                 "; re-run `gridy segment --rank-joint`");
      const auto fit = gridy::run_fit_stage(seg, joint, opt);
      const auto variables = gridy::read_json(fs::path(seg_dir) / "report.json").at("variables").get<std::vector<std::string>>();
      gridy::write_fit_dir(out, variables, fit, opt);
      std::cout << "fitted " << fit.subjects.size() << " subjects (joint rank " << fit.joint_rank << ", group rank "
                << fit.group_rank << ")\n";
      for (const auto& e : fit.exclusions) std::cerr << "excluded " << e.subject << ": " << e.reason << '\n';
    } else if (*dyn_cmd) {
      const auto data = load(manifest, no_center);
      const auto fit = gridy::read_fit_dir(fit_dir);
      const auto blocks = gridy::blocks_for(data, fit.subjects);
      const auto dynamics = gridy::run_dynamics_stage(blocks, fit, opt);
      gridy::write_dynamics_dir(out, data.variable_names(), fit, blocks, dynamics, opt);
      std::cout << "dynamics for " << dynamics.size() << " subjects\n";
    } else if (*net_cmd) {
      const auto art = gridy::read_dynamics_dir(dyn_dir);
      opt.var_order = art.var_order;
      const auto networks = gridy::run_network_stage(art.fit, art.dynamics, opt);
      gridy::write_network_dir(out, art.variables, art.fit, networks, opt.noise_mode);
      std::cout << "networks for " << networks.size() << " subjects\n";
    } else if (*eval_cmd) {
      const auto data = load(manifest, no_center);
      const auto art = gridy::read_dynamics_dir(dyn_dir);
      const auto truth = gridy::read_ground_truth(data, truth_dir);
      gridy::EstimateView view;
      std::map<std::string, std::size_t> index;
      for (std::size_t k = 0; k < data.size(); ++k) index[data.block(k).subject_id] = k;
      view.groups = art.fit.groups;
      view.blocks = gridy::blocks_for(data, art.fit.subjects);
      view.B_joint = art.fit.B_joint;
      view.B_group = art.fit.B_group;
      for (std::size_t k = 0; k < art.fit.subjects.size(); ++k) {
        view.truth_index.push_back(index.at(art.fit.subjects[k]));
        const auto& d = art.dynamics[k];
        view.F_joint.push_back(d.factors.joint);
        view.F_group.push_back(d.factors.group);
        view.Psi_joint.push_back(d.joint.Psi.empty() ? gridy::Matrix(0, 0) : d.joint.Psi.front());
        view.Psi_group.push_back(d.group.Psi.empty() ? gridy::Matrix(0, 0) : d.group.Psi.front());
      }
      gridy::write_evaluation_csv(out, gridy::evaluate_structures(truth, view));
      std::cout << "measures written to " << out << '\n';
    } else if (*pipe) {
      const auto data = load(manifest, no_center);
      const auto result = gridy::estimate_gridy(data, opt);
      json echo = {{"manifest", fs::absolute(manifest).lexically_normal().string()},
                   {"center", !no_center},
                   {"options", gridy::options_to_json(opt)}};
      const json report = gridy::write_run(out, data, result, opt, echo);
      gridy::write_plot_data(fs::path(out) / "plots", data, result);
      for (const auto& e : result.exclusions()) std::cerr << "excluded " << e.subject << ": " << e.reason << '\n';
      if (opt.rank) std::cerr << "initial rank overridden: " << *opt.rank << '\n';
      if (opt.joint_rank) std::cerr << "joint rank overridden: " << *opt.joint_rank << '\n';
      std::cout << "ranks: initial " << result.ranks.initial_rank << ", joint " << result.fit.joint_rank
                << ", group " << result.fit.group_rank << "; artifacts in " << out << '\n';
    }
  } catch (const gridy::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gridy::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

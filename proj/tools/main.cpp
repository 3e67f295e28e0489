// eerm command-line tool: experiment runs, suite generation, toy verification.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eerm/env_suite.hpp"
#include "eerm/errors.hpp"
#include "eerm/experiment.hpp"
#include "eerm/graph_io.hpp"
#include "eerm/synth.hpp"
#include "eerm/toy_verify.hpp"

namespace fs = std::filesystem;

namespace {

struct RunArgs {
  std::string config;
  std::optional<std::string> method;
  std::optional<int> seeds;
  std::optional<std::string> out;
  std::optional<int> threads;
};

int cmd_run(const RunArgs& a) {
  eerm::ExperimentConfig cfg = eerm::load_config(a.config);
  if (a.method) {
    cfg.methods = {*a.method};
  }
  if (a.seeds) {
    cfg.n_seeds = *a.seeds;
  }
  if (a.out) {
    cfg.out_dir = *a.out;
  }
  if (a.threads) {
    cfg.threads = *a.threads;
  }
  const auto result = eerm::run_and_emit(cfg);
  for (const auto& f : result.failures) {
    std::cerr << "run failed: " << f.method << " seed " << f.seed << ": " << f.error << '\n';
  }
  if (result.records.empty()) {
    std::cerr << "no successful runs; nothing written\n";
    return 1;
  }
  std::cout << result.records.size() << " records written to " << cfg.out_dir.string() << '\n';
  return result.failures.empty() ? 0 : 1;
}

struct ShiftArgs {
  std::string base;
  std::string out;
  eerm::ShiftRecipe recipe;
  bool time_aware = false;
};

int cmd_shiftgen(const ShiftArgs& a) {
  eerm::LoadReport report;
  const eerm::Graph base = eerm::load_graph(a.base, &report);
  if (report.warnings() > 0) {
    std::cerr << "base graph: dropped " << report.self_loops_dropped << " self-loops, "
              << report.duplicates_dropped << " duplicate edges\n";
  }
  eerm::EnvSuite suite = eerm::make_env_suite(base, a.recipe);
  if (a.time_aware) {
    suite = suite.with_split(eerm::time_aware_split(suite));
  }
  eerm::save_suite(suite, a.out);
  std::cout << suite.size() << " environments written to " << a.out << '\n';
  return 0;
}

int cmd_basegen(const eerm::BaseGraphRecipe& r, const std::string& out) {
  const eerm::Graph g = eerm::make_base_graph(r);
  eerm::save_graph(g, out);
  std::cout << g.num_nodes() << " nodes, " << g.num_edges() << " edges written to " << out
            << '\n';
  return 0;
}

int cmd_toy_verify(const eerm::ToyVerifySettings& s) {
  const auto checks = eerm::verify_toy(s);
  eerm::write_toy_table(std::cout, checks);
  int failed = 0;
  for (const auto& c : checks) {
    failed += c.pass() ? 0 : 1;
  }
  std::cout << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Environment-explorative risk minimization on graphs"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Train and evaluate every (method, seed) pair");
  run_cmd->add_option("--config", run.config, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--method", run.method, "Override the config's methods")
      ->check(CLI::IsMember({"erm", "eerm"}));
  run_cmd->add_option("--seeds", run.seeds, "Number of seeds")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--threads", run.threads, "Worker slots (EERM_THREADS caps this)")
      ->check(CLI::NonNegativeNumber);

  ShiftArgs shift;
  auto* shift_cmd = app.add_subcommand("shiftgen", "Build a synthetic shift suite from a graph");
  shift_cmd->add_option("--base", shift.base, "Base graph directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  shift_cmd->add_option("--envs", shift.recipe.n_envs, "Number of environments")
      ->capture_default_str();
  shift_cmd->add_option("--seed", shift.recipe.seed, "Generator seed")->capture_default_str();
  shift_cmd->add_option("--out", shift.out, "Output suite directory")->required();
  shift_cmd->add_option("--spurious-dim", shift.recipe.spurious_dim)->capture_default_str();
  shift_cmd->add_option("--classes", shift.recipe.num_classes)->capture_default_str();
  shift_cmd->add_option("--depth", shift.recipe.generator_depth, "Generator GCN layers")
      ->capture_default_str();
  shift_cmd->add_flag("--time-aware", shift.time_aware,
                      "Earliest env trains, next validates, rest test");

  eerm::BaseGraphRecipe base;
  std::string base_out;
  auto* base_cmd = app.add_subcommand("basegen", "Write a stochastic-block base graph");
  base_cmd->add_option("--out", base_out, "Output graph directory")->required();
  base_cmd->add_option("--nodes", base.nodes)->capture_default_str();
  base_cmd->add_option("--features", base.feature_dim)->capture_default_str();
  base_cmd->add_option("--communities", base.communities)->capture_default_str();
  base_cmd->add_option("--degree", base.avg_degree, "Average degree")->capture_default_str();
  base_cmd->add_option("--homophily", base.homophily)->capture_default_str();
  base_cmd->add_option("--seed", base.seed)->capture_default_str();

  eerm::ToyVerifySettings toy;
  bool no_editors = false;
  bool no_surface = false;
  auto* toy_cmd = app.add_subcommand("toy-verify", "Compare toy trainers with the closed forms");
  toy_cmd->add_option("--seeds", toy.seeds)->capture_default_str()->check(CLI::PositiveNumber);
  toy_cmd->add_option("--nodes", toy.nodes)->capture_default_str();
  toy_cmd->add_option("--tolerance", toy.tolerance)->capture_default_str();
  toy_cmd->add_flag("--no-editors", no_editors, "Skip full EERM runs with editors");
  toy_cmd->add_flag("--no-surface", no_surface, "Skip the grid-search oracle");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      return cmd_run(run);
    }
    if (*shift_cmd) {
      return cmd_shiftgen(shift);
    }
    if (*base_cmd) {
      return cmd_basegen(base, base_out);
    }
    if (*toy_cmd) {
      toy.editors = !no_editors;
      toy.surface = !no_surface;
      return cmd_toy_verify(toy);
    }
  } catch (const eerm::ContractError& ex) {
    std::cerr << "eerm: invalid input: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "eerm: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eerm/env_suite.hpp"
#include "eerm/report.hpp"
#include "eerm/synth.hpp"
#include "eerm/trainer.hpp"

namespace eerm {

enum class SuiteKind { toy, synth_shift, multi_graph_files };
enum class SplitKind { domain_level, time_aware };

std::string to_string(SuiteKind k);
std::string to_string(SplitKind k);

struct ToySettings {
  int nodes = 2000;
  double sigma2 = 2.0;
  int n_envs = 10;
};

struct SynthSettings {
  /// Graph directory for the base graph; a generated stochastic-block graph otherwise.
  std::optional<std::filesystem::path> base_dir;
  BaseGraphRecipe base;
  int n_envs = 10;
  int spurious_dim = 8;
  int num_classes = 4;
  int generator_depth = 2;
  std::uint64_t seed = 0;
  /// Regenerate base graph and environments for every run seed.
  bool per_seed_data = true;
};

struct ExperimentConfig {
  SuiteKind suite = SuiteKind::synth_shift;
  std::vector<std::string> methods = {"erm", "eerm"};
  TrainConfig train;
  SplitKind split = SplitKind::domain_level;
  std::vector<Metric> metrics = {Metric::accuracy};
  std::filesystem::path out_dir = "results";
  int n_seeds = 1;
  std::uint64_t first_seed = 0;
  /// Worker slots; 0 = hardware concurrency. EERM_THREADS caps it further.
  int threads = 0;
  bool write_checkpoints = true;
  ToySettings toy;
  SynthSettings synth;
  /// multi-graph-files: suite directory with manifest.json.
  std::filesystem::path data_dir;

  void validate() const;
};

/// Missing keys keep their defaults; unknown keys are a ContractError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunFailure {
  std::string method;
  int seed = 0;
  std::string error;
};

struct ExperimentResult {
  std::vector<ResultRecord> records;
  std::vector<RunFailure> failures;
  /// Per (method, seed) extras such as the toy theta or ablation accuracies.
  nlohmann::json details = nlohmann::json::object();
};

/// Suite a given run seed trains and tests on.
EnvSuite build_suite(const ExperimentConfig& cfg, std::uint64_t run_seed);

/// Trains every (method, seed) pair on a worker pool, evaluates on the unedited
/// test graphs and returns records sorted by (method, seed, env, metric).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// run_experiment followed by emit_outputs into cfg.out_dir.
ExperimentResult run_and_emit(const ExperimentConfig& cfg);

struct AblationResult {
  double acc_full = 0.0;
  double acc_zeroed = 0.0;

  double drop() const { return acc_full - acc_zeroed; }
};

/// Training accuracy with full features vs. one feature block set to zero
/// (the spurious block by default).
AblationResult spurious_ablation(const ModelParams& p, const EnvSuite& suite,
                                 bool zero_invariant = false);

/// Worker slots after applying EERM_THREADS.
int worker_slots(int requested);

}  // namespace eerm

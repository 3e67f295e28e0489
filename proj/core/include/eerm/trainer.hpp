#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "eerm/editor.hpp"
#include "eerm/metrics.hpp"
#include "eerm/models.hpp"
#include "eerm/objective.hpp"

namespace eerm {

enum class ModelSelection { best_valid, last };

std::string to_string(ModelSelection s);
ModelSelection selection_from_string(const std::string& s);

struct TrainConfig {
  int K = 3;
  double beta = 2.0;
  int s = 5;
  int T = 1;
  double alpha_f = 0.01;
  double alpha_g = 0.005;
  int epochs = 200;
  std::uint64_t seed = 0;
  Backbone backbone = Backbone::gcn;
  LossKind loss = LossKind::cross_entropy;
  double weight_decay = 1e-3;
  int hidden_dim = 32;
  int layers = 2;
  bool standardize = true;
  /// false keeps every editor at its uniform initialization.
  bool train_editors = true;
  /// Constant subtracted from the reward before each REINFORCE step.
  double reward_baseline = 0.0;
  /// A step that does not lower the objective on the same views is retried
  /// with the step size divided by 10, up to this many times, and dropped if
  /// none helps. 0 disables the check.
  int descent_probes = 3;
  ModelSelection selection = ModelSelection::best_valid;
  Metric valid_metric = Metric::accuracy;
  int dense_cap = kDefaultDenseCap;

  /// Throws ContractError; `eerm` additionally needs K * train_graphs >= 2.
  void validate(bool eerm, std::size_t train_graphs) const;
};

struct EpochRecord {
  int epoch = 0;
  double j1 = 0.0;
  double j2 = 0.0;
  /// One risk per (training graph, view), graph-major.
  std::vector<double> view_risks;
  double train_risk = 0.0;
  /// Validation metric (accuracy etc.; negative mean squared error for
  /// regression); NaN without validation graphs.
  double valid_metric = 0.0;
  double step = 0.0;
  int best_epoch = 0;
};

struct TrainHistory {
  std::vector<EpochRecord> records;
  /// Epoch whose parameters were selected.
  int best_epoch = 0;

  double mean_j1() const;
};

/// One JSON object per epoch.
void write_history_jsonl(std::ostream& out, const TrainHistory& h);

struct TrainResult {
  ModelParams params;
  std::vector<EditorPolicy> editors;
  TrainHistory history;
};

/// Bilevel loop: per epoch, T rounds of (sample K views per editor, REINFORCE
/// every editor with J1 = Var of the risks); the last round's views also give
/// J2 = Var + beta * mean risk, which gradient descent lowers in theta.
///
/// Every training graph must have the same node count: editor k's sample is
/// applied to each of them, and J1/J2 pool all (graph, view) risks.
TrainResult train_eerm(const TrainConfig& cfg, std::span<const Graph> train,
                       std::span<const Graph> valid);

/// Gradient descent on the mean risk of the unedited training graphs.
TrainResult train_erm(const TrainConfig& cfg, std::span<const Graph> train,
                      std::span<const Graph> valid);

/// Metric of `p` on a graph's `mask_name` rows (all rows when the mask is absent).
double evaluate(const ModelParams& p, const Graph& g, Metric metric,
                const std::string& mask_name = "test");

}  // namespace eerm

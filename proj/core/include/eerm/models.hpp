#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eerm/autodiff.hpp"
#include "eerm/graph.hpp"

namespace eerm {

enum class Backbone { linear_gcn, gcn, sgc };

std::string to_string(Backbone b);
Backbone backbone_from_string(const std::string& s);

/// Weights of one predictor.
///   gcn:        A_hat relu(std(A_hat X W1)) W2   (weights: d0 x h, h x C)
///   sgc:        A_hat^L X W                      (weights: d0 x C)
///   linear_gcn: M X theta, M = mean over N(v)    (weights: 2 x 1)
/// `std` is per-column standardization of the hidden pre-activation: batch
/// statistics over the training rows during training, `eval_stats` afterwards.
struct ModelParams {
  Backbone backbone = Backbone::gcn;
  std::vector<Matrix> weights;
  int hidden_dim = 32;
  int layers = 2;
  bool standardize = true;
  std::optional<ad::ColumnStats> eval_stats;

  int input_dim() const { return static_cast<int>(weights.front().rows()); }
  int output_dim() const { return static_cast<int>(weights.back().cols()); }
  /// Throws ContractError on broken shape chains or non-finite entries.
  void validate() const;
};

struct ModelShape {
  Backbone backbone = Backbone::gcn;
  int input_dim = 0;
  int output_dim = 0;
  int hidden_dim = 32;
  int layers = 2;
  bool standardize = true;
};

/// Entries uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)).
ModelParams init_params(const ModelShape& shape, std::uint64_t seed);

/// Propagation operator a backbone applies to a given graph: A_hat for gcn/sgc,
/// the 1-hop mean for linear_gcn. Shared so it outlives Tape closures.
std::shared_ptr<const SparseMatrix> propagation(Backbone b, const Graph& g,
                                                bool allow_isolated = false);

/// How the hidden standardization obtains its statistics.
struct StandardizeMode {
  /// Batch statistics over these rows (all rows when empty) unless `frozen` is set.
  std::span<const int> rows;
  const ad::ColumnStats* frozen = nullptr;
  ad::ColumnStats* stats_out = nullptr;
};

/// Forward pass on a Tape. `weights` are Tape handles (leaves or constants)
/// with the shapes of `p.weights`.
Var forward(const ModelParams& p, std::span<const Var> weights,
            const std::shared_ptr<const SparseMatrix>& op, Var x, StandardizeMode mode = {});

Var gcn_forward(const ModelParams& p, std::span<const Var> weights,
                const std::shared_ptr<const SparseMatrix>& a_hat, Var x,
                StandardizeMode mode = {});
Var sgc_forward(const ModelParams& p, std::span<const Var> weights,
                const std::shared_ptr<const SparseMatrix>& a_hat, Var x);
Var linear_gcn_forward(const ModelParams& p, std::span<const Var> weights,
                       const std::shared_ptr<const SparseMatrix>& mean_op, Var x);

/// Inference without gradients, using p.eval_stats (batch stats over all rows
/// when absent).
Matrix predict(const ModelParams& p, const Graph& g, bool allow_isolated = false);
Matrix predict(const ModelParams& p, const Graph& g, const Matrix& features,
               bool allow_isolated = false);

/// Hidden-layer statistics pooled over `rows_per_graph[i]` of `graphs[i]`
/// (all rows when that entry is empty). Only meaningful for standardized gcn.
ad::ColumnStats hidden_stats(const ModelParams& p, std::span<const Graph> graphs,
                             std::span<const std::vector<int>> rows_per_graph);

}  // namespace eerm

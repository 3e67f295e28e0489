#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "eerm/graph.hpp"

namespace eerm {

/// Row-wise edit policy of one view: row n is a softmax over the logits
/// pi_{n,m}, m != n, from which s distinct partners are drawn.
class EditorPolicy {
 public:
  EditorPolicy() = default;
  /// All-zero logits (uniform edits). Requires s <= n - 1 and n <= dense_cap.
  EditorPolicy(int view_id, int num_nodes, int s, int dense_cap = kDefaultDenseCap);

  int view_id() const { return view_id_; }
  int num_nodes() const { return static_cast<int>(logits_.rows()); }
  int edits_per_node() const { return s_; }
  const Matrix& logits() const { return logits_; }
  Matrix& logits() { return logits_; }

 private:
  int view_id_ = 0;
  int s_ = 0;
  Matrix logits_;
};

struct EditSample {
  /// b(n, m) set for each chosen action (not symmetrized).
  BoolMatrix b;
  /// actions[n] lists the chosen partners of row n in draw order.
  std::vector<std::vector<int>> actions;
  double logprob = 0.0;
  std::uint64_t seed = 0;
};

/// Softmax over row n with the diagonal excluded (entry n is 0).
Vector edge_probs(const EditorPolicy& policy, int row);

/// Per row, s partners drawn sequentially without replacement, renormalizing
/// after each draw. Deterministic in `seed`.
EditSample sample_edits(const EditorPolicy& policy, std::uint64_t seed);

/// Process-wide count of sample_edits calls (lets tests assert that
/// evaluation never touches an editor).
std::uint64_t sample_edits_calls();

/// Gradient of sample.logprob with respect to the logits.
Matrix score_function(const EditorPolicy& policy, const EditSample& sample);

/// logits += alpha_g * (reward - baseline) * score_function(policy, sample).
/// Throws NumericalError on a non-finite reward.
void reinforce_step(EditorPolicy& policy, const EditSample& sample, double reward,
                    double alpha_g, double baseline = 0.0);

/// Unordered pairs flipped by a sample, each listed once.
std::vector<Edge> sample_flips(const EditSample& sample);

/// g with every sampled pair flipped; features, labels and masks unchanged.
Graph materialize_view(const Graph& g, const EditSample& sample);

struct EditDiff {
  std::vector<Edge> added;
  std::vector<Edge> removed;
};

EditDiff edit_diff(const Graph& g, const EditSample& sample);
/// "+ u w" per added edge, then "- u w" per removed edge.
void write_edit_diff(std::ostream& out, const EditDiff& diff);

}  // namespace eerm

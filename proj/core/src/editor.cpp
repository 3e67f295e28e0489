#include "eerm/editor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "eerm/errors.hpp"
#include "eerm/random.hpp"

namespace eerm {

EditorPolicy::EditorPolicy(int view_id, int num_nodes, int s, int dense_cap)
    : view_id_(view_id), s_(s) {
  require(num_nodes >= 1, "editor: need at least one node");
  require(num_nodes <= dense_cap, "editor: " + std::to_string(num_nodes) +
                                      " nodes exceed the dense cap " + std::to_string(dense_cap));
  require(s >= 0 && s <= num_nodes - 1,
          "editor: s = " + std::to_string(s) + " must lie in [0, N-1]");
  logits_ = Matrix::Zero(num_nodes, num_nodes);
}

namespace {

std::atomic<std::uint64_t> g_sample_calls{0};

/// exp(pi_{n,m} - max) over the off-diagonal support of row n; 0 on the diagonal.
Eigen::ArrayXd row_weights(const Matrix& logits, int n) {
  const auto cols = logits.cols();
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index m = 0; m < cols; ++m) {
    if (m != n) {
      top = std::max(top, logits(n, m));
    }
  }
  Eigen::ArrayXd w(cols);
  for (Eigen::Index m = 0; m < cols; ++m) {
    w(m) = m == n ? 0.0 : std::exp(logits(n, m) - top);
  }
  return w;
}

/// Normalizers Z_t of each draw of row n: sums of weights over the candidates
/// still available before draw t.
std::vector<double> draw_normalizers(const Eigen::ArrayXd& w, const std::vector<int>& chosen) {
  std::vector<double> z;
  z.reserve(chosen.size());
  Eigen::ArrayXd avail = w;
  for (int m : chosen) {
    z.push_back(avail.sum());
    avail(m) = 0.0;
  }
  return z;
}

using RowRef = Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;

void add_row_score(RowRef out, const Eigen::ArrayXd& w,
                   const std::vector<int>& chosen, double scale) {
  if (chosen.empty()) {
    return;
  }
  const auto z = draw_normalizers(w, chosen);
  // d log p / d pi_j = sum_t [j == m_t] - sum_{t : j in S_t} w_j / Z_t
  double inv_all = 0.0;
  for (double zt : z) {
    inv_all += 1.0 / zt;
  }
  out += (scale * -inv_all * w).matrix().transpose();
  double inv_prefix = 0.0;
  for (std::size_t t = 0; t < chosen.size(); ++t) {
    inv_prefix += 1.0 / z[t];
    const int m = chosen[t];
    // m was in S_1..S_t only: undo the terms for later draws, add the indicator.
    out(m) += scale * (1.0 + w(m) * (inv_all - inv_prefix));
  }
}

}  // namespace

Vector edge_probs(const EditorPolicy& policy, int row) {
  require(row >= 0 && row < policy.num_nodes(), "edge_probs: row out of range");
  const Eigen::ArrayXd w = row_weights(policy.logits(), row);
  return (w / w.sum()).matrix();
}

EditSample sample_edits(const EditorPolicy& policy, std::uint64_t seed) {
  const int n = policy.num_nodes();
  const int s = policy.edits_per_node();
  require(s <= n - 1, "sample_edits: s exceeds N-1");
  g_sample_calls.fetch_add(1, std::memory_order_relaxed);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  EditSample out;
  out.b = BoolMatrix(n);
  out.actions.resize(static_cast<std::size_t>(n));
  out.seed = seed;
  for (int row = 0; row < n && s > 0; ++row) {
    Eigen::ArrayXd avail = row_weights(policy.logits(), row);
    auto& chosen = out.actions[row];
    for (int t = 0; t < s; ++t) {
      const double total = avail.sum();
      const double target = unit(rng) * total;
      double acc = 0.0;
      int pick = -1;
      for (int m = 0; m < n; ++m) {
        if (avail(m) <= 0.0) {
          continue;
        }
        pick = m;
        acc += avail(m);
        if (acc > target) {
          break;
        }
      }
      // Underflowed weights: fall back to the first free candidate.
      if (pick < 0) {
        for (int m = 0; m < n; ++m) {
          if (m != row && std::find(chosen.begin(), chosen.end(), m) == chosen.end()) {
            pick = m;
            break;
          }
        }
        out.logprob = -std::numeric_limits<double>::infinity();
      } else {
        out.logprob += std::log(avail(pick) / total);
      }
      chosen.push_back(pick);
      out.b.set(row, pick);
      avail(pick) = 0.0;
    }
  }
  return out;
}

std::uint64_t sample_edits_calls() { return g_sample_calls.load(std::memory_order_relaxed); }

Matrix score_function(const EditorPolicy& policy, const EditSample& sample) {
  const int n = policy.num_nodes();
  require(static_cast<int>(sample.actions.size()) == n, "score_function: sample size mismatch");
  Matrix g = Matrix::Zero(n, n);
  for (int row = 0; row < n; ++row) {
    if (!sample.actions[row].empty()) {
      add_row_score(g.row(row), row_weights(policy.logits(), row), sample.actions[row], 1.0);
    }
  }
  return g;
}

void reinforce_step(EditorPolicy& policy, const EditSample& sample, double reward,
                    double alpha_g, double baseline) {
  if (!std::isfinite(reward) || !std::isfinite(baseline)) {
    throw NumericalError("reinforce_step: non-finite reward " + std::to_string(reward) +
                         " for view " + std::to_string(policy.view_id()));
  }
  const int n = policy.num_nodes();
  require(static_cast<int>(sample.actions.size()) == n, "reinforce_step: sample size mismatch");
  const double scale = alpha_g * (reward - baseline);
  if (scale == 0.0) {
    return;
  }
  // Weights are read before the row is modified, so each row sees the old logits.
  for (int row = 0; row < n; ++row) {
    if (!sample.actions[row].empty()) {
      const Eigen::ArrayXd w = row_weights(policy.logits(), row);
      add_row_score(policy.logits().row(row), w, sample.actions[row], scale);
    }
  }
}

std::vector<Edge> sample_flips(const EditSample& sample) {
  std::set<Edge> pairs;
  for (std::size_t row = 0; row < sample.actions.size(); ++row) {
    for (int m : sample.actions[row]) {
      pairs.insert(Edge::make(static_cast<int>(row), m));
    }
  }
  return {pairs.begin(), pairs.end()};
}

Graph materialize_view(const Graph& g, const EditSample& sample) {
  require(static_cast<int>(sample.actions.size()) == g.num_nodes(),
          "materialize_view: sample size != node count");
  const auto flips = sample_flips(sample);
  return g.with_edges(apply_flips(g.edges(), flips));
}

EditDiff edit_diff(const Graph& g, const EditSample& sample) {
  EditDiff diff;
  for (const auto& e : sample_flips(sample)) {
    (g.has_edge(e.u, e.w) ? diff.removed : diff.added).push_back(e);
  }
  return diff;
}

void write_edit_diff(std::ostream& out, const EditDiff& diff) {
  for (const auto& e : diff.added) {
    out << "+ " << e.u << ' ' << e.w << '\n';
  }
  for (const auto& e : diff.removed) {
    out << "- " << e.u << ' ' << e.w << '\n';
  }
}

}  // namespace eerm

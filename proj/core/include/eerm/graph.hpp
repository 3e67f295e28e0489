#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace eerm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using NodeMask = std::vector<bool>;

/// Editors and dense edit masks hold N x N state; graphs above this size are
/// stored and propagated sparsely only.
inline constexpr int kDefaultDenseCap = 4096;

/// Undirected edge stored with u < w.
struct Edge {
  int u = 0;
  int w = 0;

  static Edge make(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }
  auto operator<=>(const Edge&) const = default;
};

/// Row-major N x N boolean matrix used for dense adjacency and edit masks.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  explicit BoolMatrix(int n) : n_(n), bits_(static_cast<std::size_t>(n) * n, 0) {}

  int size() const { return n_; }
  bool operator()(int r, int c) const { return bits_[index(r, c)] != 0; }
  void set(int r, int c, bool value = true) { bits_[index(r, c)] = value ? 1 : 0; }

  std::size_t count() const;
  bool is_symmetric() const;
  bool has_zero_diagonal() const;

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * n_ + c; }

  int n_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Undirected attributed graph. Immutable after construction.
///
/// Invariants: no self-loops, no duplicate edges, one feature row per node, one
/// label per node (class index) unless the graph carries real-valued regression
/// targets instead, every mask has one entry per node.
class Graph {
 public:
  Graph() = default;
  Graph(int num_nodes, std::vector<Edge> edges, Matrix features, std::vector<int> labels,
        std::map<std::string, NodeMask> masks = {}, Vector targets = {});

  int num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& features() const { return features_; }
  int feature_dim() const { return static_cast<int>(features_.cols()); }
  const std::vector<int>& labels() const { return labels_; }
  const Vector& targets() const { return targets_; }
  bool is_regression() const { return labels_.empty(); }
  int num_classes() const;

  const std::map<std::string, NodeMask>& masks() const { return masks_; }
  bool has_mask(const std::string& name) const { return masks_.contains(name); }
  /// Named mask, or an all-true mask when `name` is absent and `fallback_all` is set.
  NodeMask mask(const std::string& name, bool fallback_all = false) const;

  bool has_edge(int u, int w) const;
  std::vector<std::vector<int>> adjacency_lists() const;
  std::vector<int> degrees() const;

  Graph with_edges(std::vector<Edge> edges) const;
  Graph with_features(Matrix features) const;
  Graph with_masks(std::map<std::string, NodeMask> masks) const;

 private:
  int num_nodes_ = 0;
  std::vector<Edge> edges_;
  Matrix features_;
  std::vector<int> labels_;
  Vector targets_;
  std::map<std::string, NodeMask> masks_;
};

/// L-hop ego-graph around a center node, with nodes in ascending id order.
struct EgoGraph {
  int center = 0;
  int radius = 0;
  std::vector<int> nodes;
  std::vector<Edge> local_edges;  // endpoints index into `nodes`
  Matrix local_features;

  BoolMatrix local_adjacency() const;
};

EgoGraph ego_graph(const Graph& g, int center, int hops);

BoolMatrix dense_adjacency(const Graph& g, int dense_cap = kDefaultDenseCap);
std::vector<Edge> edges_from_dense(const BoolMatrix& a);

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
SparseMatrix normalize_adjacency(const Graph& g);

/// Row-normalized adjacency without self-loops: row v averages over N(v).
/// Isolated nodes get an all-zero row when `allow_isolated`, otherwise throw.
SparseMatrix mean_aggregation(const Graph& g, bool allow_isolated = false);

/// Edge complement excluding self-loops: 11^T - I - A.
BoolMatrix supplement_graph(const BoolMatrix& a);

/// Flips every pair selected by `b`. The flip set is symmetrized, so (u,w) and
/// (w,u) both select the same unordered pair and it is flipped once.
BoolMatrix apply_edits(const BoolMatrix& a, const BoolMatrix& b);

/// Sparse counterpart of apply_edits. `flips` are unordered pairs; repeats are
/// collapsed before flipping.
std::vector<Edge> apply_flips(std::span<const Edge> edges, std::span<const Edge> flips);

}  // namespace eerm

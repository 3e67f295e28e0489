#include "eerm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <string>

#include "eerm/errors.hpp"

namespace eerm {

std::size_t BoolMatrix::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BoolMatrix::is_symmetric() const {
  for (int r = 0; r < n_; ++r) {
    for (int c = r + 1; c < n_; ++c) {
      if ((*this)(r, c) != (*this)(c, r)) {
        return false;
      }
    }
  }
  return true;
}

bool BoolMatrix::has_zero_diagonal() const {
  for (int i = 0; i < n_; ++i) {
    if ((*this)(i, i)) {
      return false;
    }
  }
  return true;
}

Graph::Graph(int num_nodes, std::vector<Edge> edges, Matrix features, std::vector<int> labels,
             std::map<std::string, NodeMask> masks, Vector targets)
    : num_nodes_(num_nodes),
      edges_(std::move(edges)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      targets_(std::move(targets)),
      masks_(std::move(masks)) {
  require(num_nodes_ >= 0, "graph: negative node count");
  for (auto& e : edges_) {
    require(e.u != e.w, "graph: self-loop on node " + std::to_string(e.u));
    require(e.u >= 0 && e.w >= 0 && e.u < num_nodes_ && e.w < num_nodes_,
            "graph: edge endpoint out of range");
    e = Edge::make(e.u, e.w);
  }
  std::sort(edges_.begin(), edges_.end());
  require(std::adjacent_find(edges_.begin(), edges_.end()) == edges_.end(),
          "graph: duplicate edge");
  if (features_.size() == 0 && features_.rows() == 0) {
    features_ = Matrix::Zero(num_nodes_, 0);
  }
  require(features_.rows() == num_nodes_, "graph: feature rows != node count");
  if (labels_.empty()) {
    require(targets_.size() == num_nodes_, "graph: needs class labels or regression targets");
  } else {
    require(static_cast<int>(labels_.size()) == num_nodes_, "graph: label count != node count");
    require(targets_.size() == 0, "graph: labels and targets are mutually exclusive");
    for (int y : labels_) {
      require(y >= 0, "graph: negative class label");
    }
  }
  for (const auto& [name, m] : masks_) {
    require(static_cast<int>(m.size()) == num_nodes_, "graph: mask '" + name + "' has wrong length");
  }
}

int Graph::num_classes() const {
  if (labels_.empty()) {
    return 0;
  }
  return *std::max_element(labels_.begin(), labels_.end()) + 1;
}

NodeMask Graph::mask(const std::string& name, bool fallback_all) const {
  if (auto it = masks_.find(name); it != masks_.end()) {
    return it->second;
  }
  require(fallback_all, "graph: no mask named '" + name + "'");
  return NodeMask(static_cast<std::size_t>(num_nodes_), true);
}

bool Graph::has_edge(int u, int w) const {
  if (u == w) {
    return false;
  }
  return std::binary_search(edges_.begin(), edges_.end(), Edge::make(u, w));
}

std::vector<std::vector<int>> Graph::adjacency_lists() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_nodes_));
  for (const auto& e : edges_) {
    adj[e.u].push_back(e.w);
    adj[e.w].push_back(e.u);
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
  }
  return adj;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(num_nodes_), 0);
  for (const auto& e : edges_) {
    ++deg[e.u];
    ++deg[e.w];
  }
  return deg;
}

Graph Graph::with_edges(std::vector<Edge> edges) const {
  return Graph(num_nodes_, std::move(edges), features_, labels_, masks_, targets_);
}

Graph Graph::with_features(Matrix features) const {
  return Graph(num_nodes_, edges_, std::move(features), labels_, masks_, targets_);
}

Graph Graph::with_masks(std::map<std::string, NodeMask> masks) const {
  return Graph(num_nodes_, edges_, features_, labels_, std::move(masks), targets_);
}

BoolMatrix EgoGraph::local_adjacency() const {
  BoolMatrix a(static_cast<int>(nodes.size()));
  for (const auto& e : local_edges) {
    a.set(e.u, e.w);
    a.set(e.w, e.u);
  }
  return a;
}

EgoGraph ego_graph(const Graph& g, int center, int hops) {
  if (center < 0 || center >= g.num_nodes()) {
    throw std::out_of_range("ego_graph: node " + std::to_string(center) + " out of range");
  }
  require(hops >= 0, "ego_graph: negative hop count");

  const auto adj = g.adjacency_lists();
  std::vector<int> dist(static_cast<std::size_t>(g.num_nodes()), -1);
  std::deque<int> frontier{center};
  dist[center] = 0;
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop_front();
    if (dist[v] == hops) {
      continue;
    }
    for (int u : adj[v]) {
      if (dist[u] < 0) {
        dist[u] = dist[v] + 1;
        frontier.push_back(u);
      }
    }
  }

  EgoGraph ego;
  ego.center = center;
  ego.radius = hops;
  std::vector<int> local(static_cast<std::size_t>(g.num_nodes()), -1);
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (dist[v] >= 0) {
      local[v] = static_cast<int>(ego.nodes.size());
      ego.nodes.push_back(v);
    }
  }
  for (const auto& e : g.edges()) {
    if (local[e.u] >= 0 && local[e.w] >= 0) {
      ego.local_edges.push_back(Edge::make(local[e.u], local[e.w]));
    }
  }
  ego.local_features.resize(static_cast<Eigen::Index>(ego.nodes.size()), g.feature_dim());
  for (std::size_t i = 0; i < ego.nodes.size(); ++i) {
    ego.local_features.row(static_cast<Eigen::Index>(i)) = g.features().row(ego.nodes[i]);
  }
  return ego;
}

BoolMatrix dense_adjacency(const Graph& g, int dense_cap) {
  require(g.num_nodes() <= dense_cap,
          "dense_adjacency: " + std::to_string(g.num_nodes()) + " nodes exceeds dense cap " +
              std::to_string(dense_cap));
  BoolMatrix a(g.num_nodes());
  for (const auto& e : g.edges()) {
    a.set(e.u, e.w);
    a.set(e.w, e.u);
  }
  return a;
}

std::vector<Edge> edges_from_dense(const BoolMatrix& a) {
  require(a.is_symmetric(), "edges_from_dense: adjacency is not symmetric");
  require(a.has_zero_diagonal(), "edges_from_dense: nonzero diagonal");
  std::vector<Edge> edges;
  for (int u = 0; u < a.size(); ++u) {
    for (int w = u + 1; w < a.size(); ++w) {
      if (a(u, w)) {
        edges.push_back({u, w});
      }
    }
  }
  return edges;
}

SparseMatrix normalize_adjacency(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<double> inv_sqrt(static_cast<std::size_t>(n));
  const auto deg = g.degrees();
  for (int v = 0; v < n; ++v) {
    inv_sqrt[v] = 1.0 / std::sqrt(static_cast<double>(deg[v] + 1));
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) + 2 * g.num_edges());
  for (int v = 0; v < n; ++v) {
    triplets.emplace_back(v, v, inv_sqrt[v] * inv_sqrt[v]);
  }
  for (const auto& e : g.edges()) {
    const double value = inv_sqrt[e.u] * inv_sqrt[e.w];
    triplets.emplace_back(e.u, e.w, value);
    triplets.emplace_back(e.w, e.u, value);
  }
  SparseMatrix a_hat(n, n);
  a_hat.setFromTriplets(triplets.begin(), triplets.end());
  return a_hat;
}

SparseMatrix mean_aggregation(const Graph& g, bool allow_isolated) {
  const int n = g.num_nodes();
  const auto deg = g.degrees();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * g.num_edges());
  for (int v = 0; v < n; ++v) {
    if (deg[v] == 0 && !allow_isolated) {
      throw ContractError("mean_aggregation: node " + std::to_string(v) + " is isolated");
    }
  }
  for (const auto& e : g.edges()) {
    triplets.emplace_back(e.u, e.w, 1.0 / deg[e.u]);
    triplets.emplace_back(e.w, e.u, 1.0 / deg[e.w]);
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

BoolMatrix supplement_graph(const BoolMatrix& a) {
  require(a.has_zero_diagonal(), "supplement_graph: adjacency has a nonzero diagonal");
  require(a.is_symmetric(), "supplement_graph: adjacency is not symmetric");
  const int n = a.size();
  BoolMatrix out(n);
  for (int u = 0; u < n; ++u) {
    for (int w = 0; w < n; ++w) {
      if (u != w) {
        out.set(u, w, !a(u, w));
      }
    }
  }
  return out;
}

BoolMatrix apply_edits(const BoolMatrix& a, const BoolMatrix& b) {
  require(a.size() == b.size(), "apply_edits: shape mismatch");
  require(a.has_zero_diagonal() && a.is_symmetric(),
          "apply_edits: adjacency must be symmetric with zero diagonal");
  require(b.has_zero_diagonal(), "apply_edits: edit mask has a nonzero diagonal");
  const int n = a.size();
  BoolMatrix out = a;
  for (int u = 0; u < n; ++u) {
    for (int w = u + 1; w < n; ++w) {
      if (b(u, w) || b(w, u)) {
        const bool flipped = !a(u, w);
        out.set(u, w, flipped);
        out.set(w, u, flipped);
      }
    }
  }
  return out;
}

std::vector<Edge> apply_flips(std::span<const Edge> edges, std::span<const Edge> flips) {
  std::vector<Edge> toggles;
  toggles.reserve(flips.size());
  for (const auto& f : flips) {
    require(f.u != f.w, "apply_flips: diagonal flip");
    toggles.push_back(Edge::make(f.u, f.w));
  }
  std::sort(toggles.begin(), toggles.end());
  toggles.erase(std::unique(toggles.begin(), toggles.end()), toggles.end());

  // Both inputs sorted: symmetric difference is exactly the flip.
  std::vector<Edge> base(edges.begin(), edges.end());
  std::sort(base.begin(), base.end());
  std::vector<Edge> out;
  out.reserve(base.size() + toggles.size());
  std::set_symmetric_difference(base.begin(), base.end(), toggles.begin(), toggles.end(),
                                std::back_inserter(out));
  return out;
}

}  // namespace eerm

#include "eerm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "eerm/errors.hpp"
#include "eerm/random.hpp"

namespace eerm {

namespace {

Matrix uniform_matrix(int rows, int cols, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      m(r, c) = dist(rng);
    }
  }
  return m;
}

Vector normal_vector(int n, Rng& rng, double scale) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = scale * dist(rng);
  }
  return v;
}

/// v minus its least-squares fit on [1, against...], rescaled to unit
/// empirical variance.
Vector standardized(const Vector& v, const std::vector<Vector>& against) {
  Matrix basis(v.size(), static_cast<Eigen::Index>(against.size()) + 1);
  basis.col(0).setOnes();
  Eigen::Index c = 1;
  for (const auto& a : against) {
    basis.col(c++) = a;
  }
  const Vector fit = basis * basis.colPivHouseholderQr().solve(v);
  const Vector r = v - fit;
  const double rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  return rms > 0.0 ? Vector(r / rms) : r;
}

}  // namespace

RandomGcn RandomGcn::draw(int in_dim, int hidden_dim, int out_dim, int depth, std::uint64_t seed) {
  require(in_dim > 0 && hidden_dim > 0 && out_dim > 0, "RandomGcn: dimensions must be positive");
  require(depth >= 1, "RandomGcn: depth must be at least 1");
  Rng rng(seed);
  RandomGcn gcn;
  int in = in_dim;
  for (int l = 0; l < depth; ++l) {
    const int out = l + 1 == depth ? out_dim : hidden_dim;
    gcn.weights.push_back(uniform_matrix(in, out, rng, -1.0, 1.0));
    in = out;
  }
  return gcn;
}

Matrix RandomGcn::forward(const SparseMatrix& a_hat, const Matrix& x) const {
  Matrix h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = a_hat * (h * weights[l]);
    if (l + 1 < weights.size()) {
      h = h.cwiseMax(0.0);
    }
  }
  return h;
}

void ShiftRecipe::validate() const {
  require(n_envs >= 3, "shift recipe: need at least 3 environments (train, valid, test)");
  require(spurious_dim >= 1, "shift recipe: spurious_dim must be >= 1");
  require(num_classes >= 2, "shift recipe: need at least 2 classes");
  require(generator_depth >= 1 && generator_hidden >= 1, "shift recipe: bad generator shape");
}

std::vector<int> generate_labels(const Graph& g, const Matrix& x1, int num_classes,
                                 std::uint64_t seed, int depth, int hidden) {
  require(x1.rows() == g.num_nodes(), "generate_labels: x1 rows != node count");
  require(x1.cols() >= 1, "generate_labels: empty invariant block");
  const auto gcn = RandomGcn::draw(static_cast<int>(x1.cols()), hidden, num_classes, depth, seed);
  const Matrix out = gcn.forward(normalize_adjacency(g), x1);
  std::vector<int> labels(static_cast<std::size_t>(g.num_nodes()));
  for (int v = 0; v < g.num_nodes(); ++v) {
    Eigen::Index arg = 0;
    out.row(v).maxCoeff(&arg);
    labels[v] = static_cast<int>(arg);
  }
  return labels;
}

Matrix generate_spurious(const Graph& g, std::span<const int> labels, int num_classes, int env_id,
                         int n_envs, int spurious_dim, std::uint64_t seed, int depth,
                         int hidden) {
  require(static_cast<int>(labels.size()) == g.num_nodes(),
          "generate_spurious: label count != node count");
  require(n_envs > 0, "generate_spurious: n_envs must be positive");
  Matrix input = Matrix::Zero(g.num_nodes(), num_classes + 1);
  for (int v = 0; v < g.num_nodes(); ++v) {
    require(labels[v] >= 0 && labels[v] < num_classes, "generate_spurious: label out of range");
    input(v, labels[v]) = 1.0;
    input(v, num_classes) = static_cast<double>(env_id) / n_envs;
  }
  const auto gcn = RandomGcn::draw(num_classes + 1, hidden, spurious_dim, depth, seed);
  return gcn.forward(normalize_adjacency(g), input);
}

EnvSuite make_env_suite(const Graph& base, const ShiftRecipe& recipe) {
  recipe.validate();
  const Matrix& x1 = base.features();
  require(x1.cols() >= 1, "make_env_suite: base graph has no features");
  const auto labels = generate_labels(base, x1, recipe.num_classes, derive_seed(recipe.seed, 1),
                                      recipe.generator_depth, recipe.generator_hidden);
  const int d1 = static_cast<int>(x1.cols());
  const int d2 = recipe.spurious_dim;

  std::vector<Environment> envs;
  std::map<int, EnvRole> plan;
  for (int e = 0; e < recipe.n_envs; ++e) {
    const Matrix x2 =
        generate_spurious(base, labels, recipe.num_classes, e, recipe.n_envs, d2,
                          derive_seed(recipe.seed, 2), recipe.generator_depth,
                          recipe.generator_hidden);
    Matrix x(base.num_nodes(), d1 + d2);
    x << x1, x2;
    envs.push_back({e, Graph(base.num_nodes(), base.edges(), std::move(x), labels)});
    plan[e] = e == 0 ? EnvRole::train : (e == 1 ? EnvRole::valid : EnvRole::test);
  }
  return EnvSuite(std::move(envs), std::move(plan), FeatureSplit{d1, d2});
}

void ToyRecipe::validate() const {
  require(sigma_e > 0.0, "toy recipe: sigma_e must be positive");
  require(n_envs >= 1, "toy recipe: need at least one environment");
  require(node_noise >= 0.0, "toy recipe: node_noise must be non-negative");
}

std::vector<double> draw_env_offsets(double sigma_e, int n_envs, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, sigma_e);
  std::vector<double> eps(static_cast<std::size_t>(n_envs));
  for (auto& e : eps) {
    e = dist(rng);
  }
  return eps;
}

ToySuite gen_toy(const Graph& g, const ToyRecipe& recipe) {
  recipe.validate();
  const int n = g.num_nodes();
  const SparseMatrix mean_nbr = mean_aggregation(g);  // throws on isolated nodes

  std::vector<double> eps(static_cast<std::size_t>(recipe.n_envs), 0.0);
  if (recipe.env_noise) {
    eps = draw_env_offsets(recipe.sigma_e, recipe.n_envs, derive_seed(recipe.seed, 10));
    if (recipe.moment_match && recipe.n_envs >= 2) {
      const double mean = std::accumulate(eps.begin(), eps.end(), 0.0) / recipe.n_envs;
      double ss = 0.0;
      for (auto& e : eps) {
        e -= mean;
        ss += e * e;
      }
      const double rms = std::sqrt(ss / recipe.n_envs);
      if (rms > 0.0) {
        for (auto& e : eps) {
          e *= recipe.sigma_e / rms;
        }
      }
    }
  }

  Rng shared_rng(derive_seed(recipe.seed, 11));
  Vector x1 = normal_vector(n, shared_rng, 1.0);
  Vector n1 = normal_vector(n, shared_rng, recipe.node_noise);
  const bool match_nodes = recipe.moment_match && n >= 8;
  if (match_nodes) {
    x1 = standardized(x1, {});
    n1 = recipe.node_noise * standardized(n1, {Vector(mean_nbr * x1)});
  }
  const Vector y = mean_nbr * x1 + n1;
  const Vector y_nbr = mean_nbr * y;
  // In-sample, the per-environment noise enters predictions as M n2. Making
  // M n2 orthogonal to the constant and to every environment-invariant term of
  // the residual keeps sampling noise out of the cross-environment risk spread.
  const SparseMatrix mt = mean_nbr.transpose();
  std::vector<Vector> confounders;
  if (match_nodes) {
    // Residual y - t1 M x1 - t2 M M y - t2 (M n2 + eps).
    confounders = {mt * Vector::Ones(n), mt * y, mt * (mean_nbr * x1), mt * (mean_nbr * y_nbr)};
  }

  std::vector<Environment> envs;
  std::map<int, EnvRole> plan;
  for (int e = 0; e < recipe.n_envs; ++e) {
    Rng env_rng(derive_seed(recipe.seed, 12, static_cast<std::uint64_t>(e)));
    Vector n2 = normal_vector(n, env_rng, recipe.node_noise);
    if (match_nodes) {
      n2 = recipe.node_noise * standardized(n2, confounders);
    }
    Matrix x(n, 2);
    x.col(0) = x1;
    x.col(1) = (y_nbr + n2).array() + eps[e];
    envs.push_back({e, Graph(n, g.edges(), std::move(x), {}, {}, y)});
    plan[e] = EnvRole::train;
  }
  return ToySuite{EnvSuite(std::move(envs), std::move(plan)), std::move(eps), x1, y};
}

Graph perfect_matching_graph(int n) {
  require(n >= 2 && n % 2 == 0, "perfect_matching_graph: node count must be even and >= 2");
  std::vector<Edge> edges;
  for (int v = 0; v < n; v += 2) {
    edges.push_back({v, v + 1});
  }
  return Graph(n, std::move(edges), Matrix::Zero(n, 1), std::vector<int>(n, 0));
}

Graph make_base_graph(const BaseGraphRecipe& recipe) {
  require(recipe.nodes >= 2 && recipe.communities >= 1 && recipe.feature_dim >= 1,
          "base graph recipe: bad sizes");
  require(recipe.avg_degree > 0.0 && recipe.avg_degree < recipe.nodes - 1,
          "base graph recipe: average degree out of range");
  require(recipe.homophily >= 0.0 && recipe.homophily <= 1.0,
          "base graph recipe: homophily must lie in [0, 1]");
  Rng rng(recipe.seed);
  const int n = recipe.nodes;
  std::vector<int> community(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    community[v] = v % recipe.communities;
  }
  std::shuffle(community.begin(), community.end(), rng);

  const Matrix centers = uniform_matrix(recipe.communities, recipe.feature_dim, rng, -1.0, 1.0);
  std::normal_distribution<double> noise(0.0, recipe.feature_noise);
  Matrix x(n, recipe.feature_dim);
  for (int v = 0; v < n; ++v) {
    for (int c = 0; c < recipe.feature_dim; ++c) {
      x(v, c) = centers(community[v], c) + noise(rng);
    }
  }

  // Sample target edge count; each edge is intra-community with prob homophily.
  std::vector<std::vector<int>> members(static_cast<std::size_t>(recipe.communities));
  for (int v = 0; v < n; ++v) {
    members[community[v]].push_back(v);
  }
  const auto target = static_cast<std::size_t>(std::llround(recipe.avg_degree * n / 2.0));
  std::set<Edge> edges;
  std::uniform_int_distribution<int> pick_node(0, n - 1);
  std::bernoulli_distribution intra(recipe.homophily);
  std::size_t attempts = 0;
  while (edges.size() < target && attempts < target * 50) {
    ++attempts;
    const int u = pick_node(rng);
    int w = 0;
    if (intra(rng) && members[community[u]].size() > 1) {
      const auto& pool = members[community[u]];
      w = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    } else {
      w = pick_node(rng);
    }
    if (u != w) {
      edges.insert(Edge::make(u, w));
    }
  }
  return Graph(n, std::vector<Edge>(edges.begin(), edges.end()), std::move(x), community);
}

}  // namespace eerm

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eerm/env_suite.hpp"
#include "eerm/graph.hpp"

namespace eerm {

/// Fixed, randomly initialized GCN used as a data generator: layers of
/// A_hat * H * W with ReLU between layers, no bias, weights uniform in [-1, 1].
struct RandomGcn {
  std::vector<Matrix> weights;

  static RandomGcn draw(int in_dim, int hidden_dim, int out_dim, int depth, std::uint64_t seed);
  Matrix forward(const SparseMatrix& a_hat, const Matrix& x) const;
};

inline constexpr int kGeneratorHidden = 8;

struct ShiftRecipe {
  int n_envs = 10;
  std::uint64_t seed = 0;
  int spurious_dim = 8;
  int num_classes = 4;
  int generator_depth = 2;
  int generator_hidden = kGeneratorHidden;

  void validate() const;
};

/// Labels as the argmax of a random GCN applied to (x1, A_hat).
std::vector<int> generate_labels(const Graph& g, const Matrix& x1, int num_classes,
                                 std::uint64_t seed, int depth = 2,
                                 int hidden = kGeneratorHidden);

/// Spurious block X2 from a random GCN over [one-hot(labels), env_id / n_envs].
/// The generator weights depend on `seed` only, so environments share them.
Matrix generate_spurious(const Graph& g, std::span<const int> labels, int num_classes, int env_id,
                         int n_envs, int spurious_dim, std::uint64_t seed, int depth = 2,
                         int hidden = kGeneratorHidden);

/// n_envs graphs sharing topology, X1 = base features and labels; each env gets
/// its own X2. Env 0 trains, env 1 validates, the rest test.
EnvSuite make_env_suite(const Graph& base, const ShiftRecipe& recipe);

/// Linear toy mechanism over 1-hop neighborhoods N(v) (center excluded):
///   y_v  = mean_{u in N(v)} x1_u + n1_v
///   x2_v = mean_{u in N(v)} y_u  + n2_v + eps_e
/// x1, n1 (hence y) are shared by all environments; n2 and the per-environment
/// offset eps_e are drawn per environment.
struct ToyRecipe {
  double sigma_e = 1.0;
  int n_envs = 10;
  std::uint64_t seed = 0;
  /// Scale of n1 and n2 (1 = standard normal).
  double node_noise = 1.0;
  bool env_noise = true;
  /// Re-center and rescale eps across the suite so its empirical mean is 0
  /// and its empirical std is exactly sigma_e (needs n_envs >= 2).
  bool moment_match = true;

  void validate() const;
};

struct ToySuite {
  EnvSuite suite;
  std::vector<double> epsilon;  // per environment, in env-id order
  Vector x1;
  Vector y;
};

/// All environments get the train role; toy objectives pool every environment.
ToySuite gen_toy(const Graph& g, const ToyRecipe& recipe);

/// Raw per-environment offsets, without moment matching.
std::vector<double> draw_env_offsets(double sigma_e, int n_envs, std::uint64_t seed);

/// n/2 disjoint edges (0-1, 2-3, ...): every node has exactly one neighbor.
Graph perfect_matching_graph(int n);

/// Stochastic-block base graph with Gaussian features around community centers.
struct BaseGraphRecipe {
  int nodes = 600;
  int feature_dim = 16;
  int communities = 4;
  double avg_degree = 6.0;
  double homophily = 0.8;
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
};

Graph make_base_graph(const BaseGraphRecipe& recipe);

}  // namespace eerm

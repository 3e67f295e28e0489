#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "eerm/models.hpp"
#include "eerm/synth.hpp"
#include "eerm/toy_oracle.hpp"

using namespace eerm;

namespace {

ToySuite make_toy(double sigma2, int nodes, int envs, std::uint64_t seed) {
  ToyRecipe r;
  r.sigma_e = std::sqrt(sigma2);
  r.n_envs = envs;
  r.seed = seed;
  return gen_toy(perfect_matching_graph(nodes), r);
}

// Risk through the model code path: linear_gcn prediction, then mean squared error.
double risk_via_model(const Graph& g, double t1, double t2) {
  ModelParams p;
  p.backbone = Backbone::linear_gcn;
  p.weights = {(Matrix(2, 1) << t1, t2).finished()};
  const Matrix pred = predict(p, g);
  return (pred.col(0) - g.targets()).squaredNorm() / g.num_nodes();
}

}  // namespace

TEST(ErmOptimum, FrozenValues) {
  // Population risk (1-t1-t2)^2 + (1-t2)^2 + t2^2 (1 + s^2) at its stationary point.
  EXPECT_NEAR(erm_optimum(std::sqrt(0.5)).theta[0], 0.6, 1e-15);
  EXPECT_NEAR(erm_optimum(std::sqrt(0.5)).theta[1], 0.4, 1e-15);
  EXPECT_NEAR(erm_optimum(1.0).theta[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(erm_optimum(1.0).theta[1], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(erm_optimum(std::sqrt(2.0)).theta[0], 0.75, 1e-15);
  EXPECT_NEAR(erm_optimum(std::sqrt(2.0)).theta[1], 0.25, 1e-15);
}

TEST(ErmOptimum, SolvesNormalEquationsOfPopulationRisk) {
  // Gradient of the quadratic above is H t - b with
  // H = [[2, 2], [2, 6 + 2 s^2]], b = [2, 4].
  for (double s2 : {0.1, 0.5, 1.0, 2.0, 10.0, 100.0}) {
    Eigen::Matrix2d h;
    h << 2.0, 2.0, 2.0, 6.0 + 2.0 * s2;
    const Eigen::Vector2d t = h.lu().solve(Eigen::Vector2d(2.0, 4.0));
    const auto opt = erm_optimum(std::sqrt(s2));
    EXPECT_NEAR(opt.theta[0], t(0), 1e-12);
    EXPECT_NEAR(opt.theta[1], t(1), 1e-12);
    EXPECT_NEAR(opt.theta[0] + opt.theta[1], 1.0, 1e-12);
  }
}

TEST(VarianceOptimum, InvariantWeights) {
  const auto v = variance_optimum();
  EXPECT_EQ(v.theta[0], 1.0);
  EXPECT_EQ(v.theta[1], 0.0);
  EXPECT_EQ(v.objective, ToyObjective::variance);
}

TEST(ThetaGrid, Endpoints) {
  const ThetaGrid g;
  EXPECT_EQ(g.points(), 201);
  EXPECT_DOUBLE_EQ(g.at(0), -0.5);
  EXPECT_NEAR(g.at(150), 1.0, 1e-12);
  EXPECT_NEAR(g.at(200), 1.5, 1e-12);
}

TEST(ToyEnvRisks, MatchModelPath) {
  const ToySuite toy = make_toy(2.0, 200, 4, 3);
  for (const auto& [t1, t2] : {std::pair{0.3, 0.9}, std::pair{1.0, 0.0}, std::pair{-0.2, 0.4}}) {
    const auto risks = toy_env_risks(toy.suite, t1, t2);
    ASSERT_EQ(risks.size(), 4u);
    for (int e = 0; e < 4; ++e) {
      EXPECT_NEAR(risks[e], risk_via_model(toy.suite.env(e).graph, t1, t2), 1e-12);
    }
  }
}

TEST(ToyEnvRisks, InvariantWeightsGiveUnitRiskEverywhere) {
  // At theta = (1, 0) the residual is n1, which is moment matched to unit scale.
  const ToySuite toy = make_toy(2.0, 400, 10, 4);
  for (double r : toy_env_risks(toy.suite, 1.0, 0.0)) {
    EXPECT_NEAR(r, 1.0, 1e-9);
  }
}

TEST(RiskSurface, CellsMatchDirectRisks) {
  const ToySuite toy = make_toy(1.0, 200, 6, 5);
  const ThetaGrid grid{-0.5, 1.5, 0.1};
  const RiskSurface s = empirical_risk_surface(grid, toy.suite);
  for (const auto& [i, j] : {std::pair{0, 0}, std::pair{7, 13}, std::pair{20, 3}}) {
    const auto risks = toy_env_risks(toy.suite, grid.at(i), grid.at(j));
    const double mean = std::accumulate(risks.begin(), risks.end(), 0.0) / risks.size();
    double var = 0.0;
    for (double r : risks) {
      var += (r - mean) * (r - mean);
    }
    var /= risks.size();
    EXPECT_NEAR(s.mean_risk(i, j), mean, 1e-10);
    EXPECT_NEAR(s.risk_variance(i, j), var, 1e-10);
  }
}

TEST(RiskSurface, ArgminsNearClosedForm) {
  const ToySuite toy = make_toy(2.0, 2000, 50, 0);
  const RiskSurface s = empirical_risk_surface(ThetaGrid{}, toy.suite);
  const auto m = s.argmin_mean();
  const auto v = s.argmin_variance();
  EXPECT_NEAR(m[0], 0.75, 0.05);
  EXPECT_NEAR(m[1], 0.25, 0.05);
  EXPECT_NEAR(v[0], 1.0, 0.05);
  EXPECT_NEAR(v[1], 0.0, 0.05);
}

TEST(RiskSurface, VarianceIsNonNegative) {
  const ToySuite toy = make_toy(0.5, 100, 5, 9);
  const RiskSurface s = empirical_risk_surface(ThetaGrid{-0.5, 1.5, 0.05}, toy.suite);
  EXPECT_GE(s.risk_variance.minCoeff(), -1e-12);
}

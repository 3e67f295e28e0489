#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eerm/errors.hpp"
#include "eerm/synth.hpp"
#include "eerm/toy_oracle.hpp"
#include "eerm/trainer.hpp"

using namespace eerm;

namespace {

const std::vector<Graph> kNone;

Graph small_classification_graph(std::uint64_t seed) {
  BaseGraphRecipe r;
  r.nodes = 60;
  r.feature_dim = 4;
  r.communities = 3;
  r.seed = seed;
  return make_base_graph(r);
}

TrainConfig quick_config() {
  TrainConfig c;
  c.epochs = 15;
  c.hidden_dim = 8;
  c.alpha_f = 0.1;
  c.K = 3;
  c.s = 2;
  return c;
}

TrainConfig toy_config() {
  TrainConfig c;
  c.backbone = Backbone::linear_gcn;
  c.loss = LossKind::squared;
  c.selection = ModelSelection::last;
  c.weight_decay = 0.0;
  return c;
}

std::vector<Graph> toy_graphs(double sigma2, int nodes, std::uint64_t seed) {
  ToyRecipe r;
  r.sigma_e = std::sqrt(sigma2);
  r.seed = seed;
  return gen_toy(perfect_matching_graph(nodes), r).suite.graphs_with_role(EnvRole::train);
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate(true, 1));
  c.K = 1;
  EXPECT_THROW(c.validate(true, 1), ContractError);
  EXPECT_NO_THROW(c.validate(true, 2));
  EXPECT_NO_THROW(c.validate(false, 1));
  c = TrainConfig{};
  c.alpha_f = 0.0;
  EXPECT_THROW(c.validate(false, 1), ContractError);
  c = TrainConfig{};
  c.beta = -1.0;
  EXPECT_THROW(c.validate(true, 1), ContractError);
}

TEST(TrainEerm, IdenticalViewsHaveZeroJ1) {
  const Graph g = small_classification_graph(1);
  TrainConfig c = quick_config();
  c.s = 0;
  const auto res = train_eerm(c, std::span<const Graph>(&g, 1), kNone);
  ASSERT_EQ(res.history.records.size(), 15u);
  for (const auto& r : res.history.records) {
    EXPECT_EQ(r.j1, 0.0);
    EXPECT_EQ(r.view_risks.size(), 3u);
  }
  EXPECT_EQ(res.history.mean_j1(), 0.0);
  EXPECT_TRUE(res.editors.empty());
}

TEST(TrainEerm, UneditedViewsReduceToScaledErm) {
  // With identical views J2 = beta * mean risk, so alpha_f / beta reproduces ERM.
  const Graph g = small_classification_graph(2);
  TrainConfig c = quick_config();
  c.s = 0;
  c.weight_decay = 0.0;
  c.beta = 4.0;
  c.alpha_f = 0.2 / 4.0;
  const auto eerm = train_eerm(c, std::span<const Graph>(&g, 1), kNone);
  c.alpha_f = 0.2;
  const auto erm = train_erm(c, std::span<const Graph>(&g, 1), kNone);
  for (std::size_t i = 0; i < erm.params.weights.size(); ++i) {
    EXPECT_TRUE(eerm.params.weights[i].isApprox(erm.params.weights[i], 1e-9));
  }
}

TEST(TrainErm, TrainRiskNeverIncreasesUnderDescentCheck) {
  const Graph g = small_classification_graph(3);
  TrainConfig c = quick_config();
  c.weight_decay = 0.0;
  c.alpha_f = 5.0;  // large enough that some steps must be shrunk
  c.epochs = 40;
  const auto res = train_erm(c, std::span<const Graph>(&g, 1), kNone);
  bool shrunk = false;
  for (std::size_t e = 1; e < res.history.records.size(); ++e) {
    EXPECT_LE(res.history.records[e].train_risk, res.history.records[e - 1].train_risk + 1e-12);
    shrunk = shrunk || res.history.records[e].step < c.alpha_f;
  }
  EXPECT_TRUE(shrunk);
}

TEST(TrainEerm, DeterministicForSeed) {
  const Graph g = small_classification_graph(4);
  TrainConfig c = quick_config();
  c.seed = 11;
  const auto a = train_eerm(c, std::span<const Graph>(&g, 1), std::span<const Graph>(&g, 1));
  const auto b = train_eerm(c, std::span<const Graph>(&g, 1), std::span<const Graph>(&g, 1));
  for (std::size_t i = 0; i < a.params.weights.size(); ++i) {
    EXPECT_EQ(a.params.weights[i], b.params.weights[i]);
  }
  std::ostringstream ha;
  std::ostringstream hb;
  write_history_jsonl(ha, a.history);
  write_history_jsonl(hb, b.history);
  EXPECT_EQ(ha.str(), hb.str());
  ASSERT_EQ(a.editors.size(), 3u);
  EXPECT_EQ(a.editors[0].logits(), b.editors[0].logits());
}

TEST(TrainEerm, EditorsStayUniformWhenFrozen) {
  const Graph g = small_classification_graph(5);
  TrainConfig c = quick_config();
  c.train_editors = false;
  const auto res = train_eerm(c, std::span<const Graph>(&g, 1), kNone);
  for (const auto& e : res.editors) {
    EXPECT_EQ(e.logits(), Matrix::Zero(60, 60));
  }
  c.train_editors = true;
  c.alpha_g = 10.0;
  const auto trained = train_eerm(c, std::span<const Graph>(&g, 1), kNone);
  EXPECT_GT(trained.editors[0].logits().cwiseAbs().maxCoeff(), 0.0);
}

TEST(TrainEerm, BestValidSelection) {
  const Graph g = small_classification_graph(6);
  TrainConfig c = quick_config();
  const auto res = train_eerm(c, std::span<const Graph>(&g, 1), std::span<const Graph>(&g, 1));
  double best = -1.0;
  int best_epoch = -1;
  for (const auto& r : res.history.records) {
    if (r.valid_metric > best) {
      best = r.valid_metric;
      best_epoch = r.epoch;
    }
  }
  EXPECT_EQ(res.history.best_epoch, best_epoch);
  EXPECT_NEAR(evaluate(res.params, g, Metric::accuracy, "valid"), best, 1e-12);
}

TEST(TrainEerm, RejectsMismatchedLoss) {
  const Graph g = small_classification_graph(7);
  TrainConfig c = quick_config();
  c.loss = LossKind::squared;
  EXPECT_THROW(train_eerm(c, std::span<const Graph>(&g, 1), kNone), ContractError);
}

TEST(TrainEerm, RejectsUnequalNodeCounts) {
  const std::vector<Graph> graphs = {small_classification_graph(1),
                                     perfect_matching_graph(10)};
  EXPECT_THROW(train_eerm(quick_config(), graphs, kNone), ContractError);
}

TEST(History, JsonlOneObjectPerEpoch) {
  const Graph g = small_classification_graph(8);
  TrainConfig c = quick_config();
  c.epochs = 4;
  const auto res = train_eerm(c, std::span<const Graph>(&g, 1), kNone);
  std::ostringstream out;
  write_history_jsonl(out, res.history);
  std::istringstream in(out.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("epoch").get<int>(), n);
    EXPECT_EQ(j.at("view_risks").size(), 3u);
    EXPECT_TRUE(j.at("valid_metric").is_null());
    EXPECT_NEAR(j.at("j1").get<double>(), res.history.records[n].j1, 1e-12);
    ++n;
  }
  EXPECT_EQ(n, 4);
}

TEST(ToyTraining, ErmReachesClosedFormOptimum) {
  const auto graphs = toy_graphs(2.0, 2000, 0);
  TrainConfig c = toy_config();
  c.epochs = 300;
  c.alpha_f = 1.0;
  const auto res = train_erm(c, graphs, kNone);
  const auto opt = erm_optimum(std::sqrt(2.0));
  EXPECT_NEAR(res.params.weights[0](0, 0), opt.theta[0], 0.05);
  EXPECT_NEAR(res.params.weights[0](1, 0), opt.theta[1], 0.05);
}

TEST(ToyTraining, ErmUnderLargeShiftApproachesInvariantWeights) {
  const auto graphs = toy_graphs(100.0, 2000, 1);
  TrainConfig c = toy_config();
  c.epochs = 600;
  c.alpha_f = 0.01;
  const auto res = train_erm(c, graphs, kNone);
  const auto opt = erm_optimum(10.0);
  EXPECT_NEAR(res.params.weights[0](0, 0), opt.theta[0], 0.05);
  EXPECT_NEAR(res.params.weights[0](1, 0), opt.theta[1], 0.05);
}

TEST(ToyTraining, VarianceObjectiveReachesInvariantWeights) {
  const auto graphs = toy_graphs(2.0, 2000, 2);
  TrainConfig c = toy_config();
  c.K = 1;
  c.s = 0;
  c.beta = 1e-4;
  c.epochs = 1000;
  c.alpha_f = 400.0;
  const auto res = train_eerm(c, graphs, kNone);
  EXPECT_NEAR(res.params.weights[0](0, 0), 1.0, 0.05);
  EXPECT_NEAR(res.params.weights[0](1, 0), 0.0, 0.05);
}

TEST(Evaluate, UsesNamedMask) {
  Matrix x(4, 1);
  x << 1.0, -1.0, 1.0, -1.0;
  const Graph g(4, {}, x, {1, 0, 0, 0}, {{"test", {true, true, false, false}}});
  ModelParams p;
  p.backbone = Backbone::sgc;
  p.weights = {(Matrix(1, 2) << -1.0, 1.0).finished()};
  p.standardize = false;
  EXPECT_DOUBLE_EQ(evaluate(p, g, Metric::accuracy, "test"), 1.0);
  EXPECT_DOUBLE_EQ(evaluate(p, g, Metric::accuracy, "missing"), 0.75);
}

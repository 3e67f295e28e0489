#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "eerm/errors.hpp"
#include "eerm/objective.hpp"

using namespace eerm;

namespace {

RiskVector risks_on(Tape& t, const std::vector<double>& values) {
  RiskVector rv;
  for (std::size_t i = 0; i < values.size(); ++i) {
    rv.risks.push_back(t.leaf(Matrix::Constant(1, 1, values[i])));
    rv.view_ids.push_back(static_cast<int>(i));
  }
  return rv;
}

}  // namespace

TEST(VarianceRisk, ThreeValues) {
  Tape t;
  const RiskVector rv = risks_on(t, {1.0, 2.0, 3.0});
  EXPECT_NEAR(variance_risk(rv).scalar(), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(rv.values(), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(VarianceRisk, IdenticalRisksGiveZero) {
  Tape t;
  EXPECT_EQ(variance_risk(risks_on(t, {0.7, 0.7, 0.7, 0.7})).scalar(), 0.0);
}

TEST(EermLoss, AddsBetaTimesMean) {
  Tape t;
  const RiskVector rv = risks_on(t, {1.0, 2.0, 3.0});
  EXPECT_NEAR(eerm_loss(rv, 0.5).scalar(), 2.0 / 3.0 + 0.5 * 2.0, 1e-15);
  EXPECT_NEAR(eerm_loss(rv, 0.0).scalar(), 2.0 / 3.0, 1e-15);
}

TEST(EermLoss, ShiftAndPermutationProperties) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(2 + trial % 5);
    for (auto& x : v) {
      x = u(rng);
    }
    const double c = u(rng);
    std::vector<double> shifted = v;
    for (auto& x : shifted) {
      x += c;
    }
    std::vector<double> perm = v;
    std::shuffle(perm.begin(), perm.end(), rng);
    Tape t;
    const double base_var = variance_risk(risks_on(t, v)).scalar();
    EXPECT_NEAR(variance_risk(risks_on(t, shifted)).scalar(), base_var, 1e-12);
    EXPECT_NEAR(variance_risk(risks_on(t, perm)).scalar(), base_var, 1e-12);
    const double beta = 1.5;
    EXPECT_NEAR(eerm_loss(risks_on(t, shifted), beta).scalar(),
                eerm_loss(risks_on(t, v), beta).scalar() + beta * c, 1e-12);
    EXPECT_GE(base_var, 0.0);
  }
}

TEST(EermLoss, GradientWithRespectToRisks) {
  // d/dr_i [Var + beta mean] = 2 (r_i - mean) / K + beta / K.
  Tape t;
  const std::vector<double> v = {0.5, 1.5, 4.0};
  const RiskVector rv = risks_on(t, v);
  const double beta = 2.0;
  t.backward(eerm_loss(rv, beta));
  const double mean = 2.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_NEAR(rv.risks[i].grad()(0, 0), (2.0 * (v[i] - mean) + beta) / 3.0, 1e-14);
  }
}

TEST(EnvRisk, UniformLogitsGiveLogC) {
  const Graph g(4, {{0, 1}}, Matrix::Zero(4, 1), {0, 1, 2, 1});
  Tape t;
  const Var logits = t.constant(Matrix::Zero(4, 3));
  EXPECT_NEAR(env_risk(logits, g, std::vector<int>{0, 1, 2, 3}, LossKind::cross_entropy).scalar(),
              std::log(3.0), 1e-14);
}

TEST(EnvRisk, CrossEntropyHandValue) {
  const Graph g(2, {}, Matrix::Zero(2, 1), {1, 0});
  Matrix z(2, 2);
  z << 0.0, 2.0,  //
      1.0, -1.0;
  Tape t;
  const double ce0 = -std::log(std::exp(2.0) / (1.0 + std::exp(2.0)));
  const double ce1 = -std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0)));
  EXPECT_NEAR(env_risk(t.constant(z), g, std::vector<int>{0, 1}, LossKind::cross_entropy).scalar(),
              (ce0 + ce1) / 2.0, 1e-14);
  EXPECT_NEAR(env_risk(t.constant(z), g, std::vector<int>{1}, LossKind::cross_entropy).scalar(), ce1,
              1e-14);
}

TEST(EnvRisk, SquaredErrorUsesTargets) {
  Vector y(3);
  y << 1.0, -1.0, 0.5;
  const Graph g(3, {}, Matrix::Zero(3, 1), {}, {}, y);
  Tape t;
  const Var pred = t.constant(Matrix::Zero(3, 1));
  EXPECT_NEAR(env_risk(pred, g, std::vector<int>{0, 1, 2}, LossKind::squared).scalar(),
              (1.0 + 1.0 + 0.25) / 3.0, 1e-15);
}

TEST(EnvRisk, MaskSelectsRows) {
  const Graph g(3, {}, Matrix::Zero(3, 1), {0, 1, 1});
  Matrix z = Matrix::Zero(3, 2);
  z(2, 1) = 50.0;
  Tape t;
  EXPECT_NEAR(env_risk(t.constant(z), g, NodeMask{false, false, true}, LossKind::cross_entropy)
                  .scalar(),
              0.0, 1e-12);
}

TEST(EnvRisk, RegressionLossNeedsTargets) {
  const Graph g(2, {}, Matrix::Zero(2, 1), {0, 1});
  Tape t;
  EXPECT_THROW(env_risk(t.constant(Matrix::Zero(2, 1)), g, std::vector<int>{0, 1}, LossKind::squared),
               ContractError);
}

TEST(LossKind, StringRoundTrip) {
  for (LossKind k : {LossKind::cross_entropy, LossKind::squared}) {
    EXPECT_EQ(loss_from_string(to_string(k)), k);
  }
}

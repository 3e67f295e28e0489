#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "eerm/errors.hpp"
#include "eerm/metrics.hpp"

using namespace eerm;

namespace {

std::vector<int> iota_rows(int n) {
  std::vector<int> r(n);
  for (int i = 0; i < n; ++i) {
    r[i] = i;
  }
  return r;
}

// Pairwise definition: P(score_pos > score_neg) + 0.5 P(tie).
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1 && y[j] == 0) {
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        ++pairs;
      }
    }
  }
  return wins / pairs;
}

}  // namespace

TEST(Accuracy, CountsMatches) {
  const std::vector<int> pred = {0, 1, 2, 2};
  const std::vector<int> y = {0, 1, 1, 2};
  EXPECT_DOUBLE_EQ(metric_accuracy(pred, y, iota_rows(4)), 0.75);
  EXPECT_DOUBLE_EQ(metric_accuracy(pred, y, std::vector<int>{2}), 0.0);
}

TEST(F1, HandValue) {
  // tp = 1, fp = 1, fn = 1.
  const std::vector<int> pred = {1, 1, 0, 0};
  const std::vector<int> y = {1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(metric_f1(pred, y, iota_rows(4)), 0.5);
}

TEST(F1, NoPositivesAnywhere) {
  const std::vector<int> zeros = {0, 0, 0};
  EXPECT_DOUBLE_EQ(metric_f1(zeros, zeros, iota_rows(3)), 1.0);
  EXPECT_DOUBLE_EQ(metric_f1(std::vector<int>{1, 0, 0}, zeros, iota_rows(3)), 0.0);
}

TEST(RocAuc, ConstantScoresGiveHalf) {
  const std::vector<double> s = {0.3, 0.3, 0.3, 0.3};
  const std::vector<int> y = {0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(*metric_rocauc(s, y, iota_rows(4)), 0.5);
}

TEST(RocAuc, PerfectAndReversed) {
  const std::vector<int> y = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(*metric_rocauc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y, iota_rows(4)), 1.0);
  EXPECT_DOUBLE_EQ(*metric_rocauc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, y, iota_rows(4)), 0.0);
}

TEST(RocAuc, SingleClassIsUndefined) {
  const std::vector<double> s = {0.1, 0.7};
  EXPECT_FALSE(metric_rocauc(s, std::vector<int>{1, 1}, iota_rows(2)).has_value());
  EXPECT_FALSE(metric_rocauc(s, std::vector<int>{0, 1}, std::vector<int>{1}).has_value());
}

TEST(RocAuc, MatchesPairwiseDefinitionWithTies) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> score(0, 5);  // coarse scores force ties
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 5 + trial;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      s[i] = score(rng);
      y[i] = coin(rng) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(*metric_rocauc(s, y, iota_rows(n)), pairwise_auc(s, y), 1e-12);
  }
}

TEST(Metrics, PermutationInvariant) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  const int n = 40;
  std::vector<double> s(n);
  std::vector<int> y(n);
  std::vector<int> pred(n);
  for (int i = 0; i < n; ++i) {
    s[i] = u(rng);
    y[i] = u(rng) < 0.5 ? 1 : 0;
    pred[i] = s[i] > 0.5 ? 1 : 0;
  }
  std::vector<int> rows = iota_rows(n);
  const double auc = *metric_rocauc(s, y, rows);
  const double f1 = metric_f1(pred, y, rows);
  const double acc = metric_accuracy(pred, y, rows);
  std::shuffle(rows.begin(), rows.end(), rng);
  EXPECT_DOUBLE_EQ(*metric_rocauc(s, y, rows), auc);
  EXPECT_DOUBLE_EQ(metric_f1(pred, y, rows), f1);
  EXPECT_DOUBLE_EQ(metric_accuracy(pred, y, rows), acc);
}

TEST(EvaluateMetric, UsesLogitMarginForAuc) {
  Matrix logits(4, 2);
  logits << 0.0, 1.0,  //
      2.0, 0.0,        //
      0.5, 0.4,        //
      -1.0, 3.0;
  const std::vector<int> y = {1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(*evaluate_metric(Metric::roc_auc, logits, y, iota_rows(4)), 1.0);
  EXPECT_DOUBLE_EQ(*evaluate_metric(Metric::accuracy, logits, y, iota_rows(4)), 1.0);
  EXPECT_EQ(argmax_rows(logits), (std::vector<int>{1, 0, 0, 1}));
}

TEST(Metric, StringRoundTrip) {
  for (Metric m : {Metric::accuracy, Metric::roc_auc, Metric::f1}) {
    EXPECT_EQ(metric_from_string(to_string(m)), m);
  }
  EXPECT_THROW(metric_from_string("precision"), ContractError);
}

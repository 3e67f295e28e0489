#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eerm/graph.hpp"

namespace eerm {

enum class Metric { accuracy, roc_auc, f1 };

std::string to_string(Metric m);
Metric metric_from_string(const std::string& s);

std::vector<int> argmax_rows(const Matrix& scores);

/// Fraction of `rows` whose argmax prediction equals the label.
double metric_accuracy(std::span<const int> predictions, std::span<const int> labels,
                       std::span<const int> rows);

/// F1 of the positive class (label 1). 1 when there are no positives to find
/// and none were predicted.
double metric_f1(std::span<const int> predictions, std::span<const int> labels,
                 std::span<const int> rows);

/// Mann-Whitney U / (n_pos * n_neg) with midranks for ties. nullopt when the
/// selected rows hold a single class.
std::optional<double> metric_rocauc(std::span<const double> scores, std::span<const int> labels,
                                    std::span<const int> rows);

/// Metric from model outputs: argmax for accuracy and f1; for roc-auc the
/// positive-class score is logit[1] - logit[0] (or the single column).
std::optional<double> evaluate_metric(Metric m, const Matrix& logits,
                                      std::span<const int> labels, std::span<const int> rows);

}  // namespace eerm

#include "eerm/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "eerm/errors.hpp"

namespace eerm {

std::string to_string(Metric m) {
  switch (m) {
    case Metric::accuracy:
      return "accuracy";
    case Metric::roc_auc:
      return "roc-auc";
    case Metric::f1:
      return "f1";
  }
  return "accuracy";
}

Metric metric_from_string(const std::string& s) {
  if (s == "accuracy") {
    return Metric::accuracy;
  }
  if (s == "roc-auc") {
    return Metric::roc_auc;
  }
  if (s == "f1") {
    return Metric::f1;
  }
  throw ContractError("unknown metric '" + s + "'");
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index arg = 0;
    scores.row(r).maxCoeff(&arg);
    out[r] = static_cast<int>(arg);
  }
  return out;
}

namespace {

void require_selection(std::size_t n_pred, std::size_t n_labels, std::span<const int> rows,
                       const char* what) {
  require(n_pred == n_labels, std::string(what) + ": prediction/label count mismatch");
  require(!rows.empty(), std::string(what) + ": empty mask");
  for (int r : rows) {
    require(r >= 0 && static_cast<std::size_t>(r) < n_labels,
            std::string(what) + ": row out of range");
  }
}

void require_binary(std::span<const int> labels, std::span<const int> rows, const char* what) {
  for (int r : rows) {
    require(labels[r] == 0 || labels[r] == 1, std::string(what) + ": labels must be binary");
  }
}

}  // namespace

double metric_accuracy(std::span<const int> predictions, std::span<const int> labels,
                       std::span<const int> rows) {
  require_selection(predictions.size(), labels.size(), rows, "accuracy");
  std::size_t hits = 0;
  for (int r : rows) {
    hits += predictions[r] == labels[r] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

double metric_f1(std::span<const int> predictions, std::span<const int> labels,
                 std::span<const int> rows) {
  require_selection(predictions.size(), labels.size(), rows, "f1");
  require_binary(labels, rows, "f1");
  double tp = 0, fp = 0, fn = 0;
  for (int r : rows) {
    const bool pred = predictions[r] == 1;
    const bool pos = labels[r] == 1;
    tp += pred && pos ? 1 : 0;
    fp += pred && !pos ? 1 : 0;
    fn += !pred && pos ? 1 : 0;
  }
  if (tp + fp + fn == 0) {
    return 1.0;
  }
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

std::optional<double> metric_rocauc(std::span<const double> scores, std::span<const int> labels,
                                    std::span<const int> rows) {
  require_selection(scores.size(), labels.size(), rows, "roc-auc");
  require_binary(labels, rows, "roc-auc");
  std::vector<int> order(rows.begin(), rows.end());
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  });
  double rank_sum_pos = 0.0;
  double n_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      ++j;
    }
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += midrank;
        n_pos += 1.0;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(order.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) {
    return std::nullopt;
  }
  return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

std::optional<double> evaluate_metric(Metric m, const Matrix& logits,
                                      std::span<const int> labels, std::span<const int> rows) {
  require(logits.rows() == static_cast<Eigen::Index>(labels.size()),
          "evaluate_metric: logit rows != label count");
  if (m == Metric::roc_auc) {
    std::vector<double> score(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      score[r] = logits.cols() >= 2 ? logits(r, 1) - logits(r, 0) : logits(r, 0);
    }
    return metric_rocauc(score, labels, rows);
  }
  const auto pred = argmax_rows(logits);
  return m == Metric::accuracy ? metric_accuracy(pred, labels, rows)
                               : metric_f1(pred, labels, rows);
}

}  // namespace eerm

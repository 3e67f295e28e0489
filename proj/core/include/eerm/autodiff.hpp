#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "eerm/graph.hpp"

namespace eerm {

class Tape;

/// Handle to one node of a Tape. Cheap to copy; valid while its Tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient of the last backward() root w.r.t. this node (zeros if unreached).
  const Matrix& grad() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Append-only record of a computation. Parents always precede children, so
/// reverse insertion order is a valid reverse topological order.
///
/// A Tape is single-threaded; independent Tapes may run on separate threads.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable input (a parameter).
  Var leaf(Matrix value);
  /// Input that never receives a gradient.
  Var constant(Matrix value);

  /// Reverse sweep from a 1x1 root. Clears gradients from any earlier sweep.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  std::string_view op(int id) const { return nodes_[id].op; }
  const std::vector<int>& parents(int id) const { return nodes_[id].parents; }

  // Primitive-author interface.
  Var record(Matrix value, std::string_view op, std::vector<int> parents, BackwardFn fn);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  void accumulate(int id, const Matrix& g);
  const Matrix& value_of(int id) const { return nodes_[id].value; }
  const Matrix& grad_of(int id) const;

 private:
  struct Node {
    Matrix value;
    mutable Matrix grad;  // zero-filled on read when unreached
    std::string_view op;
    std::vector<int> parents;
    BackwardFn backward;
    bool requires_grad = false;
    bool has_grad = false;
  };

  std::vector<Node> nodes_;
};

namespace ad {

/// Frozen per-column statistics used by standardize_with at evaluation time.
struct ColumnStats {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd inv_std;
};

inline constexpr double kStandardizeEps = 1e-5;

Var matmul(Var a, Var b);
/// Sparse (constant) times dense. The sparse operand is shared so it outlives backward().
Var spmm(std::shared_ptr<const SparseMatrix> s, Var x);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var relu(Var a);
Var sum(Var a);
/// Mean over rows: R x C -> 1 x C.
Var row_mean_pool(Var a);

/// Per-column standardization with statistics taken over `rows` (all rows when
/// empty) and applied to every row. Gradients flow through the statistics.
Var feature_standardize(Var a, std::span<const int> rows, ColumnStats* stats_out = nullptr);
/// Standardization with constant statistics.
Var standardize_with(Var a, const ColumnStats& stats);

/// Mean over `rows` of -log softmax(logits_i)[labels_i].
Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const int> rows);
/// Mean over `rows` of ||pred_i - target_i||^2.
Var squared_error(Var pred, const Matrix& target, std::span<const int> rows);

/// Population variance of 1x1 values.
Var variance_of_scalars(std::span<const Var> xs);
Var mean_of_scalars(std::span<const Var> xs);

}  // namespace ad

/// Selected row indices of a boolean mask.
std::vector<int> mask_rows(const NodeMask& mask);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t param = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
};

using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Central finite differences against reverse mode. Error per coordinate is
/// |g_ad - g_fd| / max(1, |g_ad|, |g_fd|); the report holds the worst one.
GradCheckReport grad_check(const ScalarFunction& f, const std::vector<Matrix>& params,
                           double eps = 1e-5);

}  // namespace eerm

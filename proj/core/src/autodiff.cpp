#include "eerm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eerm/errors.hpp"

namespace eerm {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_tape(Var a, Var b, const char* op) {
  require(a.valid() && b.valid() && a.tape() == b.tape(),
          std::string(op) + ": operands belong to different tapes");
}

void require_same_shape(Var a, Var b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch " + shape(a.value()) + " vs " + shape(b.value()));
}

void require_rows(std::span<const int> rows, Eigen::Index n, const char* op) {
  require(!rows.empty(), std::string(op) + ": empty row selection");
  for (int r : rows) {
    require(r >= 0 && r < n, std::string(op) + ": row index out of range");
  }
}

Matrix scalar_matrix(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

const Matrix& Var::value() const { return tape_->value_of(id_); }
const Matrix& Var::grad() const { return tape_->grad_of(id_); }

double Var::scalar() const {
  require(rows() == 1 && cols() == 1, "Var::scalar on a " + shape(value()) + " value");
  return value()(0, 0);
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = "leaf";
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::string_view op, std::vector<int> parents, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                [this](int p) { return nodes_[p].requires_grad; });
  n.parents = std::move(parents);
  if (n.requires_grad) {
    n.backward = std::move(fn);
  }
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) {
    return;
  }
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

const Matrix& Tape::grad_of(int id) const {
  const Node& n = nodes_[id];
  if (n.has_grad) {
    return n.grad;
  }
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(Var root) {
  require(root.tape() == this, "backward: root belongs to another tape");
  require(root.rows() == 1 && root.cols() == 1, "backward: root must be a 1x1 scalar");
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(root.id(), scalar_matrix(1.0));
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.has_grad && n.backward) {
      // The closure may accumulate into parents but never into itself.
      const Matrix upstream = n.grad;
      n.backward(*this, upstream);
    }
  }
}

namespace ad {

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  require(a.cols() == b.rows(),
          "matmul: inner dimension mismatch " + shape(a.value()) + " * " + shape(b.value()));
  Tape& t = *a.tape();
  const int ia = a.id();
  const int ib = b.id();
  return t.record(a.value() * b.value(), "matmul", {ia, ib}, [ia, ib](Tape& tp, const Matrix& g) {
    if (tp.requires_grad(ia)) {
      tp.accumulate(ia, g * tp.value_of(ib).transpose());
    }
    if (tp.requires_grad(ib)) {
      tp.accumulate(ib, tp.value_of(ia).transpose() * g);
    }
  });
}

Var spmm(std::shared_ptr<const SparseMatrix> s, Var x) {
  require(s != nullptr && x.valid(), "spmm: null operand");
  require(s->cols() == x.rows(), "spmm: inner dimension mismatch " + std::to_string(s->rows()) +
                                     "x" + std::to_string(s->cols()) + " * " + shape(x.value()));
  Tape& t = *x.tape();
  const int ix = x.id();
  Matrix out = (*s) * x.value();
  return t.record(std::move(out), "spmm", {ix}, [s, ix](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, s->transpose() * g);
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  require_same_shape(a, b, "add");
  const int ia = a.id();
  const int ib = b.id();
  return a.tape()->record(a.value() + b.value(), "add", {ia, ib},
                          [ia, ib](Tape& tp, const Matrix& g) {
                            tp.accumulate(ia, g);
                            tp.accumulate(ib, g);
                          });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  require_same_shape(a, b, "sub");
  const int ia = a.id();
  const int ib = b.id();
  return a.tape()->record(a.value() - b.value(), "sub", {ia, ib},
                          [ia, ib](Tape& tp, const Matrix& g) {
                            tp.accumulate(ia, g);
                            tp.accumulate(ib, -g);
                          });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  require_same_shape(a, b, "mul");
  const int ia = a.id();
  const int ib = b.id();
  return a.tape()->record(a.value().cwiseProduct(b.value()), "mul", {ia, ib},
                          [ia, ib](Tape& tp, const Matrix& g) {
                            if (tp.requires_grad(ia)) {
                              tp.accumulate(ia, g.cwiseProduct(tp.value_of(ib)));
                            }
                            if (tp.requires_grad(ib)) {
                              tp.accumulate(ib, g.cwiseProduct(tp.value_of(ia)));
                            }
                          });
}

Var scale(Var a, double c) {
  const int ia = a.id();
  return a.tape()->record(a.value() * c, "scale", {ia},
                          [ia, c](Tape& tp, const Matrix& g) { tp.accumulate(ia, g * c); });
}

Var relu(Var a) {
  const int ia = a.id();
  return a.tape()->record(a.value().cwiseMax(0.0), "relu", {ia}, [ia](Tape& tp, const Matrix& g) {
    const Matrix& x = tp.value_of(ia);
    tp.accumulate(ia, (x.array() > 0.0).select(g, 0.0));
  });
}

Var sum(Var a) {
  const int ia = a.id();
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return a.tape()->record(scalar_matrix(a.value().sum()), "sum", {ia},
                          [ia, r, c](Tape& tp, const Matrix& g) {
                            tp.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
                          });
}

Var row_mean_pool(Var a) {
  require(a.rows() > 0, "row_mean_pool: no rows");
  const int ia = a.id();
  const Eigen::Index r = a.rows();
  return a.tape()->record(a.value().colwise().mean(), "row_mean_pool", {ia},
                          [ia, r](Tape& tp, const Matrix& g) {
                            tp.accumulate(ia, g.replicate(r, 1) / static_cast<double>(r));
                          });
}

Var feature_standardize(Var a, std::span<const int> rows_in, ColumnStats* stats_out) {
  const Matrix& x = a.value();
  std::vector<int> rows(rows_in.begin(), rows_in.end());
  if (rows.empty()) {
    rows.resize(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i] = static_cast<int>(i);
    }
  }
  require_rows(rows, x.rows(), "feature_standardize");
  const double m = static_cast<double>(rows.size());

  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
  for (int r : rows) {
    mean += x.row(r);
  }
  mean /= m;
  Eigen::RowVectorXd var = Eigen::RowVectorXd::Zero(x.cols());
  for (int r : rows) {
    var += (x.row(r) - mean).array().square().matrix();
  }
  var /= m;
  const Eigen::RowVectorXd inv_std = (var.array() + kStandardizeEps).rsqrt().matrix();
  if (stats_out) {
    *stats_out = {mean, inv_std};
  }

  Matrix centered = x.rowwise() - mean;
  Matrix out = centered.array().rowwise() * inv_std.array();
  const int ia = a.id();
  return a.tape()->record(
      std::move(out), "feature_standardize", {ia},
      [ia, rows = std::move(rows), m, centered = std::move(centered), inv_std](Tape& tp,
                                                                              const Matrix& g) {
        // y = (x - mu) * s with s = (var + eps)^-1/2, statistics over `rows`.
        const Eigen::ArrayXXd ga = g.array();
        Matrix dx = (ga.rowwise() * inv_std.array()).matrix();
        const Eigen::RowVectorXd d_mean = -(g.colwise().sum().array() * inv_std.array()).matrix();
        const Eigen::RowVectorXd d_var =
            (-0.5 * (ga * centered.array()).colwise().sum() * inv_std.array().cube()).matrix();
        for (int r : rows) {
          dx.row(r) += (d_mean.array() / m + d_var.array() * 2.0 * centered.row(r).array() / m)
                           .matrix();
        }
        tp.accumulate(ia, dx);
      });
}

Var standardize_with(Var a, const ColumnStats& stats) {
  require(stats.mean.size() == a.cols() && stats.inv_std.size() == a.cols(),
          "standardize_with: statistics width mismatch");
  Matrix out = ((a.value().rowwise() - stats.mean).array().rowwise() * stats.inv_std.array());
  const int ia = a.id();
  return a.tape()->record(std::move(out), "standardize_with", {ia},
                          [ia, inv = stats.inv_std](Tape& tp, const Matrix& g) {
                            tp.accumulate(ia, (g.array().rowwise() * inv.array()).matrix());
                          });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels, std::span<const int> rows_in) {
  const Matrix& z = logits.value();
  require(static_cast<Eigen::Index>(labels.size()) == z.rows(),
          "softmax_cross_entropy: label count != logit rows");
  require_rows(rows_in, z.rows(), "softmax_cross_entropy");
  std::vector<int> rows(rows_in.begin(), rows_in.end());
  std::vector<int> targets;
  targets.reserve(rows.size());
  Matrix probs(static_cast<Eigen::Index>(rows.size()), z.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    const int y = labels[r];
    require(y >= 0 && y < z.cols(), "softmax_cross_entropy: label out of range");
    const double zmax = z.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(r).array() - zmax).exp().matrix();
    const double total = e.sum();
    probs.row(static_cast<Eigen::Index>(i)) = e / total;
    loss += -(z(r, y) - zmax - std::log(total));
    targets.push_back(y);
  }
  const double m = static_cast<double>(rows.size());
  const int il = logits.id();
  const Eigen::Index n = z.rows();
  const Eigen::Index c = z.cols();
  return logits.tape()->record(
      scalar_matrix(loss / m), "softmax_cross_entropy", {il},
      [il, n, c, m, rows = std::move(rows), targets = std::move(targets),
       probs = std::move(probs)](Tape& tp, const Matrix& g) {
        Matrix dz = Matrix::Zero(n, c);
        for (std::size_t i = 0; i < rows.size(); ++i) {
          dz.row(rows[i]) = probs.row(static_cast<Eigen::Index>(i));
          dz(rows[i], targets[i]) -= 1.0;
        }
        tp.accumulate(il, dz * (g(0, 0) / m));
      });
}

Var squared_error(Var pred, const Matrix& target, std::span<const int> rows_in) {
  const Matrix& p = pred.value();
  require(p.rows() == target.rows() && p.cols() == target.cols(),
          "squared_error: shape mismatch " + shape(p) + " vs " + shape(target));
  require_rows(rows_in, p.rows(), "squared_error");
  std::vector<int> rows(rows_in.begin(), rows_in.end());
  Matrix diff = Matrix::Zero(p.rows(), p.cols());
  double loss = 0.0;
  for (int r : rows) {
    diff.row(r) = p.row(r) - target.row(r);
    loss += diff.row(r).squaredNorm();
  }
  const double m = static_cast<double>(rows.size());
  const int ip = pred.id();
  return pred.tape()->record(scalar_matrix(loss / m), "squared_error", {ip},
                             [ip, m, diff = std::move(diff)](Tape& tp, const Matrix& g) {
                               tp.accumulate(ip, diff * (2.0 * g(0, 0) / m));
                             });
}

Var variance_of_scalars(std::span<const Var> xs) {
  require(!xs.empty(), "variance_of_scalars: empty list");
  Tape* t = xs.front().tape();
  std::vector<int> ids;
  std::vector<double> values;
  for (const Var& x : xs) {
    require(x.tape() == t, "variance_of_scalars: operands belong to different tapes");
    values.push_back(x.scalar());
    ids.push_back(x.id());
  }
  const double k = static_cast<double>(values.size());
  // Shift by the first value so identical inputs give exactly zero.
  std::vector<double> dev(values.size());
  double mean = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    dev[j] = values[j] - values.front();
    mean += dev[j];
  }
  mean /= k;
  double var = 0.0;
  for (double& d : dev) {
    d -= mean;
    var += d * d;
  }
  var /= k;
  return t->record(scalar_matrix(var), "variance_of_scalars", ids,
                   [ids, dev, k](Tape& tp, const Matrix& g) {
                     for (std::size_t j = 0; j < ids.size(); ++j) {
                       tp.accumulate(ids[j], scalar_matrix(g(0, 0) * 2.0 * dev[j] / k));
                     }
                   });
}

Var mean_of_scalars(std::span<const Var> xs) {
  require(!xs.empty(), "mean_of_scalars: empty list");
  Tape* t = xs.front().tape();
  std::vector<int> ids;
  double total = 0.0;
  for (const Var& x : xs) {
    require(x.tape() == t, "mean_of_scalars: operands belong to different tapes");
    total += x.scalar();
    ids.push_back(x.id());
  }
  const double k = static_cast<double>(ids.size());
  return t->record(scalar_matrix(total / k), "mean_of_scalars", ids,
                   [ids, k](Tape& tp, const Matrix& g) {
                     for (int id : ids) {
                       tp.accumulate(id, scalar_matrix(g(0, 0) / k));
                     }
                   });
}

}  // namespace ad

std::vector<int> mask_rows(const NodeMask& mask) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      rows.push_back(static_cast<int>(i));
    }
  }
  return rows;
}

GradCheckReport grad_check(const ScalarFunction& f, const std::vector<Matrix>& params,
                           double eps) {
  require(eps > 0.0 && eps <= 1e-2, "grad_check: eps must lie in (0, 1e-2]");

  auto evaluate = [&](const std::vector<Matrix>& ps) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : ps) {
      vars.push_back(tape.leaf(p));
    }
    return f(tape, vars).scalar();
  };

  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) {
      vars.push_back(tape.leaf(p));
    }
    Var root = f(tape, vars);
    if (!std::isfinite(root.scalar())) {
      throw NumericalError("grad_check: non-finite function value");
    }
    tape.backward(root);
    for (const auto& v : vars) {
      analytic.push_back(v.grad());
    }
  }

  GradCheckReport report;
  std::vector<Matrix> probe = params;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (Eigen::Index r = 0; r < params[p].rows(); ++r) {
      for (Eigen::Index c = 0; c < params[p].cols(); ++c) {
        const double original = params[p](r, c);
        probe[p](r, c) = original + eps;
        const double plus = evaluate(probe);
        probe[p](r, c) = original - eps;
        const double minus = evaluate(probe);
        probe[p](r, c) = original;

        const double fd = (plus - minus) / (2.0 * eps);
        const double ad = analytic[p](r, c);
        if (!std::isfinite(fd) || !std::isfinite(ad)) {
          throw NumericalError("grad_check: non-finite gradient at param " + std::to_string(p) +
                               " (" + std::to_string(r) + ", " + std::to_string(c) + ")");
        }
        const double err =
            std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
        if (err > report.max_rel_error) {
          report = {err, p, r, c};
        }
      }
    }
  }
  return report;
}

}  // namespace eerm

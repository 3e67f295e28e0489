#include "eerm/models.hpp"

#include <cmath>

#include "eerm/errors.hpp"
#include "eerm/random.hpp"

namespace eerm {

std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::linear_gcn:
      return "linear-gcn";
    case Backbone::gcn:
      return "gcn";
    case Backbone::sgc:
      return "sgc";
  }
  return "gcn";
}

Backbone backbone_from_string(const std::string& s) {
  if (s == "linear-gcn") {
    return Backbone::linear_gcn;
  }
  if (s == "gcn") {
    return Backbone::gcn;
  }
  if (s == "sgc") {
    return Backbone::sgc;
  }
  throw ContractError("unknown backbone '" + s + "'");
}

void ModelParams::validate() const {
  const std::size_t expected = backbone == Backbone::gcn ? 2 : 1;
  require(weights.size() == expected,
          to_string(backbone) + ": expected " + std::to_string(expected) + " weight matrices");
  for (const auto& w : weights) {
    require(w.size() > 0, to_string(backbone) + ": empty weight matrix");
    require(w.allFinite(), to_string(backbone) + ": non-finite weight");
  }
  if (backbone == Backbone::gcn) {
    require(weights[0].cols() == weights[1].rows(), "gcn: W1 columns != W2 rows");
    require(weights[0].cols() == hidden_dim, "gcn: W1 columns != hidden_dim");
  }
  if (backbone == Backbone::linear_gcn) {
    require(weights[0].rows() == 2 && weights[0].cols() == 1, "linear-gcn: theta must be 2x1");
  }
  if (backbone == Backbone::sgc) {
    require(layers >= 0, "sgc: negative propagation depth");
  }
}

ModelParams init_params(const ModelShape& shape, std::uint64_t seed) {
  require(shape.input_dim > 0 && shape.output_dim > 0, "init_params: dimensions must be positive");
  Rng rng(seed);
  auto draw = [&rng](int rows, int cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(rows, cols);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) {
        w(r, c) = dist(rng);
      }
    }
    return w;
  };
  ModelParams p;
  p.backbone = shape.backbone;
  p.hidden_dim = shape.hidden_dim;
  p.layers = shape.layers;
  p.standardize = shape.standardize && shape.backbone == Backbone::gcn;
  switch (shape.backbone) {
    case Backbone::gcn:
      require(shape.hidden_dim > 0, "init_params: gcn hidden_dim must be positive");
      p.weights = {draw(shape.input_dim, shape.hidden_dim),
                   draw(shape.hidden_dim, shape.output_dim)};
      p.layers = 2;
      break;
    case Backbone::sgc:
      p.weights = {draw(shape.input_dim, shape.output_dim)};
      break;
    case Backbone::linear_gcn:
      require(shape.input_dim == 2 && shape.output_dim == 1, "init_params: linear-gcn is 2 -> 1");
      p.weights = {draw(2, 1)};
      p.layers = 1;
      break;
  }
  p.validate();
  return p;
}

std::shared_ptr<const SparseMatrix> propagation(Backbone b, const Graph& g, bool allow_isolated) {
  if (b == Backbone::linear_gcn) {
    return std::make_shared<const SparseMatrix>(mean_aggregation(g, allow_isolated));
  }
  return std::make_shared<const SparseMatrix>(normalize_adjacency(g));
}

namespace {

void require_weights(const ModelParams& p, std::span<const Var> weights) {
  require(weights.size() == p.weights.size(), "forward: weight handle count mismatch");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    require(weights[i].rows() == p.weights[i].rows() && weights[i].cols() == p.weights[i].cols(),
            "forward: weight handle shape mismatch");
  }
}

void require_operator(const SparseMatrix& op, Var x) {
  require(op.rows() == x.rows() && op.cols() == x.rows(),
          "forward: propagation operator does not match feature rows");
}

}  // namespace

Var gcn_forward(const ModelParams& p, std::span<const Var> weights,
                const std::shared_ptr<const SparseMatrix>& a_hat, Var x, StandardizeMode mode) {
  require(p.backbone == Backbone::gcn, "gcn_forward: backbone is " + to_string(p.backbone));
  require_weights(p, weights);
  require_operator(*a_hat, x);
  require(x.cols() == weights[0].rows(), "gcn_forward: feature width != W1 rows");
  Var h = ad::spmm(a_hat, ad::matmul(x, weights[0]));
  if (p.standardize) {
    h = mode.frozen ? ad::standardize_with(h, *mode.frozen)
                    : ad::feature_standardize(h, mode.rows, mode.stats_out);
  }
  return ad::spmm(a_hat, ad::matmul(ad::relu(h), weights[1]));
}

Var sgc_forward(const ModelParams& p, std::span<const Var> weights,
                const std::shared_ptr<const SparseMatrix>& a_hat, Var x) {
  require(p.backbone == Backbone::sgc, "sgc_forward: backbone is " + to_string(p.backbone));
  require_weights(p, weights);
  require_operator(*a_hat, x);
  require(x.cols() == weights[0].rows(), "sgc_forward: feature width != W rows");
  Var h = x;
  for (int l = 0; l < p.layers; ++l) {
    h = ad::spmm(a_hat, h);
  }
  return ad::matmul(h, weights[0]);
}

Var linear_gcn_forward(const ModelParams& p, std::span<const Var> weights,
                       const std::shared_ptr<const SparseMatrix>& mean_op, Var x) {
  require(p.backbone == Backbone::linear_gcn,
          "linear_gcn_forward: backbone is " + to_string(p.backbone));
  require_weights(p, weights);
  require_operator(*mean_op, x);
  require(x.cols() == 2, "linear_gcn_forward: expects 2 features");
  return ad::spmm(mean_op, ad::matmul(x, weights[0]));
}

Var forward(const ModelParams& p, std::span<const Var> weights,
            const std::shared_ptr<const SparseMatrix>& op, Var x, StandardizeMode mode) {
  switch (p.backbone) {
    case Backbone::gcn:
      return gcn_forward(p, weights, op, x, mode);
    case Backbone::sgc:
      return sgc_forward(p, weights, op, x);
    case Backbone::linear_gcn:
      return linear_gcn_forward(p, weights, op, x);
  }
  throw ContractError("forward: unknown backbone");
}

Matrix predict(const ModelParams& p, const Graph& g, const Matrix& features, bool allow_isolated) {
  require(features.rows() == g.num_nodes(), "predict: feature rows != node count");
  Tape tape;
  std::vector<Var> w;
  for (const auto& m : p.weights) {
    w.push_back(tape.constant(m));
  }
  StandardizeMode mode;
  if (p.eval_stats) {
    mode.frozen = &*p.eval_stats;
  }
  const auto op = propagation(p.backbone, g, allow_isolated);
  return forward(p, w, op, tape.constant(features), mode).value();
}

Matrix predict(const ModelParams& p, const Graph& g, bool allow_isolated) {
  return predict(p, g, g.features(), allow_isolated);
}

ad::ColumnStats hidden_stats(const ModelParams& p, std::span<const Graph> graphs,
                             std::span<const std::vector<int>> rows_per_graph) {
  require(p.backbone == Backbone::gcn, "hidden_stats: only gcn has a hidden layer");
  require(!graphs.empty() && graphs.size() == rows_per_graph.size(),
          "hidden_stats: need one row list per graph");
  const auto h_dim = p.weights[0].cols();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(h_dim);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(h_dim);
  double count = 0.0;
  std::vector<Matrix> hidden;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    hidden.push_back(normalize_adjacency(graphs[i]) * (graphs[i].features() * p.weights[0]));
  }
  auto each_row = [&](auto&& fn) {
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      if (rows_per_graph[i].empty()) {
        for (Eigen::Index r = 0; r < hidden[i].rows(); ++r) {
          fn(hidden[i].row(r));
        }
      } else {
        for (int r : rows_per_graph[i]) {
          fn(hidden[i].row(r));
        }
      }
    }
  };
  each_row([&](const auto& row) {
    sum += row;
    count += 1.0;
  });
  const Eigen::RowVectorXd mean = sum / count;
  each_row([&](const auto& row) { sq += (row - mean).array().square().matrix(); });
  const Eigen::RowVectorXd var = sq / count;
  return {mean, (var.array() + ad::kStandardizeEps).rsqrt().matrix()};
}

}  // namespace eerm

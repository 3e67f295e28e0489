#include "eerm/trainer.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "eerm/errors.hpp"
#include "eerm/random.hpp"

namespace eerm {

std::string to_string(ModelSelection s) {
  return s == ModelSelection::best_valid ? "best-valid" : "last";
}

ModelSelection selection_from_string(const std::string& s) {
  if (s == "best-valid") {
    return ModelSelection::best_valid;
  }
  if (s == "last") {
    return ModelSelection::last;
  }
  throw ContractError("unknown model selection '" + s + "'");
}

void TrainConfig::validate(bool eerm, std::size_t train_graphs) const {
  require(train_graphs >= 1, "train config: no training graphs");
  require(alpha_f > 0.0 && alpha_g > 0.0, "train config: learning rates must be positive");
  require(epochs >= 1 && T >= 1, "train config: epochs and T must be >= 1");
  require(K >= 1 && s >= 0, "train config: K >= 1 and s >= 0 required");
  require(beta >= 0.0 && weight_decay >= 0.0, "train config: beta and weight_decay must be >= 0");
  require(descent_probes >= 0, "train config: descent_probes must be >= 0");
  if (eerm) {
    require(static_cast<std::size_t>(K) * train_graphs >= 2,
            "train config: EERM needs at least two risks (K * training graphs >= 2)");
  }
}

double TrainHistory::mean_j1() const {
  if (records.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto& r : records) {
    total += r.j1;
  }
  return total / static_cast<double>(records.size());
}

void write_history_jsonl(std::ostream& out, const TrainHistory& h) {
  for (const auto& r : h.records) {
    nlohmann::json j = {{"epoch", r.epoch},
                        {"j1", r.j1},
                        {"j2", r.j2},
                        {"view_risks", r.view_risks},
                        {"train_risk", r.train_risk},
                        {"step", r.step},
                        {"best_epoch", r.best_epoch}};
    if (std::isfinite(r.valid_metric)) {
      j["valid_metric"] = r.valid_metric;
    } else {
      j["valid_metric"] = nullptr;
    }
    out << j.dump() << '\n';
  }
}

namespace {

/// Validation score, higher is better: the configured metric for class labels,
/// negative mean squared error for regression targets.
double score(const ModelParams& p, const Graph& g, Metric metric, const std::string& mask_name,
             bool allow_isolated) {
  const Matrix out = predict(p, g, allow_isolated);
  const auto rows = mask_rows(g.mask(mask_name, true));
  if (g.is_regression()) {
    double se = 0.0;
    for (int r : rows) {
      se += (out(r, 0) - g.targets()(r)) * (out(r, 0) - g.targets()(r));
    }
    return -se / static_cast<double>(rows.size());
  }
  return evaluate_metric(metric, out, g.labels(), rows)
      .value_or(std::numeric_limits<double>::quiet_NaN());
}

struct Problem {
  const TrainConfig& cfg;
  std::span<const Graph> train;
  std::vector<std::vector<int>> train_rows;
  bool allow_isolated;
};

double weight_norm2(const std::vector<Matrix>& ws) {
  double total = 0.0;
  for (const auto& w : ws) {
    total += w.squaredNorm();
  }
  return total;
}

/// Risks of every (graph, view) operator pair, graph-major.
RiskVector risks_on(Tape& tape, const Problem& pb, const ModelParams& p,
                    std::span<const Var> w,
                    const std::vector<std::vector<std::shared_ptr<const SparseMatrix>>>& ops) {
  RiskVector rv;
  for (std::size_t gi = 0; gi < pb.train.size(); ++gi) {
    const Graph& g = pb.train[gi];
    const Var x = tape.constant(g.features());
    for (std::size_t k = 0; k < ops[gi].size(); ++k) {
      StandardizeMode mode;
      mode.rows = pb.train_rows[gi];
      const Var out = forward(p, w, ops[gi][k], x, mode);
      rv.risks.push_back(env_risk(out, g, pb.train_rows[gi], pb.cfg.loss));
      rv.view_ids.push_back(static_cast<int>(k));
    }
  }
  return rv;
}

struct Evaluation {
  double objective = 0.0;  // J2 (or mean risk for ERM) + weight decay term
  double j1 = 0.0;
  double j2 = 0.0;
  std::vector<double> risks;
  std::vector<Matrix> grads;
};

Evaluation evaluate_objective(const Problem& pb, const ModelParams& p, bool eerm,
                              const std::vector<std::vector<std::shared_ptr<const SparseMatrix>>>& ops,
                              bool with_grad) {
  Tape tape;
  std::vector<Var> w;
  for (const auto& m : p.weights) {
    w.push_back(with_grad ? tape.leaf(m) : tape.constant(m));
  }
  const RiskVector rv = risks_on(tape, pb, p, w, ops);
  const Var j1 = variance_risk(rv);
  const Var j2 = eerm ? eerm_loss(rv, pb.cfg.beta) : ad::mean_of_scalars(rv.risks);
  Evaluation ev;
  ev.j1 = j1.scalar();
  ev.j2 = j2.scalar();
  ev.risks = rv.values();
  ev.objective = ev.j2 + 0.5 * pb.cfg.weight_decay * weight_norm2(p.weights);
  if (with_grad) {
    tape.backward(j2);
    for (std::size_t i = 0; i < w.size(); ++i) {
      ev.grads.push_back(w[i].grad() + pb.cfg.weight_decay * p.weights[i]);
    }
  }
  return ev;
}

void require_finite(const Evaluation& ev, int epoch) {
  for (std::size_t i = 0; i < ev.risks.size(); ++i) {
    if (!std::isfinite(ev.risks[i])) {
      throw NumericalError("non-finite risk at epoch " + std::to_string(epoch) + ", risk index " +
                           std::to_string(i));
    }
  }
  if (!std::isfinite(ev.j2)) {
    throw NumericalError("non-finite objective at epoch " + std::to_string(epoch));
  }
  for (const auto& g : ev.grads) {
    if (!g.allFinite()) {
      throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch));
    }
  }
}

/// Gradient step with the descent check; returns the step size taken (0 if
/// every probe failed to lower the objective).
double descend(const Problem& pb, ModelParams& p, bool eerm, const Evaluation& ev,
               const std::vector<std::vector<std::shared_ptr<const SparseMatrix>>>& ops) {
  double step = pb.cfg.alpha_f;
  for (int probe = 0;; ++probe) {
    ModelParams next = p;
    for (std::size_t i = 0; i < next.weights.size(); ++i) {
      next.weights[i] -= step * ev.grads[i];
    }
    if (pb.cfg.descent_probes == 0) {
      p = std::move(next);
      return step;
    }
    const double after = evaluate_objective(pb, next, eerm, ops, false).objective;
    if (std::isfinite(after) && after <= ev.objective) {
      p = std::move(next);
      return step;
    }
    if (probe == pb.cfg.descent_probes) {
      return 0.0;
    }
    step /= 10.0;
  }
}

TrainResult train_impl(const TrainConfig& cfg, std::span<const Graph> train,
                       std::span<const Graph> valid, bool eerm) {
  cfg.validate(eerm, train.size());
  const bool regression = train.front().is_regression();
  int classes = 1;
  for (const auto& g : train) {
    require(g.is_regression() == regression, "train: mixed regression/classification graphs");
    require(g.feature_dim() == train.front().feature_dim(), "train: feature widths differ");
    if (eerm) {
      require(g.num_nodes() == train.front().num_nodes(),
              "train_eerm: training graphs must share a node count");
    }
    if (!regression) {
      classes = std::max(classes, g.num_classes());
    }
  }
  for (const auto& g : valid) {
    require(g.feature_dim() == train.front().feature_dim(), "train: validation feature width");
    if (!regression) {
      classes = std::max(classes, g.num_classes());
    }
  }
  require(regression == (cfg.loss == LossKind::squared),
          "train: squared loss needs regression targets, cross-entropy needs labels");

  const bool allow_isolated = cfg.backbone == Backbone::linear_gcn;
  Problem pb{cfg, train, {}, allow_isolated};
  for (const auto& g : train) {
    pb.train_rows.push_back(mask_rows(g.mask("train", true)));
  }

  ModelShape shape;
  shape.backbone = cfg.backbone;
  shape.input_dim = train.front().feature_dim();
  shape.output_dim = regression ? 1 : classes;
  shape.hidden_dim = cfg.hidden_dim;
  shape.layers = cfg.layers;
  shape.standardize = cfg.standardize;
  ModelParams params = init_params(shape, derive_seed(cfg.seed, 1));

  TrainResult result;
  const int views = eerm ? cfg.K : 1;
  const bool editing = eerm && cfg.s > 0;
  if (editing) {
    for (int k = 0; k < views; ++k) {
      result.editors.emplace_back(k, train.front().num_nodes(), cfg.s, cfg.dense_cap);
    }
  }

  std::vector<std::shared_ptr<const SparseMatrix>> base_ops;
  for (const auto& g : train) {
    base_ops.push_back(propagation(cfg.backbone, g, allow_isolated));
  }

  auto with_stats = [&](ModelParams p) {
    if (p.standardize) {
      p.eval_stats = hidden_stats(p, train, pb.train_rows);
    }
    return p;
  };

  const bool select_best = cfg.selection == ModelSelection::best_valid && !valid.empty();
  ModelParams best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::uint64_t draw = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::vector<std::shared_ptr<const SparseMatrix>>> ops(train.size());
    Evaluation ev;
    for (int t = 0; t < cfg.T; ++t) {
      std::vector<EditSample> samples;
      for (std::size_t gi = 0; gi < train.size(); ++gi) {
        ops[gi].assign(static_cast<std::size_t>(views), base_ops[gi]);
      }
      if (editing) {
        for (int k = 0; k < views; ++k) {
          samples.push_back(sample_edits(result.editors[k], derive_seed(cfg.seed, 2, draw++)));
          for (std::size_t gi = 0; gi < train.size(); ++gi) {
            ops[gi][k] = propagation(cfg.backbone, materialize_view(train[gi], samples.back()),
                                     allow_isolated);
          }
        }
      }
      const bool last_round = t + 1 == cfg.T;
      ev = evaluate_objective(pb, params, eerm, ops, last_round);
      require_finite(ev, epoch);
      if (editing && cfg.train_editors) {
        for (int k = 0; k < views; ++k) {
          reinforce_step(result.editors[k], samples[k], ev.j1, cfg.alpha_g, cfg.reward_baseline);
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.j1 = ev.j1;
    rec.j2 = ev.j2;
    rec.view_risks = ev.risks;
    rec.train_risk =
        std::accumulate(ev.risks.begin(), ev.risks.end(), 0.0) / static_cast<double>(ev.risks.size());
    rec.step = descend(pb, params, eerm, ev, ops);
    rec.valid_metric = std::numeric_limits<double>::quiet_NaN();
    if (!valid.empty()) {
      const ModelParams snapshot = with_stats(params);
      double total = 0.0;
      for (const auto& g : valid) {
        total += score(snapshot, g, cfg.valid_metric, "valid", allow_isolated);
      }
      rec.valid_metric = total / static_cast<double>(valid.size());
      if (select_best && rec.valid_metric > best_score) {
        best_score = rec.valid_metric;
        best = snapshot;
        result.history.best_epoch = epoch;
      }
    }
    if (!select_best) {
      result.history.best_epoch = epoch;
    }
    rec.best_epoch = result.history.best_epoch;
    result.history.records.push_back(std::move(rec));
  }

  if (select_best && !best.weights.empty()) {
    result.params = std::move(best);
  } else {
    result.params = with_stats(params);
    result.history.best_epoch = cfg.epochs - 1;
  }
  return result;
}

}  // namespace

TrainResult train_eerm(const TrainConfig& cfg, std::span<const Graph> train,
                       std::span<const Graph> valid) {
  return train_impl(cfg, train, valid, true);
}

TrainResult train_erm(const TrainConfig& cfg, std::span<const Graph> train,
                      std::span<const Graph> valid) {
  return train_impl(cfg, train, valid, false);
}

double evaluate(const ModelParams& p, const Graph& g, Metric metric, const std::string& mask_name) {
  return score(p, g, metric, mask_name, p.backbone == Backbone::linear_gcn);
}

}  // namespace eerm

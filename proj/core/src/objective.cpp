#include "eerm/objective.hpp"

#include "eerm/errors.hpp"

namespace eerm {

std::string to_string(LossKind k) {
  return k == LossKind::cross_entropy ? "cross-entropy" : "squared";
}

LossKind loss_from_string(const std::string& s) {
  if (s == "cross-entropy") {
    return LossKind::cross_entropy;
  }
  if (s == "squared") {
    return LossKind::squared;
  }
  throw ContractError("unknown loss '" + s + "'");
}

Var env_risk(Var logits, const Graph& g, std::span<const int> rows, LossKind loss) {
  require(!rows.empty(), "env_risk: mask selects no nodes");
  require(logits.rows() == g.num_nodes(), "env_risk: logit rows != node count");
  if (loss == LossKind::cross_entropy) {
    require(!g.is_regression(), "env_risk: cross-entropy needs class labels");
    return ad::softmax_cross_entropy(logits, g.labels(), rows);
  }
  require(g.is_regression(), "env_risk: squared loss needs real-valued targets");
  require(logits.cols() == 1, "env_risk: squared loss expects one output column");
  return ad::squared_error(logits, g.targets(), rows);
}

Var env_risk(Var logits, const Graph& g, const NodeMask& mask, LossKind loss) {
  require(static_cast<int>(mask.size()) == g.num_nodes(), "env_risk: mask size != node count");
  const auto rows = mask_rows(mask);
  return env_risk(logits, g, rows, loss);
}

std::vector<double> RiskVector::values() const {
  std::vector<double> out;
  out.reserve(risks.size());
  for (const auto& r : risks) {
    out.push_back(r.scalar());
  }
  return out;
}

Var variance_risk(const RiskVector& rv) {
  require(!rv.risks.empty(), "variance_risk: no risks");
  return ad::variance_of_scalars(rv.risks);
}

Var eerm_loss(const RiskVector& rv, double beta) {
  require(beta >= 0.0, "eerm_loss: beta must be non-negative");
  Var var = variance_risk(rv);
  if (beta == 0.0) {
    return var;
  }
  // (beta / K) * sum == beta * mean
  return ad::add(var, ad::scale(ad::mean_of_scalars(rv.risks), beta));
}

}  // namespace eerm

#pragma once

#include <span>
#include <string>
#include <vector>

#include "eerm/autodiff.hpp"
#include "eerm/graph.hpp"

namespace eerm {

enum class LossKind { cross_entropy, squared };

std::string to_string(LossKind k);
LossKind loss_from_string(const std::string& s);

/// Mean loss over `rows` of `g`: cross-entropy against g.labels() or squared
/// error against g.targets().
Var env_risk(Var logits, const Graph& g, std::span<const int> rows, LossKind loss);
Var env_risk(Var logits, const Graph& g, const NodeMask& mask, LossKind loss);

/// One risk per view (or per (graph, view) pair in multi-graph training).
struct RiskVector {
  std::vector<Var> risks;
  std::vector<int> view_ids;

  std::size_t size() const { return risks.size(); }
  std::vector<double> values() const;
};

/// Population variance of the risks.
Var variance_risk(const RiskVector& rv);
/// variance_risk + (beta / K) * sum of risks.
Var eerm_loss(const RiskVector& rv, double beta);

}  // namespace eerm

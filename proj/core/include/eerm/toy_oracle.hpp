#pragma once

#include <array>
#include <vector>

#include "eerm/env_suite.hpp"

namespace eerm {

enum class ToyObjective { erm, variance };

struct ToyOptimum {
  std::array<double, 2> theta{};
  ToyObjective objective = ToyObjective::erm;
  double sigma_e = 0.0;  // erm only
};

/// Mean-risk minimizer [(1 + s^2) / (2 + s^2), 1 / (2 + s^2)], s = sigma_e.
ToyOptimum erm_optimum(double sigma_e);
/// Variance minimizer (1, 0).
ToyOptimum variance_optimum();

struct ThetaGrid {
  double lo = -0.5;
  double hi = 1.5;
  double step = 0.01;

  int points() const;
  double at(int i) const;
};

struct RiskSurface {
  ThetaGrid grid;
  /// Row i, column j: theta = (grid.at(i), grid.at(j)).
  Matrix mean_risk;
  Matrix risk_variance;

  std::array<double, 2> argmin_mean() const;
  /// Ties (the variance is flat wherever theta_2 = 0 and the invariant block
  /// is shared) are broken by the lower mean risk.
  std::array<double, 2> argmin_variance() const;
};

/// Per-environment risk of the linear toy predictor at one theta, pooled over
/// every environment of a toy suite (roles ignored).
std::vector<double> toy_env_risks(const EnvSuite& suite, double theta1, double theta2);

/// Mean and population variance across environments of the toy risk at every
/// grid point. Each environment's risk is a quadratic in theta, so six
/// sufficient statistics per environment cover the whole grid.
RiskSurface empirical_risk_surface(const ThetaGrid& grid, const EnvSuite& suite);

}  // namespace eerm

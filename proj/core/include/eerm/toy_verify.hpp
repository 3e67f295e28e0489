#pragma once

#include <array>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace eerm {

/// Trainer runs on toy suites compared against the closed-form optima.
struct ToyVerifySettings {
  std::vector<double> sigma2 = {0.5, 1.0, 2.0};
  int seeds = 5;
  int nodes = 2000;
  int n_envs = 10;
  double tolerance = 0.05;

  int erm_epochs = 300;
  double erm_alpha_f = 1.0;

  /// Variance objective over the true environments (K = 1, no edits).
  double variance_sigma2 = 2.0;
  int variance_epochs = 1000;
  double variance_alpha_f = 400.0;
  double variance_beta = 1e-4;

  /// Full EERM with editors on the same suites.
  bool editors = true;
  int editor_K = 3;
  int editor_s = 1;
  int editor_epochs = 150;
  double editor_alpha_f = 400.0;
  double editor_beta = 2e-3;
  double editor_alpha_g = 0.005;
  /// Stop the editor runs at the first seed outside tolerance.
  bool editor_stop_on_fail = true;

  /// Grid-search oracle on a large Monte-Carlo suite.
  bool surface = true;
  int surface_envs = 50;
};

struct ToyCheck {
  /// erm | variance | eerm-editors | surface-mean | surface-variance
  std::string kind;
  double sigma2 = 0.0;
  int seed = 0;
  std::array<double, 2> expected{};
  std::array<double, 2> got{};
  /// L-infinity distance between got and expected.
  double distance = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;

  bool pass() const { return distance < tolerance; }
};

std::vector<ToyCheck> verify_toy(const ToyVerifySettings& s);

/// Fixed-width pass/fail table, one row per check.
void write_toy_table(std::ostream& out, std::span<const ToyCheck> checks);

}  // namespace eerm

#include "eerm/toy_verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "eerm/errors.hpp"
#include "eerm/synth.hpp"
#include "eerm/toy_oracle.hpp"
#include "eerm/trainer.hpp"

namespace eerm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double linf(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
}

TrainConfig toy_train_config(int seed) {
  TrainConfig c;
  c.backbone = Backbone::linear_gcn;
  c.loss = LossKind::squared;
  c.selection = ModelSelection::last;
  c.weight_decay = 0.0;
  c.seed = static_cast<std::uint64_t>(seed);
  return c;
}

ToySuite toy_suite(const ToyVerifySettings& s, double sigma2, int seed, int n_envs) {
  ToyRecipe r;
  r.sigma_e = std::sqrt(sigma2);
  r.n_envs = n_envs;
  r.seed = static_cast<std::uint64_t>(seed);
  return gen_toy(perfect_matching_graph(s.nodes), r);
}

ToyCheck make_check(std::string kind, double sigma2, int seed, std::array<double, 2> expected,
                    const Matrix& theta, double tol, double secs) {
  ToyCheck c;
  c.kind = std::move(kind);
  c.sigma2 = sigma2;
  c.seed = seed;
  c.expected = expected;
  c.got = {theta(0, 0), theta(1, 0)};
  c.distance = linf(c.got, expected);
  c.tolerance = tol;
  c.seconds = secs;
  return c;
}

}  // namespace

std::vector<ToyCheck> verify_toy(const ToyVerifySettings& s) {
  require(s.seeds >= 1 && s.nodes >= 2 && s.n_envs >= 2, "verify_toy: bad settings");
  std::vector<ToyCheck> out;
  const std::vector<Graph> none;

  for (double sigma2 : s.sigma2) {
    const auto opt = erm_optimum(std::sqrt(sigma2));
    for (int seed = 0; seed < s.seeds; ++seed) {
      const auto t0 = Clock::now();
      const auto toy = toy_suite(s, sigma2, seed, s.n_envs);
      TrainConfig c = toy_train_config(seed);
      c.epochs = s.erm_epochs;
      c.alpha_f = s.erm_alpha_f;
      const auto res = train_erm(c, toy.suite.graphs_with_role(EnvRole::train), none);
      out.push_back(make_check("erm", sigma2, seed, opt.theta, res.params.weights[0],
                               s.tolerance, seconds_since(t0)));
    }
  }

  const auto var_opt = variance_optimum();
  for (int seed = 0; seed < s.seeds; ++seed) {
    const auto t0 = Clock::now();
    const auto toy = toy_suite(s, s.variance_sigma2, seed, s.n_envs);
    TrainConfig c = toy_train_config(seed);
    c.K = 1;
    c.s = 0;
    c.epochs = s.variance_epochs;
    c.alpha_f = s.variance_alpha_f;
    c.beta = s.variance_beta;
    const auto res = train_eerm(c, toy.suite.graphs_with_role(EnvRole::train), none);
    out.push_back(make_check("variance", s.variance_sigma2, seed, var_opt.theta,
                             res.params.weights[0], s.tolerance, seconds_since(t0)));
  }

  if (s.editors) {
    for (int seed = 0; seed < s.seeds; ++seed) {
      const auto t0 = Clock::now();
      const auto toy = toy_suite(s, s.variance_sigma2, seed, s.n_envs);
      TrainConfig c = toy_train_config(seed);
      c.K = s.editor_K;
      c.s = s.editor_s;
      c.epochs = s.editor_epochs;
      c.alpha_f = s.editor_alpha_f;
      c.alpha_g = s.editor_alpha_g;
      c.beta = s.editor_beta;
      const auto res = train_eerm(c, toy.suite.graphs_with_role(EnvRole::train), none);
      out.push_back(make_check("eerm-editors", s.variance_sigma2, seed, var_opt.theta,
                               res.params.weights[0], s.tolerance, seconds_since(t0)));
      if (s.editor_stop_on_fail && !out.back().pass()) {
        break;
      }
    }
  }

  if (s.surface) {
    const auto t0 = Clock::now();
    const auto toy = toy_suite(s, s.variance_sigma2, 0, s.surface_envs);
    const auto surface = empirical_risk_surface(ThetaGrid{}, toy.suite);
    const double secs = seconds_since(t0);
    const auto opt = erm_optimum(std::sqrt(s.variance_sigma2));
    for (const auto& [kind, expected, got] :
         {std::tuple{"surface-mean", opt.theta, surface.argmin_mean()},
          std::tuple{"surface-variance", var_opt.theta, surface.argmin_variance()}}) {
      ToyCheck c;
      c.kind = kind;
      c.sigma2 = s.variance_sigma2;
      c.expected = expected;
      c.got = got;
      c.distance = linf(got, expected);
      c.tolerance = s.tolerance;
      c.seconds = secs;
      out.push_back(c);
    }
  }
  return out;
}

void write_toy_table(std::ostream& out, std::span<const ToyCheck> checks) {
  char line[160];
  std::snprintf(line, sizeof line, "%-17s %6s %4s %17s %17s %8s %6s %8s\n", "check", "sigma2",
                "seed", "expected", "got", "linf", "result", "seconds");
  out << line;
  for (const auto& c : checks) {
    std::snprintf(line, sizeof line,
                  "%-17s %6.2f %4d  (%6.3f, %6.3f)  (%6.3f, %6.3f) %8.4f %6s %8.2f\n",
                  c.kind.c_str(), c.sigma2, c.seed, c.expected[0], c.expected[1], c.got[0],
                  c.got[1], c.distance, c.pass() ? "pass" : "FAIL", c.seconds);
    out << line;
  }
}

}  // namespace eerm

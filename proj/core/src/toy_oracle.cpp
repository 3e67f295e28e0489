#include "eerm/toy_oracle.hpp"

#include <cmath>

#include "eerm/errors.hpp"

namespace eerm {

ToyOptimum erm_optimum(double sigma_e) {
  require(sigma_e > 0.0 && std::isfinite(sigma_e), "erm_optimum: sigma_e must be positive");
  const double s2 = sigma_e * sigma_e;
  const double theta2 = 1.0 / (2.0 + s2);
  return {{1.0 - theta2, theta2}, ToyObjective::erm, sigma_e};
}

ToyOptimum variance_optimum() { return {{1.0, 0.0}, ToyObjective::variance, 0.0}; }

int ThetaGrid::points() const {
  require(step > 0.0 && hi >= lo && std::isfinite(lo) && std::isfinite(hi),
          "theta grid: need finite lo <= hi and step > 0");
  return static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

double ThetaGrid::at(int i) const { return lo + step * i; }

namespace {

/// R(theta) = a11 t1^2 + a22 t2^2 + 2 a12 t1 t2 - 2 b1 t1 - 2 b2 t2 + c,
/// all terms averaged over the environment's nodes.
struct Quadratic {
  double a11 = 0, a22 = 0, a12 = 0, b1 = 0, b2 = 0, c = 0;

  double at(double t1, double t2) const {
    return a11 * t1 * t1 + a22 * t2 * t2 + 2.0 * a12 * t1 * t2 - 2.0 * b1 * t1 - 2.0 * b2 * t2 + c;
  }
};

Quadratic env_quadratic(const Graph& g) {
  require(g.is_regression() && g.feature_dim() == 2,
          "toy oracle: expects 2-feature regression graphs");
  const SparseMatrix m = mean_aggregation(g);
  const Matrix z = m * g.features();  // neighborhood means of x1, x2
  const Vector& y = g.targets();
  const double n = static_cast<double>(g.num_nodes());
  Quadratic q;
  q.a11 = z.col(0).squaredNorm() / n;
  q.a22 = z.col(1).squaredNorm() / n;
  q.a12 = z.col(0).dot(z.col(1)) / n;
  q.b1 = z.col(0).dot(y) / n;
  q.b2 = z.col(1).dot(y) / n;
  q.c = y.squaredNorm() / n;
  return q;
}

std::array<double, 2> argmin(const ThetaGrid& grid, const Matrix& primary, const Matrix* tie) {
  Eigen::Index bi = 0, bj = 0;
  for (Eigen::Index i = 0; i < primary.rows(); ++i) {
    for (Eigen::Index j = 0; j < primary.cols(); ++j) {
      const double v = primary(i, j);
      const double best = primary(bi, bj);
      // Relative tolerance: values equal up to rounding count as ties.
      const double tol = 1e-12 * std::max(1.0, std::abs(best));
      if (v < best - tol || (tie && std::abs(v - best) <= tol && (*tie)(i, j) < (*tie)(bi, bj))) {
        bi = i;
        bj = j;
      }
    }
  }
  return {grid.at(static_cast<int>(bi)), grid.at(static_cast<int>(bj))};
}

}  // namespace

std::array<double, 2> RiskSurface::argmin_mean() const { return argmin(grid, mean_risk, nullptr); }

std::array<double, 2> RiskSurface::argmin_variance() const {
  return argmin(grid, risk_variance, &mean_risk);
}

std::vector<double> toy_env_risks(const EnvSuite& suite, double theta1, double theta2) {
  std::vector<double> out;
  for (const auto& e : suite.envs()) {
    out.push_back(env_quadratic(e.graph).at(theta1, theta2));
  }
  return out;
}

RiskSurface empirical_risk_surface(const ThetaGrid& grid, const EnvSuite& suite) {
  const int n = grid.points();
  std::vector<Quadratic> qs;
  for (const auto& e : suite.envs()) {
    qs.push_back(env_quadratic(e.graph));
  }
  const double k = static_cast<double>(qs.size());
  RiskSurface surface{grid, Matrix(n, n), Matrix(n, n)};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double t1 = grid.at(i);
      const double t2 = grid.at(j);
      double sum = 0.0;
      for (const auto& q : qs) {
        sum += q.at(t1, t2);
      }
      const double mean = sum / k;
      double ss = 0.0;
      for (const auto& q : qs) {
        const double d = q.at(t1, t2) - mean;
        ss += d * d;
      }
      surface.mean_risk(i, j) = mean;
      surface.risk_variance(i, j) = ss / k;
    }
  }
  return surface;
}

}  // namespace eerm

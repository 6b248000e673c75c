#pragma once

// Independent reference computations used to freeze and check expected
// values. None of these share code paths with the library.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace oracle {

/// Textbook single-pass correlation from raw sums.
inline double pearson_sums(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

/// Student-t upper tail by composite Simpson quadrature of the density.
inline double t_upper_tail(double t, double df, int intervals = 200000) {
  const double norm = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
                      std::sqrt(df * std::numbers::pi);
  auto pdf = [&](double x) { return norm * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const double a = 0.0;
  const double b = std::abs(t);
  const double h = (b - a) / intervals;
  double sum = pdf(a) + pdf(b);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 ? 4 : 2) * pdf(a + i * h);
  const double mass = sum * h / 3;  // P(0 < T < |t|)
  return t >= 0 ? 0.5 - mass : 0.5 + mass;
}

struct LeastSquares {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  int iterations = 0;
};

/// Unpenalized least squares with intercept, min ||A w + b - y||^2, by plain
/// gradient descent with step 1/L (L from power iteration on the augmented
/// Gram matrix), run until the gradient is negligible.
inline LeastSquares gradient_descent_ls(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                                        int max_iterations = 2000000) {
  const Eigen::Index n = a.rows();
  const Eigen::Index d = a.cols();
  Eigen::MatrixXd aug(n, d + 1);
  aug.leftCols(d) = a;
  aug.col(d).setOnes();
  const Eigen::MatrixXd gram = aug.transpose() * aug;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d + 1);
  double lmax = 0.0;
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd next = gram * v;
    lmax = next.norm() / v.norm();
    v = next / next.norm();
  }
  const double step = 1.0 / (lmax * 1.01);
  const Eigen::VectorXd aty = aug.transpose() * y;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  const double g0 = aty.norm();
  LeastSquares out;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd grad = gram * theta - aty;
    out.iterations = it;
    if (grad.norm() <= 1e-14 * std::max(1.0, g0)) break;
    theta -= step * grad;
  }
  out.weights = theta.head(d);
  out.intercept = theta(d);
  return out;
}

}  // namespace oracle

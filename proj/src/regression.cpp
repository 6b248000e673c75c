#include "brainscore/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace brainscore {

std::vector<double> default_lambda_grid() { return {1e-3, 1e-1, 1e1, 1e3, 1e5}; }

Standardizer Standardizer::fit(const Matrix& x, const RidgeOptions& options) {
  Standardizer st;
  const Index d = x.cols();
  const double n = static_cast<double>(x.rows());
  st.mean = x.colwise().mean().transpose();
  st.scale = Vector::Ones(d);
  st.active.assign(static_cast<std::size_t>(d), true);
  for (Index j = 0; j < d; ++j) {
    const double var = (x.col(j).array() - st.mean(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    const double magnitude = std::max(1.0, x.col(j).cwiseAbs().maxCoeff());
    if (!(sd > 1e-12 * magnitude)) {
      st.active[static_cast<std::size_t>(j)] = false;
      continue;
    }
    if (options.scale_columns) st.scale(j) = sd;
  }
  return st;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  for (Index j = 0; j < out.cols(); ++j) {
    if (!active[static_cast<std::size_t>(j)]) out.col(j).setZero();
  }
  return out;
}

Matrix RidgeFit::predict(const Matrix& x) const {
  Standardizer st{x_mean, x_scale, {}};
  // Inactive columns carry zero weight, so their standardized values never matter.
  st.active.assign(static_cast<std::size_t>(x_mean.size()), true);
  return (st.apply(x) * weights).rowwise() + intercept.transpose();
}

Matrix RidgeFit::original_weights() const {
  return weights.array().colwise() / x_scale.array();
}

Vector RidgeFit::original_intercept() const {
  return intercept - original_weights().transpose() * x_mean;
}

RidgeSolver::RidgeSolver(const Matrix& x, const Matrix& y, const RidgeOptions& options)
    : n_(x.rows()) {
  if (x.rows() != y.rows()) {
    throw InputError("ridge: design has " + std::to_string(x.rows()) + " rows but targets have " +
                     std::to_string(y.rows()));
  }
  if (x.rows() < 2) throw InputError("ridge: need at least 2 rows");
  if (!x.allFinite() || !y.allFinite()) throw InputError("ridge: non-finite input");

  standardizer_ = Standardizer::fit(x, options);
  const Matrix xs = standardizer_.apply(x);
  y_mean_ = y.colwise().mean().transpose();
  centered_y_ = y.rowwise() - y_mean_.transpose();

  Eigen::BDCSVD<Matrix> svd(xs, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double tol = s.size() > 0 ? s(0) * static_cast<double>(std::max(x.rows(), x.cols())) *
                                        std::numeric_limits<double>::epsilon()
                                  : 0.0;
  Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  s_ = s.head(rank);
  u_ = svd.matrixU().leftCols(rank);
  v_ = svd.matrixV().leftCols(rank);
  uty_ = u_.transpose() * centered_y_;
}

RidgeFit RidgeSolver::fit(double lambda) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InputError("ridge: lambda must be >= 0, got " + shortest(lambda));
  }
  const Vector shrink = s_.array() / (s_.array().square() + lambda);
  RidgeFit fit;
  fit.weights = v_ * (shrink.asDiagonal() * uty_);
  for (Index j = 0; j < fit.weights.rows(); ++j) {
    if (!standardizer_.active[static_cast<std::size_t>(j)]) fit.weights.row(j).setZero();
  }
  fit.intercept = y_mean_;
  fit.lambda = lambda;
  fit.x_mean = standardizer_.mean;
  fit.x_scale = standardizer_.scale;
  return fit;
}

double RidgeSolver::group_cv_error(double lambda,
                                   const std::vector<std::vector<Index>>& groups) const {
  // Hat matrix of the smoother: H = 11'/n + U diag(s^2/(s^2+lambda)) U'.
  // Held-out residuals of group g: (I - H_gg)^{-1} e_g.
  const Vector filter = s_.array().square() / (s_.array().square() + lambda);
  const Matrix residuals = centered_y_ - u_ * (filter.asDiagonal() * uty_);
  const double inv_n = 1.0 / static_cast<double>(n_);
  double total = 0.0;
  Index counted = 0;
  for (const auto& group : groups) {
    const auto m = static_cast<Index>(group.size());
    Matrix ug(m, u_.cols());
    Matrix eg(m, residuals.cols());
    for (Index i = 0; i < m; ++i) {
      ug.row(i) = u_.row(group[i]);
      eg.row(i) = residuals.row(group[i]);
    }
    Matrix block = -(ug * filter.asDiagonal() * ug.transpose());
    block.array() -= inv_n;
    block.diagonal().array() += 1.0;
    Eigen::FullPivLU<Matrix> lu(block);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
    total += lu.solve(eg).squaredNorm();
    counted += m;
  }
  if (counted == 0) return std::numeric_limits<double>::infinity();
  return total / static_cast<double>(counted * residuals.cols());
}

RidgeFit fit_ridge(const Matrix& x, const Matrix& y, double lambda, const RidgeOptions& options) {
  if (!(lambda >= 0.0)) throw InputError("ridge: lambda must be >= 0, got " + shortest(lambda));
  return RidgeSolver(x, y, options).fit(lambda);
}

std::vector<Index> CvPlan::rows_in(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < fold_assignment.size(); ++i) {
    if (fold_assignment[i] == fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

CvPlan kfold_split(std::span<const std::string> scenario_ids, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw InputError("cross-validation needs at least 2 folds");
  std::vector<std::string> distinct;
  std::map<std::string, std::size_t> position;
  for (const auto& id : scenario_ids) {
    if (position.emplace(id, distinct.size()).second) distinct.push_back(id);
  }
  if (static_cast<std::size_t>(n_folds) > distinct.size()) {
    throw InputError("cannot split " + std::to_string(distinct.size()) + " scenarios into " +
                     std::to_string(n_folds) + " folds");
  }
  std::vector<std::size_t> order(distinct.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(distinct.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    fold_of[order[k]] = static_cast<int>(k % static_cast<std::size_t>(n_folds));
  }

  CvPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.fold_assignment.reserve(scenario_ids.size());
  for (const auto& id : scenario_ids) plan.fold_assignment.push_back(fold_of[position.at(id)]);
  return plan;
}

CvResult fit_cv_predict(const DesignPair& design, const CvPlan& plan,
                        std::span<const double> lambda_grid, const RidgeOptions& options) {
  if (lambda_grid.empty()) throw InputError("lambda grid is empty");
  for (double l : lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw InputError("lambda grid values must be >= 0");
  }
  if (plan.fold_assignment.size() != design.row_ids.size() ||
      design.x.rows() != design.y.rows() || design.x.rows() != design.rows()) {
    throw InputError("CV plan does not match the design rows");
  }
  std::vector<double> grid(lambda_grid.begin(), lambda_grid.end());
  std::sort(grid.begin(), grid.end(), std::greater<>());

  CvResult result;
  result.predictions = Matrix::Zero(design.y.rows(), design.y.cols());
  std::vector<int> filled(static_cast<std::size_t>(design.rows()), 0);

  for (int fold = 0; fold < plan.n_folds; ++fold) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (Index i = 0; i < design.rows(); ++i) {
      (plan.fold_assignment[static_cast<std::size_t>(i)] == fold ? test : train).push_back(i);
    }
    if (test.empty()) throw InputError("fold " + std::to_string(fold) + " is empty");

    // Inner groups: training rows of each scenario, in training-row coordinates.
    std::map<std::string, std::vector<Index>> by_scenario;
    for (std::size_t k = 0; k < train.size(); ++k) {
      by_scenario[design.row_ids[static_cast<std::size_t>(train[k])].scenario_id].push_back(
          static_cast<Index>(k));
    }
    if (by_scenario.size() < 2) {
      throw InputError("fold " + std::to_string(fold) +
                       ": training split has fewer than 2 scenarios");
    }
    std::vector<std::vector<Index>> groups;
    for (auto& [id, rows] : by_scenario) groups.push_back(std::move(rows));

    const Matrix x_train = design.x(train, Eigen::all);
    const Matrix y_train = design.y(train, Eigen::all);
    const RidgeSolver solver(x_train, y_train, options);

    double chosen = grid.front();
    if (grid.size() > 1) {
      double best = solver.group_cv_error(grid.front(), groups);
      for (std::size_t k = 1; k < grid.size(); ++k) {
        const double err = solver.group_cv_error(grid[k], groups);
        if (err < best * (1.0 - 1e-12)) {
          best = err;
          chosen = grid[k];
        }
      }
    }
    result.selected_lambda.push_back(chosen);

    const RidgeFit fit = solver.fit(chosen);
    const Matrix pred = fit.predict(design.x(test, Eigen::all));
    for (std::size_t k = 0; k < test.size(); ++k) {
      result.predictions.row(test[k]) = pred.row(static_cast<Index>(k));
      ++filled[static_cast<std::size_t>(test[k])];
    }
  }
  for (int count : filled) {
    if (count != 1) throw InputError("CV plan does not assign every row to exactly one fold");
  }
  return result;
}

}  // namespace brainscore

#pragma once

// Cross-validated ridge encoding models: activation rows -> parcel responses.

#include "brainscore/common.hpp"
#include "brainscore/sampling.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace brainscore {

/// {1e-3, 1e-1, 1e1, 1e3, 1e5}, in standardized-feature units.
std::vector<double> default_lambda_grid();

struct RidgeOptions {
  /// Divide centered columns by their standard deviation. Centering always
  /// happens since the intercept is unpenalized.
  bool scale_columns = true;
};

/// Column centering/scaling learned on a training design. Zero-variance
/// columns are inactive: they map to zero and get zero weight.
struct Standardizer {
  Vector mean;
  Vector scale;  // > 0; 1 for inactive columns
  std::vector<bool> active;

  static Standardizer fit(const Matrix& x, const RidgeOptions& options);
  Matrix apply(const Matrix& x) const;
};

struct RidgeFit {
  Matrix weights;    // [hidden_dim x n_parcels], standardized feature units
  Vector intercept;  // [n_parcels]
  double lambda = 0.0;
  Vector x_mean;
  Vector x_scale;

  Matrix predict(const Matrix& x) const;
  /// Weights and intercept expressed on the raw (unstandardized) columns.
  Matrix original_weights() const;
  Vector original_intercept() const;
};

/// Ridge on a fixed training design, factorized once (thin SVD of the
/// standardized design) so any number of penalties are cheap to evaluate.
class RidgeSolver {
 public:
  RidgeSolver(const Matrix& x, const Matrix& y, const RidgeOptions& options = {});

  /// argmin_{W,b} ||Xs W + 1 b' - Y||^2 + lambda ||W||^2
  RidgeFit fit(double lambda) const;

  /// Exact leave-one-group-out mean squared error for this penalty, with the
  /// standardization held fixed at the full training design. Groups partition
  /// the training rows. Returns +inf if some held-out block is unidentifiable.
  double group_cv_error(double lambda, const std::vector<std::vector<Index>>& groups) const;

  Index rows() const { return n_; }

 private:
  Index n_ = 0;
  Standardizer standardizer_;
  Vector y_mean_;
  Matrix u_;          // [n x r]
  Vector s_;          // [r]
  Matrix v_;          // [d x r]
  Matrix uty_;        // U' (Y - mean): [r x n_parcels]
  Matrix centered_y_; // [n x n_parcels]
};

RidgeFit fit_ridge(const Matrix& x, const Matrix& y, double lambda,
                   const RidgeOptions& options = {});

/// Fold assignment for grouped K-fold CV. Rows sharing a scenario share a fold.
struct CvPlan {
  int n_folds = 5;
  std::vector<int> fold_assignment;  // one fold id per design row
  std::uint64_t seed = 0;

  std::vector<Index> rows_in(int fold) const;
};

/// Scenarios are shuffled under `seed` and dealt round-robin to folds, so
/// fold sizes differ by at most one scenario.
CvPlan kfold_split(std::span<const std::string> scenario_ids, int n_folds, std::uint64_t seed);

struct CvResult {
  Matrix predictions;                  // out-of-fold, same shape as design.y
  std::vector<double> selected_lambda; // one per fold
};

/// Per fold: pick lambda by inner leave-one-scenario-out error on the training
/// rows (ties go to the larger lambda), refit on the training rows, predict
/// the held-out rows.
CvResult fit_cv_predict(const DesignPair& design, const CvPlan& plan,
                        std::span<const double> lambda_grid, const RidgeOptions& options = {});

}  // namespace brainscore

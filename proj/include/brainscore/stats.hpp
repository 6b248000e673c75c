#pragma once

// Condition comparisons (pre-trained vs fine-tuned) over ROI-restricted
// layer scores: paired one-tailed t tests with Bonferroni correction, plus a
// permutation null for calibrating score magnitudes.

#include "brainscore/dataio.hpp"
#include "brainscore/regression.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace brainscore {

/// I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T > t) for Student's t with `df` degrees of freedom.
double student_t_upper_tail(double t, double df);

struct TTestResult {
  double t = 0.0;
  double p = 0.5;
};

/// Paired test of tuned > base over differences tuned - base, n - 1 df.
/// Zero spread: p = 0 if mean > 0, 1 if mean < 0, 0.5 if all differences are 0.
TTestResult paired_one_tailed_t(std::span<const double> base, std::span<const double> tuned);

/// min(1, m p)
double bonferroni(double p, int m);

struct ComparisonResult {
  std::string roi_set;
  int n_pairs = 0;
  double mean_diff = 0.0;
  double t_stat = 0.0;
  double p_one_tailed = 0.5;
  double p_adjusted = 1.0;
  bool significant = false;
};

/// One test per term map; pairs are per-(subject, layer) rows of that term's
/// roi_set, matched across the two tables. m = terms.size().
std::vector<ComparisonResult> compare_conditions(const ScoreTable& base, const ScoreTable& tuned,
                                                 std::span<const TermMap> terms, double alpha);

std::string format_comparison(std::span<const ComparisonResult> results);

/// Copy of the design with target rows shuffled within each fold.
DesignPair permute_within_folds(const DesignPair& design, const CvPlan& plan, std::uint64_t seed);

/// Layer scores (mean parcel PCC) after permuting targets; permutation k uses
/// seed + k.
std::vector<double> permutation_null(const DesignPair& design, const CvPlan& plan, int n_perm,
                                     std::uint64_t seed,
                                     std::span<const double> lambda_grid = default_lambda_grid());

}  // namespace brainscore

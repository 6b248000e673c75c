#include "brainscore/stats.hpp"

#include "brainscore/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <tuple>

namespace brainscore {

namespace {

// Lentz's method for the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InputError("incomplete beta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InputError("incomplete beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_upper_tail(double t, double df) {
  if (!(df > 0.0)) throw InputError("student t: df must be > 0");
  if (std::isnan(t)) throw InputError("student t: t is NaN");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return t >= 0.0 ? tail : 1.0 - tail;
}

TTestResult paired_one_tailed_t(std::span<const double> base, std::span<const double> tuned) {
  if (base.size() != tuned.size()) {
    throw InputError("paired t: " + std::to_string(base.size()) + " base scores vs " +
                     std::to_string(tuned.size()) + " tuned scores");
  }
  if (base.size() < 2) throw InputError("paired t: need at least 2 pairs");
  const auto n = static_cast<double>(base.size());
  std::vector<double> diff(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) diff[i] = tuned[i] - base[i];
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= n;
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  TTestResult r;
  if (sd == 0.0) {
    if (mean > 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
    if (mean < 0.0) return {-std::numeric_limits<double>::infinity(), 1.0};
    return {0.0, 0.5};
  }
  r.t = mean / (sd / std::sqrt(n));
  r.p = student_t_upper_tail(r.t, n - 1.0);
  return r;
}

double bonferroni(double p, int m) {
  if (m < 1) throw InputError("bonferroni: m must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("bonferroni: p must lie in [0, 1]");
  return std::min(1.0, static_cast<double>(m) * p);
}

std::vector<ComparisonResult> compare_conditions(const ScoreTable& base, const ScoreTable& tuned,
                                                 std::span<const TermMap> terms, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (base.metric != tuned.metric) {
    throw InputError("cannot compare a " + to_string(base.metric) + " table with a " +
                     to_string(tuned.metric) + " table");
  }
  if (terms.empty()) throw InputError("compare needs at least one term map");

  using Key = std::tuple<std::string, int>;
  auto collect = [](const ScoreTable& table, const std::string& roi, const char* which) {
    std::map<Key, double> out;
    for (const auto& row : table.rows) {
      if (row.roi_set != roi || row.layer == kAllLayers || row.subject_id == kAllSubjects) continue;
      if (!out.emplace(Key{row.subject_id, row.layer}, row.score_mean).second) {
        throw InputError(std::string(which) + " table has duplicate rows for subject '" +
                         row.subject_id + "', layer " + std::to_string(row.layer) + ", roi '" +
                         roi + "'");
      }
    }
    return out;
  };

  const int m = static_cast<int>(terms.size());
  std::vector<ComparisonResult> results;
  for (const auto& term : terms) {
    const auto b = collect(base, term.term, "base");
    const auto t = collect(tuned, term.term, "tuned");
    if (b.empty()) throw InputError("no rows for roi_set '" + term.term + "' in base table");
    std::vector<double> bv;
    std::vector<double> tv;
    for (const auto& [key, value] : b) {
      const auto it = t.find(key);
      if (it == t.end()) {
        throw InputError("key mismatch: subject '" + std::get<0>(key) + "', layer " +
                         std::to_string(std::get<1>(key)) + ", roi '" + term.term +
                         "' missing from tuned table");
      }
      bv.push_back(value);
      tv.push_back(it->second);
    }
    if (t.size() != b.size()) {
      throw InputError("key mismatch: tuned table has rows for roi '" + term.term +
                       "' that the base table lacks");
    }
    const auto test = paired_one_tailed_t(bv, tv);
    ComparisonResult r;
    r.roi_set = term.term;
    r.n_pairs = static_cast<int>(bv.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < bv.size(); ++i) sum += tv[i] - bv[i];
    r.mean_diff = sum / static_cast<double>(bv.size());
    r.t_stat = test.t;
    r.p_one_tailed = test.p;
    r.p_adjusted = bonferroni(test.p, m);
    r.significant = r.p_adjusted < alpha && r.mean_diff > 0.0;
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_comparison(std::span<const ComparisonResult> results) {
  std::string out = "roi_set\tn_pairs\tmean_diff\tt\tp\tp_adj\tsignificant\n";
  for (const auto& r : results) {
    out += r.roi_set + '\t' + std::to_string(r.n_pairs) + '\t' + fixed6(r.mean_diff) + '\t' +
           fixed6(r.t_stat) + '\t' + fixed6(r.p_one_tailed) + '\t' + fixed6(r.p_adjusted) + '\t' +
           (r.significant ? "true" : "false") + '\n';
  }
  return out;
}

DesignPair permute_within_folds(const DesignPair& design, const CvPlan& plan, std::uint64_t seed) {
  if (plan.fold_assignment.size() != static_cast<std::size_t>(design.rows())) {
    throw InputError("CV plan does not match the design rows");
  }
  DesignPair out = design;
  std::mt19937_64 rng(seed);
  for (int fold = 0; fold < plan.n_folds; ++fold) {
    const auto rows = plan.rows_in(fold);
    auto shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t k = 0; k < rows.size(); ++k) out.y.row(rows[k]) = design.y.row(shuffled[k]);
  }
  return out;
}

std::vector<double> permutation_null(const DesignPair& design, const CvPlan& plan, int n_perm,
                                     std::uint64_t seed, std::span<const double> lambda_grid) {
  if (n_perm < 1) throw InputError("permutation_null: n_perm must be >= 1");
  std::vector<double> null;
  null.reserve(static_cast<std::size_t>(n_perm));
  for (int k = 0; k < n_perm; ++k) {
    const auto permuted = permute_within_folds(design, plan, seed + static_cast<std::uint64_t>(k));
    const auto cv = fit_cv_predict(permuted, plan, lambda_grid);
    null.push_back(layer_brain_score(fold_parcel_scores(permuted.y, cv.predictions, plan, Metric::Pcc)));
  }
  return null;
}

}  // namespace brainscore

#include "brainscore/scoring.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace brainscore;

TEST_CASE("pearson: hand cases") {
  using V = std::vector<double>;
  CHECK(pearson(V{1, 2, 3}, V{1, 2, 3}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson(V{1, 2, 3}, V{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
  // Frozen from the raw-sums oracle.
  const double expected = oracle::pearson_sums({1, 2, 3, 4}, {2, 4, 6, 9});  // 11.5 / sqrt(133.75)
  CHECK(expected == doctest::Approx(0.9943767).epsilon(1e-7));
  CHECK(pearson(V{1, 2, 3, 4}, V{2, 4, 6, 9}) == doctest::Approx(expected).epsilon(1e-14));

  CHECK_THROWS_AS(pearson(V{1, 1, 1}, V{1, 2, 3}), InputError);
  CHECK_THROWS_AS(pearson(V{1, 2}, V{1, 2}), InputError);
  CHECK_THROWS_AS(pearson(V{1, 2, 3}, V{1, 2}), InputError);
}

TEST_CASE("property: pearson affine invariance and sign flip") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(20), b(20), affine(20), flipped(20);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const double alpha = std::exp(u(rng) / 2);
    const double beta = u(rng);
    for (std::size_t i = 0; i < b.size(); ++i) {
      affine[i] = alpha * b[i] + beta;
      flipped[i] = -b[i];
    }
    const double r = pearson(a, b);
    CHECK(std::abs(pearson(a, affine) - r) <= 1e-12);
    CHECK(pearson(a, flipped) == -r);
    CHECK(std::abs(r - oracle::pearson_sums(a, b)) < 1e-10);
  }
}

TEST_CASE("cod: hand cases") {
  using V = std::vector<double>;
  const V actual{1.0, 3.0, 2.0, 5.0};
  CHECK(cod(actual, actual) == 1.0);
  const V mean(4, 2.75);
  CHECK(cod(actual, mean) == doctest::Approx(0.0));
  CHECK(cod(V{0, 1}, V{1, 0}) == -3.0);
  CHECK_THROWS_AS(cod(V{2, 2, 2}, V{1, 2, 3}), InputError);
}

TEST_CASE("property: cod <= 1 and equals r^2 for the in-sample least-squares fit") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + static_cast<int>(rng() % 30);
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = g(rng);
      y(i) = 0.7 * x(i, 0) + g(rng);
    }
    const auto ls = oracle::gradient_descent_ls(x, y);
    std::vector<double> yhat(n), yv(y.data(), y.data() + n), xv(x.data(), x.data() + n);
    for (int i = 0; i < n; ++i) yhat[i] = ls.weights(0) * x(i, 0) + ls.intercept;
    const double r = pearson(xv, yv);
    CHECK(cod(yv, yhat) == doctest::Approx(r * r).epsilon(1e-8));

    std::vector<double> noise(n);
    for (auto& v : noise) v = 3 * g(rng);
    CHECK(cod(yv, noise) <= 1.0);
  }
}

TEST_CASE("parcel_scores: perfect, missing, and permuted-null behaviour") {
  std::mt19937_64 rng(3);
  const Matrix actual = testutil::gaussian(50, 6, rng);
  for (auto metric : {Metric::Pcc, Metric::Cod}) {
    const auto perfect = parcel_scores(actual, actual, metric);
    for (const auto& s : perfect) CHECK(*s == doctest::Approx(1.0));
  }

  Matrix with_constant = actual;
  with_constant.col(2).setConstant(4.0);
  const auto scores = parcel_scores(with_constant, actual, Metric::Pcc);
  CHECK_FALSE(scores[2].has_value());
  CHECK(scores[1].has_value());
  CHECK_THROWS_AS(parcel_scores(actual, actual.leftCols(5), Metric::Pcc), InputError);

  // Permuted rows: E|r| ~ sqrt(2/pi)/sqrt(n-1) ~ 0.036 for n = 500.
  const Matrix big = testutil::gaussian(500, 64, rng);
  std::vector<Index> perm(500);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Matrix shuffled = big(perm, Eigen::all);
  const auto null = parcel_scores(big, shuffled, Metric::Pcc);
  double mean_abs = 0;
  for (const auto& s : null) mean_abs += std::abs(*s);
  mean_abs /= 64;
  MESSAGE("permuted mean |r| = " << mean_abs);
  CHECK(mean_abs < 0.05);
}

TEST_CASE("roi_restrict: mask semantics") {
  const ParcelScores scores{0.1, 0.2, 0.3, 0.4};
  CHECK(roi_restrict(scores, TermMap{"t", 0.5, {0, 1, 0, 1}}) == ParcelScores{0.2, 0.4});
  CHECK(roi_restrict(scores, TermMap{"t", 0.0, {1, 1, 1, 1}}) == scores);
  CHECK_THROWS_AS(roi_restrict(scores, TermMap{"t", 2.0, {1, 1, 1, 1}}), InputError);
  CHECK_THROWS_AS(roi_restrict(scores, TermMap{"t", 0.0, {1, 1, 1}}), InputError);
}

TEST_CASE("layer and model aggregation") {
  CHECK(layer_brain_score(ParcelScores{0.2, std::nullopt, 0.4}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(layer_brain_score(ParcelScores{std::nullopt, std::nullopt}), InputError);

  const std::vector<double> two{0.2, 0.4};
  const auto m = model_brain_score(two);
  CHECK(m.mean == doctest::Approx(0.3));
  CHECK(m.n == 2);
  const std::vector<double> one{0.42};
  const auto single = model_brain_score(one);
  CHECK(single.mean == 0.42);
  CHECK(single.std == 0.0);
  CHECK_THROWS_AS(model_brain_score(std::vector<double>{}), InputError);

  // Permutation invariance.
  std::vector<double> values{0.1, 0.5, -0.2, 0.33, 0.07};
  const auto before = model_brain_score(values);
  std::reverse(values.begin(), values.end());
  const auto after = model_brain_score(values);
  CHECK(after.mean == doctest::Approx(before.mean).epsilon(1e-15));
  CHECK(after.std == doctest::Approx(before.std).epsilon(1e-15));
}

TEST_CASE("cod_transform: hand cases and monotonicity") {
  CHECK(cod_transform(0.0) == 0.0);
  CHECK(cod_transform(0.9) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cod_transform(1.0) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(cod_transform(5.0) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(cod_transform(-3.0) == doctest::Approx(-std::log10(4.0)));
  double previous = -1e300;
  for (double c = -10.0; c <= 1.0; c += 0.01) {
    const double v = cod_transform(c);
    CHECK(v >= previous);
    previous = v;
  }
}

TEST_CASE("project_to_vertices: weighted averages") {
  AtlasProjection atlas;
  atlas.entries = {{0, 0, 0.75}, {0, 1, 0.25}, {1, 2, 0.3}, {2, 3, 1.0}, {3, 3, 0.5}, {3, 2, 0.5}};
  const ParcelScores values{0.4, 0.8, 0.7, std::nullopt};
  const auto map = project_to_vertices(values, atlas);
  CHECK(map.values.at(0) == 0.5);
  CHECK(map.values.at(1) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(map.values.count(2) == 0);                       // only parcel is missing
  CHECK(map.values.at(3) == doctest::Approx(0.7).epsilon(1e-15));  // missing parcel excluded

  const ParcelScores constant(4, 0.25);
  for (const auto& [v, value] : project_to_vertices(constant, atlas).values) {
    CHECK(value == doctest::Approx(0.25).epsilon(1e-15));
  }
  AtlasProjection bad;
  bad.entries = {{0, 9, 1.0}};
  CHECK_THROWS_AS(project_to_vertices(values, bad), InputError);
}

TEST_CASE("property: projection is a convex combination") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    ParcelScores values(10);
    for (auto& v : values) v = u(rng);
    AtlasProjection atlas;
    for (int v = 0; v < 30; ++v) {
      for (int k = 0; k < 3; ++k) atlas.entries.push_back({v, (v + 3 * k) % 10, 0.01 + std::abs(u(rng))});
    }
    double lo = 1e300, hi = -1e300;
    for (const auto& v : values) {
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
    for (const auto& [vertex, value] : project_to_vertices(values, atlas).values) {
      CHECK(value >= lo - 1e-15);
      CHECK(value <= hi + 1e-15);
    }
  }
}

TEST_CASE("fold_parcel_scores: per-fold metric averaged over folds") {
  CvPlan plan;
  plan.n_folds = 2;
  plan.fold_assignment = {0, 0, 0, 1, 1, 1};
  Matrix actual(6, 2);
  actual << 1, 5, 2, 5, 3, 5, 1, 0, 2, 1, 3, 2;
  // A per-fold offset leaves within-fold correlation at 1.
  Matrix predicted(6, 2);
  predicted << 11, 1, 12, 2, 13, 3, -4, 3, -3, 2, -2, 1;
  const auto scores = fold_parcel_scores(actual, predicted, plan, Metric::Pcc);
  CHECK(*scores[0] == doctest::Approx(1.0).epsilon(1e-15));
  // Parcel 1: constant in fold 0 (skipped), r = -1 in fold 1.
  CHECK(*scores[1] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(*parcel_scores(actual, predicted, Metric::Pcc)[0] < 0.9);

  Matrix flat = actual;
  flat.col(1).setConstant(2.0);
  CHECK_FALSE(fold_parcel_scores(flat, predicted, plan, Metric::Pcc)[1].has_value());
  plan.fold_assignment.pop_back();
  CHECK_THROWS_AS(fold_parcel_scores(actual, predicted, plan, Metric::Pcc), InputError);
}

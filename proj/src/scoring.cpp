#include "brainscore/scoring.hpp"

#include <algorithm>
#include <cmath>

namespace brainscore {

namespace {

double mean_of(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

// Centered sum of squares, and whether it is indistinguishable from zero
// relative to the data's magnitude.
struct Spread {
  double mean;
  double ss;
  bool degenerate;
};

Spread spread_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  double peak = 0.0;
  for (double x : v) {
    ss += (x - m) * (x - m);
    peak = std::max(peak, std::abs(x));
  }
  const double floor = static_cast<double>(v.size()) * std::pow(1e-12 * peak, 2);
  return {m, ss, !(ss > floor)};
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("pearson: length mismatch");
  if (a.size() < 3) throw InputError("pearson: need at least 3 values");
  const auto sa = spread_of(a);
  const auto sb = spread_of(b);
  if (sa.degenerate || sb.degenerate) throw InputError("pearson: undefined for zero variance");
  double cross = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) cross += (a[i] - sa.mean) * (b[i] - sb.mean);
  const double r = cross / std::sqrt(sa.ss * sb.ss);
  return std::clamp(r, -1.0, 1.0);
}

double cod(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw InputError("cod: length mismatch");
  if (actual.size() < 2) throw InputError("cod: need at least 2 values");
  const auto s = spread_of(actual);
  if (s.degenerate) throw InputError("cod: undefined for zero-variance actual values");
  double ss_res = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  return 1.0 - ss_res / s.ss;
}

ParcelScores parcel_scores(const Matrix& actual, const Matrix& predicted, Metric metric) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols()) {
    throw InputError("parcel_scores: shape mismatch");
  }
  ParcelScores out(static_cast<std::size_t>(actual.cols()));
  const auto n = static_cast<std::size_t>(actual.rows());
  for (Index j = 0; j < actual.cols(); ++j) {
    std::span<const double> a(actual.col(j).data(), n);
    std::span<const double> p(predicted.col(j).data(), n);
    try {
      out[static_cast<std::size_t>(j)] = metric == Metric::Pcc ? pearson(a, p) : cod(a, p);
    } catch (const InputError&) {
      out[static_cast<std::size_t>(j)] = std::nullopt;
    }
  }
  return out;
}

ParcelScores fold_parcel_scores(const Matrix& actual, const Matrix& predicted, const CvPlan& plan,
                                Metric metric) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols()) {
    throw InputError("fold_parcel_scores: shape mismatch");
  }
  if (plan.fold_assignment.size() != static_cast<std::size_t>(actual.rows())) {
    throw InputError("fold_parcel_scores: plan does not match the number of rows");
  }
  const auto p = static_cast<std::size_t>(actual.cols());
  std::vector<double> sum(p, 0.0);
  std::vector<int> count(p, 0);
  for (int f = 0; f < plan.n_folds; ++f) {
    const auto rows = plan.rows_in(f);
    const Matrix a = actual(rows, Eigen::all);
    const Matrix b = predicted(rows, Eigen::all);
    const auto scores = parcel_scores(a, b, metric);
    for (std::size_t j = 0; j < p; ++j) {
      if (scores[j]) {
        sum[j] += *scores[j];
        ++count[j];
      }
    }
  }
  ParcelScores out(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (count[j] > 0) out[j] = sum[j] / count[j];
  }
  return out;
}

ParcelScores roi_restrict(const ParcelScores& scores, const TermMap& term) {
  if (scores.size() != term.weights.size()) {
    throw InputError("term map '" + term.term + "' has " + std::to_string(term.weights.size()) +
                     " weights but there are " + std::to_string(scores.size()) + " parcels");
  }
  ParcelScores out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (term.contains(i)) out.push_back(scores[i]);
  }
  if (out.empty()) throw InputError("term map '" + term.term + "' selects no parcels");
  return out;
}

ScoreSummary summarize(std::span<const double> values) {
  if (values.empty()) throw InputError("cannot aggregate an empty set of scores");
  ScoreSummary s;
  s.n = static_cast<int>(values.size());
  s.mean = mean_of(values);
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

ScoreSummary summarize(const ParcelScores& scores) {
  std::vector<double> present;
  for (const auto& s : scores) {
    if (s) present.push_back(*s);
  }
  if (present.empty()) throw InputError("every parcel score is missing");
  return summarize(std::span<const double>(present));
}

double layer_brain_score(const ParcelScores& scores) { return summarize(scores).mean; }

ScoreSummary model_brain_score(std::span<const double> per_layer) { return summarize(per_layer); }

double cod_transform(double cod_value) {
  const double capped = std::min(cod_value, 1.0 - kCodEpsilon);
  return -std::log10(std::max(kCodEpsilon, 1.0 - capped));
}

VertexMap project_to_vertices(const ParcelScores& parcel_values, const AtlasProjection& atlas) {
  struct Acc {
    double weighted = 0.0;
    double weight = 0.0;
  };
  std::map<std::int64_t, Acc> acc;
  for (const auto& e : atlas.entries) {
    if (e.parcel_id < 0 || static_cast<std::size_t>(e.parcel_id) >= parcel_values.size()) {
      throw InputError("atlas references parcel " + std::to_string(e.parcel_id) +
                       " but only " + std::to_string(parcel_values.size()) + " parcel values given");
    }
    const auto& v = parcel_values[static_cast<std::size_t>(e.parcel_id)];
    if (!v) continue;
    auto& a = acc[e.vertex_id];
    a.weighted += e.weight * *v;
    a.weight += e.weight;
  }
  VertexMap map;
  for (const auto& [vertex, a] : acc) {
    if (a.weight > 0.0) map.values[vertex] = a.weighted / a.weight;
  }
  return map;
}

}  // namespace brainscore

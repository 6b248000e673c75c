#pragma once

// Brain scores from out-of-fold predictions, their aggregation over ROIs,
// layers and subjects, and projection of parcel values onto surface vertices.

#include "brainscore/dataio.hpp"
#include "brainscore/regression.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace brainscore {

/// One entry per parcel; nullopt where the metric is undefined (never zero).
using ParcelScores = std::vector<std::optional<double>>;

/// Product-moment correlation. Throws InputError on length < 3, mismatched
/// lengths or a zero-variance input.
double pearson(std::span<const double> a, std::span<const double> b);

/// 1 - SS_res / SS_tot. Throws InputError when SS_tot is zero.
double cod(std::span<const double> actual, std::span<const double> predicted);

/// Metric over all rows at once.
ParcelScores parcel_scores(const Matrix& actual, const Matrix& predicted, Metric metric);

/// Metric within each held-out fold, averaged over the folds where it is
/// defined. Pooling rows across folds would mix in the fold-to-fold shift of
/// the training-mean intercept, which is anticorrelated with the held-out mean.
ParcelScores fold_parcel_scores(const Matrix& actual, const Matrix& predicted, const CvPlan& plan,
                                Metric metric);

/// Keeps parcels whose term weight exceeds the term threshold.
ParcelScores roi_restrict(const ParcelScores& scores, const TermMap& term);

struct ScoreSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  int n = 0;
};

/// Mean/std over the non-missing entries. Throws if all are missing.
ScoreSummary summarize(const ParcelScores& scores);
ScoreSummary summarize(std::span<const double> values);

/// Mean over non-missing parcels.
double layer_brain_score(const ParcelScores& scores);
/// Mean and std of the per-layer scores.
ScoreSummary model_brain_score(std::span<const double> per_layer);

inline constexpr double kCodEpsilon = 1e-6;
inline constexpr const char* kCodTransformTag = "neg_log10_one_minus_cod_eps1e-06";
inline constexpr const char* kIdentityTransformTag = "none";

/// -log10(max(eps, 1 - min(cod, 1 - eps))): 0 at CoD 0, 6 at saturation,
/// negative for CoD < 0, monotone increasing throughout.
double cod_transform(double cod_value);

struct VertexMap {
  std::map<std::int64_t, double> values;
  std::string transform = kIdentityTransformTag;
};

/// Vertex value = sum(w * v) / sum(w) over the vertex's non-missing parcels.
/// Vertices whose parcels are all missing are omitted.
VertexMap project_to_vertices(const ParcelScores& parcel_values, const AtlasProjection& atlas);

}  // namespace brainscore

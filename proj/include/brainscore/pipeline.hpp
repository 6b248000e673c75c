#pragma once

// End-to-end scoring: for every (subject, layer) build the design, run
// cross-validated ridge, score parcels, restrict to each ROI group and
// aggregate into per-subject, per-layer and whole-model score tables.

#include "brainscore/dataio.hpp"
#include "brainscore/regression.hpp"
#include "brainscore/sampling.hpp"
#include "brainscore/scoring.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace brainscore {

inline constexpr const char* kAllParcelsRoi = "all";

struct ScoreConfig {
  SamplingSpec sampling;
  std::vector<double> lambda_grid = default_lambda_grid();
  int folds = 5;
  std::uint64_t seed = 0;
  Metric metric = Metric::Pcc;
  bool include_all_parcels = true;
  std::vector<TermMap> terms;
  /// Shuffle targets within folds before fitting (null calibration). The
  /// permutation for subject s uses seed + 1 + s.
  bool permute_targets = false;
  int threads = 1;
};

struct ScoreOutputs {
  ScoreTable per_subject;  // one row per (subject, layer, roi_set); n = parcels scored
  ScoreTable per_layer;    // pooled over subjects, subject_id "all"
  ScoreTable model;        // pooled over subjects x layers, layer "all"
  ParcelScores mean_parcel;  // per-parcel mean over (subject, layer)
  /// Selected lambda per (subject, layer, fold), in task order.
  std::vector<std::vector<double>> selected_lambda;
};

/// Folds come from kfold_split(scenarios, folds, seed), so every layer of a
/// subject shares one plan. Results do not depend on `threads`.
ScoreOutputs run_scoring(const ActivationBundle& bundle, std::span<const ScanData> subjects,
                         const ScoreConfig& config);

}  // namespace brainscore

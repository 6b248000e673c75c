#include "brainscore/pipeline.hpp"

#include "brainscore/parallel.hpp"
#include "brainscore/stats.hpp"

#include <map>

namespace brainscore {

namespace {

struct TaskResult {
  ParcelScores parcels;
  std::vector<ScoreSummary> per_roi;  // aligned with roi names
  std::vector<double> lambdas;
};

}  // namespace

ScoreOutputs run_scoring(const ActivationBundle& bundle, std::span<const ScanData> subjects,
                         const ScoreConfig& config) {
  if (subjects.empty()) throw InputError("no scans to score");
  if (!config.include_all_parcels && config.terms.empty()) {
    throw InputError("nothing to score: no ROI groups selected");
  }
  std::vector<std::string> roi_names;
  if (config.include_all_parcels) roi_names.emplace_back(kAllParcelsRoi);
  for (const auto& t : config.terms) {
    for (const auto& existing : roi_names) {
      if (existing == t.term) throw InputError("duplicate ROI group '" + t.term + "'");
    }
    roi_names.push_back(t.term);
  }

  const Index n_parcels = subjects.front().scan.n_parcels();
  for (const auto& s : subjects) {
    if (s.scan.n_parcels() != n_parcels) {
      throw InputError("scan '" + s.scan.subject_id + "' has " + std::to_string(s.scan.n_parcels()) +
                       " parcels, expected " + std::to_string(n_parcels));
    }
  }
  for (const auto& t : config.terms) {
    if (static_cast<Index>(t.weights.size()) != n_parcels) {
      throw InputError("term map '" + t.term + "' has " + std::to_string(t.weights.size()) +
                       " weights but scans have " + std::to_string(n_parcels) + " parcels");
    }
  }

  // One CV plan per subject, shared by all layers.
  std::vector<CvPlan> plans;
  for (const auto& s : subjects) {
    const auto probe = build_design(bundle, bundle.layers.front().index, s.scan, s.events,
                                    config.sampling);
    plans.push_back(kfold_split(probe.scenario_ids(), config.folds, config.seed));
  }

  const std::size_t n_layers = bundle.layers.size();
  const std::size_t n_tasks = subjects.size() * n_layers;
  std::vector<TaskResult> results(n_tasks);
  parallel_for(n_tasks, config.threads, [&](std::size_t task) {
    const std::size_t s = task / n_layers;
    const auto& layer = bundle.layers[task % n_layers];
    const auto& subject = subjects[s];
    auto design = build_design(bundle, layer.index, subject.scan, subject.events, config.sampling);
    if (config.permute_targets) {
      design = permute_within_folds(design, plans[s], config.seed + 1 + s);
    }
    const auto cv = fit_cv_predict(design, plans[s], config.lambda_grid);
    TaskResult r;
    r.parcels = fold_parcel_scores(design.y, cv.predictions, plans[s], config.metric);
    r.lambdas = cv.selected_lambda;
    try {
      if (config.include_all_parcels) r.per_roi.push_back(summarize(r.parcels));
      for (const auto& t : config.terms) r.per_roi.push_back(summarize(roi_restrict(r.parcels, t)));
    } catch (const InputError& e) {
      throw InputError("subject '" + subject.scan.subject_id + "', layer " +
                       std::to_string(layer.index) + ": " + e.what());
    }
    results[task] = std::move(r);
  });

  ScoreOutputs out;
  out.per_subject.metric = out.per_layer.metric = out.model.metric = config.metric;
  const std::string sampling(to_string(config.sampling.strategy));

  // Reductions run in task order.
  std::map<std::pair<int, std::size_t>, std::vector<double>> by_layer;  // (layer, roi)
  std::vector<std::vector<double>> by_roi(roi_names.size());
  std::vector<double> parcel_sum(static_cast<std::size_t>(n_parcels), 0.0);
  std::vector<int> parcel_count(static_cast<std::size_t>(n_parcels), 0);
  for (std::size_t task = 0; task < n_tasks; ++task) {
    const auto& subject = subjects[task / n_layers];
    const int layer = bundle.layers[task % n_layers].index;
    const auto& r = results[task];
    for (std::size_t k = 0; k < roi_names.size(); ++k) {
      const auto& s = r.per_roi[k];
      out.per_subject.rows.push_back({bundle.model_id, subject.scan.subject_id, layer,
                                      roi_names[k], sampling, s.n, s.mean, s.std});
      by_layer[{layer, k}].push_back(s.mean);
      by_roi[k].push_back(s.mean);
    }
    for (std::size_t p = 0; p < r.parcels.size(); ++p) {
      if (r.parcels[p]) {
        parcel_sum[p] += *r.parcels[p];
        ++parcel_count[p];
      }
    }
    out.selected_lambda.push_back(r.lambdas);
  }
  for (const auto& [key, values] : by_layer) {
    const auto s = summarize(std::span<const double>(values));
    out.per_layer.rows.push_back({bundle.model_id, kAllSubjects, key.first, roi_names[key.second],
                                  sampling, s.n, s.mean, s.std});
  }
  for (std::size_t k = 0; k < roi_names.size(); ++k) {
    const auto s = model_brain_score(by_roi[k]);
    out.model.rows.push_back(
        {bundle.model_id, kAllSubjects, kAllLayers, roi_names[k], sampling, s.n, s.mean, s.std});
  }
  out.mean_parcel.resize(static_cast<std::size_t>(n_parcels));
  for (std::size_t p = 0; p < parcel_sum.size(); ++p) {
    if (parcel_count[p] > 0) out.mean_parcel[p] = parcel_sum[p] / parcel_count[p];
  }
  return out;
}

}  // namespace brainscore

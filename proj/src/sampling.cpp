#include "brainscore/sampling.hpp"

#include <cmath>
#include <unordered_map>

namespace brainscore {

namespace {

// t/TR with values within rounding noise of an integer snapped onto it, so
// that e.g. 18.0/2.0 computed as 8.999999999 still lands on the edge.
double grid_position(double t_s, double tr_s) {
  const double q = t_s / tr_s;
  const double r = std::round(q);
  return std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q)) ? r : q;
}

Index clamp_index(double i, Index n) {
  if (i < 0) return 0;
  if (i > static_cast<double>(n - 1)) return n - 1;
  return static_cast<Index>(i);
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Avg: return "AVG";
    case Strategy::Last: return "LAST";
    case Strategy::Middle: return "MIDDLE";
    case Strategy::Sentences: return "SENTENCES";
  }
  return "?";
}

Strategy parse_strategy(std::string_view token) {
  if (token == "AVG") return Strategy::Avg;
  if (token == "LAST") return Strategy::Last;
  if (token == "MIDDLE") return Strategy::Middle;
  if (token == "SENTENCES") return Strategy::Sentences;
  throw InputError("unknown sampling strategy '" + std::string(token) +
                   "' (expected AVG, LAST, MIDDLE or SENTENCES)");
}

Index volume_index(double t_s, double tr_s, Index n_timepoints) {
  if (!(tr_s > 0.0)) throw InputError("volume_index: TR must be > 0");
  if (n_timepoints < 1) throw InputError("volume_index: scan has no timepoints");
  return clamp_index(std::ceil(grid_position(t_s, tr_s)) - 1.0, n_timepoints);
}

std::vector<std::vector<Index>> sample_volumes(const ParcellatedScan& scan,
                                               const StimulusEvent& event,
                                               const SamplingSpec& spec) {
  if (!(spec.lag_s >= 0.0)) throw InputError("hemodynamic lag must be >= 0");
  const double tr = scan.tr_seconds;
  const Index n = scan.n_timepoints();
  const double start = event.onset_s + spec.lag_s;
  const double end = event.onset_s + event.duration_s + spec.lag_s;

  switch (spec.strategy) {
    case Strategy::Last:
      return {{volume_index(end, tr, n)}};
    case Strategy::Middle:
      return {{volume_index(event.onset_s + event.duration_s / 2.0 + spec.lag_s, tr, n)}};
    case Strategy::Sentences: {
      if (!event.sentence_ends_s) {
        throw InputError("event '" + event.example_id +
                         "': SENTENCES sampling needs sentence_ends_s");
      }
      std::vector<std::vector<Index>> out;
      for (double offset : *event.sentence_ends_s) {
        out.push_back({volume_index(event.onset_s + offset + spec.lag_s, tr, n)});
      }
      return out;
    }
    case Strategy::Avg: {
      // Volumes whose acquisition interval intersects [start, end).
      const double first_raw = std::floor(grid_position(start, tr));
      if (first_raw > static_cast<double>(n - 1)) {
        throw InputError("event '" + event.example_id + "': AVG window starts at " +
                         shortest(start) + " s, after the last volume");
      }
      const Index first = clamp_index(first_raw, n);
      const Index last = volume_index(end, tr, n);
      if (last < first) {
        throw InputError("event '" + event.example_id + "': empty AVG window");
      }
      std::vector<Index> rows;
      for (Index i = first; i <= last; ++i) rows.push_back(i);
      return {rows};
    }
  }
  throw InputError("unknown sampling strategy");
}

std::vector<Vector> sample_event(const ParcellatedScan& scan, const StimulusEvent& event,
                                 const SamplingSpec& spec) {
  std::vector<Vector> out;
  for (const auto& rows : sample_volumes(scan, event, spec)) {
    Vector acc = Vector::Zero(scan.n_parcels());
    for (Index r : rows) acc += scan.bold.row(r).transpose().cast<double>();
    out.push_back(acc / static_cast<double>(rows.size()));
  }
  return out;
}

std::vector<std::string> DesignPair::scenario_ids() const {
  std::vector<std::string> out;
  out.reserve(row_ids.size());
  for (const auto& r : row_ids) out.push_back(r.scenario_id);
  return out;
}

DesignPair build_design(const ActivationBundle& bundle, int layer_index,
                        const ParcellatedScan& scan, std::span<const StimulusEvent> events,
                        const SamplingSpec& spec) {
  const auto& layer = bundle.layer(layer_index);
  if (layer.matrix.rows() != bundle.n_examples()) {
    throw InputError("layer " + std::to_string(layer_index) + " row count does not match bundle");
  }
  std::unordered_map<std::string, Index> row_of;
  for (Index i = 0; i < bundle.n_examples(); ++i) row_of.emplace(bundle.example_ids[i], i);

  std::vector<Index> activation_rows;
  std::vector<Vector> targets;
  DesignPair design;
  for (const auto& ev : events) {
    const auto it = row_of.find(ev.example_id);
    if (it == row_of.end()) {
      throw InputError("event example_id '" + ev.example_id + "' not found in bundle '" +
                       bundle.model_id + "'");
    }
    auto samples = sample_event(scan, ev, spec);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      activation_rows.push_back(it->second);
      targets.push_back(std::move(samples[k]));
      design.row_ids.push_back({ev.example_id, ev.scenario_id, static_cast<int>(k)});
    }
  }

  const auto n = static_cast<Index>(targets.size());
  design.x.resize(n, layer.hidden_dim());
  design.y.resize(n, scan.n_parcels());
  for (Index i = 0; i < n; ++i) {
    design.x.row(i) = layer.matrix.row(activation_rows[i]).cast<double>();
    if (targets[i].size() != scan.n_parcels()) throw InputError("target dimension mismatch");
    design.y.row(i) = targets[i].transpose();
  }
  return design;
}

}  // namespace brainscore

#pragma once

// Turns a scan plus its stimulus events into per-example BOLD targets.
//
// Volume i is acquired over [i*TR, (i+1)*TR). A point sample at time t reads
// the volume whose interval ends at or after t, i.e. ceil(t/TR) - 1, so a time
// that falls exactly on a volume edge resolves to the earlier volume. Every
// sample time is shifted forward by the hemodynamic lag.

#include "brainscore/dataio.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace brainscore {

enum class Strategy { Avg, Last, Middle, Sentences };

std::string_view to_string(Strategy strategy);
/// Accepts the literal tokens AVG, LAST, MIDDLE, SENTENCES.
Strategy parse_strategy(std::string_view token);

inline constexpr double kDefaultLagSeconds = 6.0;

struct SamplingSpec {
  Strategy strategy = Strategy::Last;
  double lag_s = kDefaultLagSeconds;
};

/// clamp(ceil(t/TR) - 1, 0, n_timepoints - 1).
Index volume_index(double t_s, double tr_s, Index n_timepoints);

/// The BOLD rows behind each target of one event: a single row for point
/// samples, the full lagged window for AVG, four rows for SENTENCES.
std::vector<std::vector<Index>> sample_volumes(const ParcellatedScan& scan,
                                               const StimulusEvent& event,
                                               const SamplingSpec& spec);

std::vector<Vector> sample_event(const ParcellatedScan& scan, const StimulusEvent& event,
                                 const SamplingSpec& spec);

struct RowId {
  std::string example_id;
  std::string scenario_id;
  int sub_index = 0;
};

/// Activations paired with sampled targets, one row per (event, sample).
struct DesignPair {
  Matrix x;  // [n_rows x hidden_dim]
  Matrix y;  // [n_rows x n_parcels]
  std::vector<RowId> row_ids;

  Index rows() const { return x.rows(); }
  std::vector<std::string> scenario_ids() const;
};

DesignPair build_design(const ActivationBundle& bundle, int layer_index,
                        const ParcellatedScan& scan, std::span<const StimulusEvent> events,
                        const SamplingSpec& spec);

}  // namespace brainscore

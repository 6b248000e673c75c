#pragma once

// On-disk formats and the in-memory types they load into. Every loader either
// returns a value satisfying all of its type's invariants or throws InputError
// naming the offending file (and line, for text tables).

#include "brainscore/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace brainscore {

namespace fs = std::filesystem;

inline constexpr int kDefaultParcels = 1024;
inline constexpr int kSchemaVersion = 1;

struct LayerActivations {
  int index = 0;
  FloatMatrix matrix;  // [n_examples x hidden_dim]

  Index hidden_dim() const { return matrix.cols(); }
};

/// Per-layer classification-token hidden states, one row per stimulus example.
struct ActivationBundle {
  std::string model_id;
  std::vector<std::string> example_ids;
  std::vector<LayerActivations> layers;  // strictly increasing index

  Index n_examples() const { return static_cast<Index>(example_ids.size()); }
  const LayerActivations& layer(int index) const;
  void validate() const;
};

struct ParcellatedScan {
  std::string subject_id;
  double tr_seconds = 2.0;
  FloatMatrix bold;  // [n_timepoints x n_parcels]

  Index n_timepoints() const { return bold.rows(); }
  Index n_parcels() const { return bold.cols(); }
  double duration_s() const { return static_cast<double>(n_timepoints()) * tr_seconds; }
  void validate() const;
};

struct StimulusEvent {
  std::string scenario_id;
  std::string example_id;
  double onset_s = 0.0;
  double duration_s = 0.0;
  // Offsets from onset of the four sentence ends.
  std::optional<std::array<double, 4>> sentence_ends_s;

  bool operator==(const StimulusEvent&) const = default;
};

struct ScanData {
  ParcellatedScan scan;
  std::vector<StimulusEvent> events;  // sorted by onset_s
};

/// Checks one scan's event list: bounds, sentence ends, unique example ids.
void validate_events(const ParcellatedScan& scan, const std::vector<StimulusEvent>& events);

/// Parcel-weight vector for an ROI group; parcels with weight > threshold are in the group.
struct TermMap {
  std::string term;
  double threshold = 0.0;
  std::vector<double> weights;

  bool contains(std::size_t parcel) const { return weights[parcel] > threshold; }
  std::size_t roi_size() const;
  void validate() const;
};

struct AtlasEntry {
  std::int64_t vertex_id = 0;
  std::int64_t parcel_id = 0;
  double weight = 0.0;

  bool operator==(const AtlasEntry&) const = default;
};

/// Sparse parcel -> vertex weights of a probabilistic (overlapping) atlas.
struct AtlasProjection {
  std::vector<AtlasEntry> entries;

  void validate(Index n_parcels) const;
};

enum class Metric { Pcc, Cod };

std::string to_string(Metric metric);
Metric parse_metric(std::string_view text);

/// `layer` value used by rows aggregated over layers.
inline constexpr int kAllLayers = -1;
inline constexpr const char* kAllSubjects = "all";

struct ScoreRow {
  std::string model_id;
  std::string subject_id;
  int layer = 0;
  std::string roi_set;
  std::string sampling;
  int n = 1;
  double score_mean = 0.0;
  double score_std = 0.0;

  bool operator==(const ScoreRow&) const = default;
};

struct ScoreTable {
  Metric metric = Metric::Pcc;
  std::vector<ScoreRow> rows;
};

ActivationBundle load_activation_bundle(const fs::path& dir);
void write_activation_bundle(const ActivationBundle& bundle, const fs::path& dir);

ScanData load_scan(const fs::path& dir);
void write_scan(const ScanData& data, const fs::path& dir);

TermMap load_term_map(const fs::path& file);
void write_term_map(const TermMap& term, const fs::path& file);

AtlasProjection load_atlas(const fs::path& file, Index n_parcels = kDefaultParcels);
void write_atlas(const AtlasProjection& atlas, const fs::path& file);

/// Rows sorted by (model_id, subject_id, layer, roi_set); numbers at 6 decimals.
std::string format_score_table(const ScoreTable& table);
void write_score_table(const ScoreTable& table, const fs::path& file);
/// The TSV carries no metric column, so the caller states it.
ScoreTable load_score_table(const fs::path& file, Metric metric = Metric::Pcc);

/// Raw f32le row-major helpers shared by the bundle, scan and truth files.
FloatMatrix read_f32_matrix(const fs::path& file, Index rows, Index cols);
void write_f32_matrix(const FloatMatrix& matrix, const fs::path& file);

/// Writes `content` to `file`, creating parent directories.
void write_text_file(const fs::path& file, const std::string& content);
std::string read_text_file(const fs::path& file);

}  // namespace brainscore

#include "brainscore/dataio.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

namespace brainscore {

using json = nlohmann::ordered_json;

namespace {

static_assert(sizeof(float) == 4);

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Lines of a text table with CR stripped; trailing empty lines dropped.
std::vector<std::string> read_lines(const fs::path& file) {
  std::istringstream in(read_text_file(file));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void check_header(const std::vector<std::string>& lines, const std::string& expected,
                  const fs::path& file) {
  if (lines.empty()) throw InputError(quoted(file) + ": empty file, expected header");
  if (lines.front() != expected) {
    throw InputError(quoted(file) + ":1: bad header '" + lines.front() + "', expected '" +
                     expected + "'");
  }
}

std::string at_line(const fs::path& file, std::size_t line_no) {
  return quoted(file) + ":" + std::to_string(line_no);
}

json parse_json_file(const fs::path& file) {
  try {
    return json::parse(read_text_file(file));
  } catch (const json::exception& e) {
    throw InputError(quoted(file) + ": invalid JSON: " + e.what());
  }
}

template <typename T>
T json_field(const json& doc, const char* key, const fs::path& file) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw InputError(quoted(file) + ": missing field '" + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(quoted(file) + ": field '" + key + "' has the wrong type");
  }
}

void check_schema(const json& doc, const fs::path& file) {
  const auto version = json_field<int>(doc, "schema_version", file);
  if (version != kSchemaVersion) {
    throw InputError(quoted(file) + ": unsupported schema_version " + std::to_string(version));
  }
}

void check_finite(const FloatMatrix& m, const std::string& what) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw InputError(what + ": non-finite value at row " + std::to_string(r) + ", column " +
                         std::to_string(c));
      }
    }
  }
}

std::string layer_file_name(int index) { return "layer_" + std::to_string(index) + ".f32"; }

}  // namespace

// ---------------------------------------------------------------------------
// Raw files

std::string read_text_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + quoted(file));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& file, const std::string& content) {
  if (file.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + quoted(file));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError("write failed for " + quoted(file));
}

FloatMatrix read_f32_matrix(const fs::path& file, Index rows, Index cols) {
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) throw InputError("missing file " + quoted(file));
  const auto size = fs::file_size(file, ec);
  const auto expected = static_cast<std::uintmax_t>(4 * rows * cols);
  if (ec || size != expected) {
    throw InputError(quoted(file) + ": size mismatch, expected " + std::to_string(expected) +
                     " bytes (" + std::to_string(rows) + " x " + std::to_string(cols) +
                     " f32), found " + std::to_string(size));
  }
  FloatMatrix m(rows, cols);
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + quoted(file));
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(expected));
  if (!in) throw InputError(quoted(file) + ": short read");
  if constexpr (std::endian::native == std::endian::big) {
    for (Index i = 0; i < m.size(); ++i) {
      auto bits = std::bit_cast<std::uint32_t>(m.data()[i]);
      bits = __builtin_bswap32(bits);
      m.data()[i] = std::bit_cast<float>(bits);
    }
  }
  return m;
}

void write_f32_matrix(const FloatMatrix& matrix, const fs::path& file) {
  std::string bytes(static_cast<std::size_t>(matrix.size()) * 4, '\0');
  for (Index i = 0; i < matrix.size(); ++i) {
    auto bits = std::bit_cast<std::uint32_t>(matrix.data()[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(bytes.data() + 4 * i, &bits, 4);
  }
  write_text_file(file, bytes);
}

// ---------------------------------------------------------------------------
// Activation bundle

const LayerActivations& ActivationBundle::layer(int index) const {
  for (const auto& l : layers) {
    if (l.index == index) return l;
  }
  throw InputError("activation bundle '" + model_id + "' has no layer " + std::to_string(index));
}

void ActivationBundle::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& id : example_ids) {
    if (!seen.insert(id).second) throw InputError("duplicate example_id '" + id + "'");
  }
  if (layers.empty()) throw InputError("activation bundle has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.index < 0) throw InputError("negative layer index " + std::to_string(l.index));
    if (i > 0 && l.index <= layers[i - 1].index) {
      throw InputError("layer indices must be strictly increasing (" +
                       std::to_string(layers[i - 1].index) + " then " + std::to_string(l.index) +
                       ")");
    }
    if (l.matrix.rows() != n_examples()) {
      throw InputError("layer " + std::to_string(l.index) + " has " +
                       std::to_string(l.matrix.rows()) + " rows, expected " +
                       std::to_string(n_examples()));
    }
    if (l.hidden_dim() <= 0) throw InputError("layer " + std::to_string(l.index) + " is empty");
    check_finite(l.matrix, "layer " + std::to_string(l.index));
  }
}

ActivationBundle load_activation_bundle(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw InputError("missing bundle directory " + quoted(dir));
  if (!fs::is_regular_file(manifest_path, ec)) {
    throw InputError("missing file " + quoted(manifest_path));
  }
  const auto doc = parse_json_file(manifest_path);
  check_schema(doc, manifest_path);

  ActivationBundle bundle;
  bundle.model_id = json_field<std::string>(doc, "model_id", manifest_path);
  bundle.example_ids = json_field<std::vector<std::string>>(doc, "example_ids", manifest_path);
  const auto layers = json_field<json>(doc, "layers", manifest_path);
  if (!layers.is_array()) throw InputError(quoted(manifest_path) + ": 'layers' must be an array");
  for (const auto& entry : layers) {
    LayerActivations layer;
    layer.index = json_field<int>(entry, "index", manifest_path);
    const auto dim = json_field<long long>(entry, "hidden_dim", manifest_path);
    const auto file = json_field<std::string>(entry, "file", manifest_path);
    if (dim <= 0) throw InputError(quoted(manifest_path) + ": hidden_dim must be positive");
    const auto layer_path = dir / file;
    layer.matrix = read_f32_matrix(layer_path, bundle.n_examples(), dim);
    check_finite(layer.matrix, quoted(layer_path));
    bundle.layers.push_back(std::move(layer));
  }
  try {
    bundle.validate();
  } catch (const InputError& e) {
    throw InputError(quoted(dir) + ": " + e.what());
  }
  return bundle;
}

void write_activation_bundle(const ActivationBundle& bundle, const fs::path& dir) {
  bundle.validate();
  fs::create_directories(dir);
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["model_id"] = bundle.model_id;
  doc["example_ids"] = bundle.example_ids;
  json layers = json::array();
  for (const auto& l : bundle.layers) {
    const auto file = layer_file_name(l.index);
    layers.push_back({{"index", l.index}, {"hidden_dim", l.hidden_dim()}, {"file", file}});
    write_f32_matrix(l.matrix, dir / file);
  }
  doc["layers"] = std::move(layers);
  write_text_file(dir / "manifest.json", doc.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Scan

void ParcellatedScan::validate() const {
  if (!(tr_seconds > 0.0) || !std::isfinite(tr_seconds)) {
    throw InputError("tr_seconds must be > 0, got " + shortest(tr_seconds));
  }
  if (n_timepoints() < 1) throw InputError("scan has no timepoints");
  if (n_parcels() < 1) throw InputError("scan has no parcels");
  check_finite(bold, "bold");
}

void validate_events(const ParcellatedScan& scan, const std::vector<StimulusEvent>& events) {
  std::unordered_set<std::string> seen;
  const double limit = scan.duration_s();
  for (const auto& ev : events) {
    const std::string who = "event '" + ev.example_id + "'";
    if (!seen.insert(ev.example_id).second) {
      throw InputError("duplicate example_id '" + ev.example_id + "' in events");
    }
    if (!(ev.onset_s >= 0.0) || !std::isfinite(ev.onset_s)) {
      throw InputError(who + ": onset_s must be >= 0");
    }
    if (!(ev.duration_s > 0.0) || !std::isfinite(ev.duration_s)) {
      throw InputError(who + ": duration_s must be > 0");
    }
    if (ev.onset_s + ev.duration_s > limit * (1.0 + 1e-12)) {
      throw InputError(who + ": onset " + shortest(ev.onset_s) + " + duration " +
                       shortest(ev.duration_s) + " exceeds scan duration " + shortest(limit));
    }
    if (ev.sentence_ends_s) {
      const auto& ends = *ev.sentence_ends_s;
      for (std::size_t k = 0; k < ends.size(); ++k) {
        if (!std::isfinite(ends[k]) || ends[k] < 0.0 || ends[k] > ev.duration_s) {
          throw InputError(who + ": sentence end " + shortest(ends[k]) + " outside [0, duration]");
        }
        if (k > 0 && !(ends[k] > ends[k - 1])) {
          throw InputError(who + ": sentence ends must be strictly increasing");
        }
      }
    }
  }
}

ScanData load_scan(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw InputError("missing scan directory " + quoted(dir));
  const auto meta_path = dir / "meta.json";
  if (!fs::is_regular_file(meta_path, ec)) throw InputError("missing file " + quoted(meta_path));
  const auto meta = parse_json_file(meta_path);
  check_schema(meta, meta_path);

  ScanData data;
  auto& scan = data.scan;
  scan.subject_id = json_field<std::string>(meta, "subject_id", meta_path);
  scan.tr_seconds = json_field<double>(meta, "tr_seconds", meta_path);
  const auto n_timepoints = json_field<long long>(meta, "n_timepoints", meta_path);
  const auto n_parcels = meta.contains("n_parcels")
                             ? json_field<long long>(meta, "n_parcels", meta_path)
                             : static_cast<long long>(kDefaultParcels);
  if (!(scan.tr_seconds > 0.0)) {
    throw InputError(quoted(meta_path) + ": tr_seconds must be > 0, got " +
                     shortest(scan.tr_seconds));
  }
  if (n_timepoints < 1) throw InputError(quoted(meta_path) + ": n_timepoints must be >= 1");
  if (n_parcels < 1) throw InputError(quoted(meta_path) + ": n_parcels must be >= 1");
  scan.bold = read_f32_matrix(dir / "bold.f32", n_timepoints, n_parcels);
  try {
    scan.validate();
  } catch (const InputError& e) {
    throw InputError(quoted(dir / "bold.f32") + ": " + e.what());
  }

  const auto events_path = dir / "events.tsv";
  const auto lines = read_lines(events_path);
  check_header(lines, "scenario_id\texample_id\tonset_s\tduration_s\tsentence_ends_s", events_path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto where = at_line(events_path, i + 1);
    const auto fields = split(lines[i], '\t');
    if (fields.size() != 5) {
      throw InputError(where + ": expected 5 tab-separated fields, found " +
                       std::to_string(fields.size()));
    }
    StimulusEvent ev;
    ev.scenario_id = std::string(fields[0]);
    ev.example_id = std::string(fields[1]);
    if (ev.scenario_id.empty() || ev.example_id.empty()) {
      throw InputError(where + ": empty scenario_id or example_id");
    }
    ev.onset_s = parse_double(fields[2], where + " onset_s");
    ev.duration_s = parse_double(fields[3], where + " duration_s");
    if (!fields[4].empty()) {
      const auto parts = split(fields[4], ';');
      if (parts.size() != 4) {
        throw InputError(where + ": sentence_ends_s needs 4 values, found " +
                         std::to_string(parts.size()));
      }
      std::array<double, 4> ends{};
      for (std::size_t k = 0; k < 4; ++k) ends[k] = parse_double(parts[k], where + " sentence_ends_s");
      ev.sentence_ends_s = ends;
    }
    try {
      validate_events(scan, {ev});
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
    data.events.push_back(std::move(ev));
  }
  std::stable_sort(data.events.begin(), data.events.end(),
                   [](const auto& a, const auto& b) { return a.onset_s < b.onset_s; });
  try {
    validate_events(scan, data.events);
  } catch (const InputError& e) {
    throw InputError(quoted(events_path) + ": " + e.what());
  }
  return data;
}

void write_scan(const ScanData& data, const fs::path& dir) {
  data.scan.validate();
  validate_events(data.scan, data.events);
  fs::create_directories(dir);
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["subject_id"] = data.scan.subject_id;
  meta["tr_seconds"] = data.scan.tr_seconds;
  meta["n_timepoints"] = data.scan.n_timepoints();
  meta["n_parcels"] = data.scan.n_parcels();
  write_text_file(dir / "meta.json", meta.dump(2) + "\n");
  write_f32_matrix(data.scan.bold, dir / "bold.f32");

  std::string tsv = "scenario_id\texample_id\tonset_s\tduration_s\tsentence_ends_s\n";
  for (const auto& ev : data.events) {
    std::string ends;
    if (ev.sentence_ends_s) {
      std::vector<std::string> parts;
      for (double e : *ev.sentence_ends_s) parts.push_back(shortest(e));
      ends = join(parts, ';');
    }
    tsv += join({ev.scenario_id, ev.example_id, shortest(ev.onset_s), shortest(ev.duration_s), ends},
                '\t');
    tsv += '\n';
  }
  write_text_file(dir / "events.tsv", tsv);
}

// ---------------------------------------------------------------------------
// Term maps and atlas

std::size_t TermMap::roi_size() const {
  return static_cast<std::size_t>(
      std::count_if(weights.begin(), weights.end(), [&](double w) { return w > threshold; }));
}

void TermMap::validate() const {
  if (term.empty()) throw InputError("term map has an empty term name");
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw InputError("term map '" + term + "': threshold must be >= 0");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw InputError("term map '" + term + "': negative or non-finite weight " +
                       shortest(weights[i]) + " at parcel " + std::to_string(i));
    }
  }
  if (roi_size() == 0) {
    throw InputError("term map '" + term + "': empty ROI, no weight exceeds threshold " +
                     shortest(threshold));
  }
}

TermMap load_term_map(const fs::path& file) {
  const auto doc = parse_json_file(file);
  TermMap term;
  term.term = json_field<std::string>(doc, "term", file);
  term.threshold = json_field<double>(doc, "threshold", file);
  term.weights = json_field<std::vector<double>>(doc, "weights", file);
  try {
    term.validate();
  } catch (const InputError& e) {
    throw InputError(quoted(file) + ": " + e.what());
  }
  return term;
}

void write_term_map(const TermMap& term, const fs::path& file) {
  term.validate();
  json doc;
  doc["term"] = term.term;
  doc["threshold"] = term.threshold;
  doc["weights"] = term.weights;
  write_text_file(file, doc.dump() + "\n");
}

void AtlasProjection::validate(Index n_parcels) const {
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  for (const auto& e : entries) {
    const auto who = "atlas entry (" + std::to_string(e.vertex_id) + ", " +
                     std::to_string(e.parcel_id) + ")";
    if (e.vertex_id < 0) throw InputError(who + ": negative vertex_id");
    if (e.parcel_id < 0 || e.parcel_id >= n_parcels) {
      throw InputError(who + ": parcel_id out of range [0, " + std::to_string(n_parcels) + ")");
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw InputError(who + ": weight must be > 0, got " + shortest(e.weight));
    }
    if (!seen.emplace(e.vertex_id, e.parcel_id).second) throw InputError(who + ": duplicate pair");
  }
}

AtlasProjection load_atlas(const fs::path& file, Index n_parcels) {
  const auto lines = read_lines(file);
  check_header(lines, "vertex_id\tparcel_id\tweight", file);
  AtlasProjection atlas;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto where = at_line(file, i + 1);
    const auto fields = split(lines[i], '\t');
    if (fields.size() != 3) {
      throw InputError(where + ": expected 3 tab-separated fields, found " +
                       std::to_string(fields.size()));
    }
    atlas.entries.push_back({parse_int(fields[0], where + " vertex_id"),
                             parse_int(fields[1], where + " parcel_id"),
                             parse_double(fields[2], where + " weight")});
    try {
      AtlasProjection{{atlas.entries.back()}}.validate(n_parcels);
    } catch (const InputError& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  try {
    atlas.validate(n_parcels);
  } catch (const InputError& e) {
    throw InputError(quoted(file) + ": " + e.what());
  }
  return atlas;
}

void write_atlas(const AtlasProjection& atlas, const fs::path& file) {
  std::string tsv = "vertex_id\tparcel_id\tweight\n";
  for (const auto& e : atlas.entries) {
    tsv += std::to_string(e.vertex_id) + '\t' + std::to_string(e.parcel_id) + '\t' +
           shortest(e.weight) + '\n';
  }
  write_text_file(file, tsv);
}

// ---------------------------------------------------------------------------
// Score table

std::string to_string(Metric metric) { return metric == Metric::Pcc ? "pcc" : "cod"; }

Metric parse_metric(std::string_view text) {
  if (text == "pcc" || text == "PCC") return Metric::Pcc;
  if (text == "cod" || text == "CoD" || text == "COD") return Metric::Cod;
  throw InputError("unknown metric '" + std::string(text) + "' (expected pcc or cod)");
}

namespace {
const std::string kScoreHeader =
    "model_id\tsubject_id\tlayer\troi_set\tsampling\tn\tscore_mean\tscore_std";

std::string layer_token(int layer) { return layer == kAllLayers ? "all" : std::to_string(layer); }
}  // namespace

std::string format_score_table(const ScoreTable& table) {
  std::vector<const ScoreRow*> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) rows.push_back(&r);
  std::stable_sort(rows.begin(), rows.end(), [](const ScoreRow* a, const ScoreRow* b) {
    return std::tie(a->model_id, a->subject_id, a->layer, a->roi_set) <
           std::tie(b->model_id, b->subject_id, b->layer, b->roi_set);
  });
  std::string out = kScoreHeader + "\n";
  for (const auto* r : rows) {
    out += join({r->model_id, r->subject_id, layer_token(r->layer), r->roi_set, r->sampling,
                 std::to_string(r->n), fixed6(r->score_mean), fixed6(r->score_std)},
                '\t');
    out += '\n';
  }
  return out;
}

void write_score_table(const ScoreTable& table, const fs::path& file) {
  write_text_file(file, format_score_table(table));
}

ScoreTable load_score_table(const fs::path& file, Metric metric) {
  const auto lines = read_lines(file);
  check_header(lines, kScoreHeader, file);
  ScoreTable table;
  table.metric = metric;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto where = at_line(file, i + 1);
    const auto f = split(lines[i], '\t');
    if (f.size() != 8) {
      throw InputError(where + ": expected 8 tab-separated fields, found " +
                       std::to_string(f.size()));
    }
    ScoreRow row;
    row.model_id = std::string(f[0]);
    row.subject_id = std::string(f[1]);
    row.layer = f[2] == "all" ? kAllLayers : static_cast<int>(parse_int(f[2], where + " layer"));
    row.roi_set = std::string(f[3]);
    row.sampling = std::string(f[4]);
    row.n = static_cast<int>(parse_int(f[5], where + " n"));
    row.score_mean = parse_double(f[6], where + " score_mean");
    row.score_std = parse_double(f[7], where + " score_std");
    if (row.n < 1) throw InputError(where + ": n must be >= 1");
    if (!(row.score_std >= 0.0)) throw InputError(where + ": score_std must be >= 0");
    if (metric == Metric::Pcc && !(std::abs(row.score_mean) <= 1.0)) {
      throw InputError(where + ": PCC score_mean outside [-1, 1]");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace brainscore

#include "brainscore/synth.hpp"

#include "brainscore/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace brainscore {

namespace {

std::string padded(int value, int width) {
  auto s = std::to_string(value);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

int digits(int n) { return static_cast<int>(std::to_string(std::max(n, 1)).size()); }

// Index range [first, last] of an event's lagged window, for an event at onset 0.
struct WindowShape {
  Index first;
  Index last;
};

WindowShape window_at_zero(const SynthSpec& spec) {
  ParcellatedScan probe;
  probe.tr_seconds = spec.tr_seconds;
  const auto span = static_cast<Index>(std::ceil((spec.duration_s + spec.lag_s) / spec.tr_seconds));
  probe.bold = FloatMatrix::Zero(span + 4, 1);
  StimulusEvent ev{"probe", "probe", 0.0, spec.duration_s, std::nullopt};
  const auto avg = sample_volumes(probe, ev, {Strategy::Avg, spec.lag_s})[0];
  return {avg.front(), avg.back()};
}

}  // namespace

void SynthSpec::validate() const {
  if (n_scenarios < 1 || n_parcels < 1 || hidden_dim < 1 || n_layers < 1 || n_subjects < 1) {
    throw InputError("gen-synthetic: all counts must be >= 1");
  }
  if (!(tr_seconds > 0.0)) throw InputError("gen-synthetic: tr_seconds must be > 0");
  if (!(duration_s > 0.0)) throw InputError("gen-synthetic: duration_s must be > 0");
  if (!(lag_s >= 0.0)) throw InputError("gen-synthetic: lag_s must be >= 0");
  if (!(noise_sigma >= 0.0)) throw InputError("gen-synthetic: noise_sigma must be >= 0");
  if (!(signal_sigma > 0.0)) throw InputError("gen-synthetic: signal_sigma must be > 0");
}

std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

FloatMatrix noiseless_targets(const FloatMatrix& x, const FloatMatrix& w) {
  FloatMatrix out(x.rows(), w.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < w.cols(); ++j) {
      double acc = 0.0;
      for (Index k = 0; k < x.cols(); ++k) {
        acc += static_cast<double>(x(i, k)) * static_cast<double>(w(k, j));
      }
      out(i, j) = static_cast<float>(acc);
    }
  }
  return out;
}

SynthDataset make_synthetic(const SynthSpec& spec) {
  spec.validate();
  const auto window = window_at_zero(spec);
  const auto window_len = window.last - window.first + 1;
  const auto stimulus_len = static_cast<Index>(std::ceil(spec.duration_s / spec.tr_seconds));
  // One empty volume between consecutive windows.
  const Index spacing = std::max(window_len, stimulus_len) + 1;
  const Index n_timepoints = window.last + (spec.n_scenarios - 1) * spacing + 2;
  if (n_timepoints < 1) throw InputError("gen-synthetic: scan too short to host the events");

  SynthDataset data;
  std::normal_distribution<double> gauss(0.0, 1.0);

  // Activations.
  const int width = std::max(4, digits(spec.n_scenarios));
  auto& bundle = data.bundle;
  bundle.model_id = "synthetic";
  for (int i = 0; i < spec.n_scenarios; ++i) bundle.example_ids.push_back("ex-" + padded(i, width));
  {
    auto rng = derived_rng(spec.seed, 1);
    FloatMatrix z(spec.n_scenarios, spec.hidden_dim);
    for (Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<float>(gauss(rng));
    bundle.layers.push_back({0, z});
  }
  {
    auto rng = derived_rng(spec.seed, 3);
    const Matrix z = bundle.layers[0].matrix.cast<double>();
    for (int l = 1; l < spec.n_layers; ++l) {
      Matrix g(spec.hidden_dim, spec.hidden_dim);
      for (Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
      const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
      bundle.layers.push_back({l, (z * q).cast<float>()});
    }
  }

  // Ground-truth map: unit-norm Gaussian columns scaled to signal_sigma, so each
  // noiseless target has variance signal_sigma^2 under standard-normal inputs.
  {
    auto rng = derived_rng(spec.seed, 2);
    Matrix w(spec.hidden_dim, spec.n_parcels);
    for (Index j = 0; j < w.cols(); ++j) {
      for (Index k = 0; k < w.rows(); ++k) w(k, j) = gauss(rng);
      w.col(j) *= spec.signal_sigma / w.col(j).norm();
    }
    data.w0 = w.cast<float>();
  }
  data.noiseless = noiseless_targets(bundle.layers[0].matrix, data.w0);

  // Events, shared by all subjects.
  std::vector<StimulusEvent> events;
  for (int i = 0; i < spec.n_scenarios; ++i) {
    StimulusEvent ev;
    ev.scenario_id = "sc-" + padded(i, width);
    ev.example_id = bundle.example_ids[static_cast<std::size_t>(i)];
    ev.onset_s = static_cast<double>(i * spacing) * spec.tr_seconds;
    ev.duration_s = spec.duration_s;
    const double q = spec.duration_s / 4.0;
    ev.sentence_ends_s = std::array<double, 4>{q, 2 * q, 3 * q, spec.duration_s};
    events.push_back(std::move(ev));
  }

  const int sub_width = std::max(2, digits(spec.n_subjects));
  for (int s = 0; s < spec.n_subjects; ++s) {
    auto rng = derived_rng(spec.seed, 100 + static_cast<std::uint64_t>(s));
    ScanData sub;
    sub.scan.subject_id = "sub-" + padded(s + 1, sub_width);
    sub.scan.tr_seconds = spec.tr_seconds;
    sub.scan.bold.resize(n_timepoints, spec.n_parcels);
    for (Index i = 0; i < sub.scan.bold.size(); ++i) {
      sub.scan.bold.data()[i] = static_cast<float>(spec.noise_sigma * gauss(rng));
    }
    for (int e = 0; e < spec.n_scenarios; ++e) {
      const Index offset = e * spacing;
      for (Index v = window.first + offset; v <= window.last + offset; ++v) {
        for (Index p = 0; p < spec.n_parcels; ++p) {
          sub.scan.bold(v, p) = static_cast<float>(static_cast<double>(data.noiseless(e, p)) +
                                                   spec.noise_sigma * gauss(rng));
        }
      }
    }
    sub.events = events;
    sub.scan.validate();
    validate_events(sub.scan, sub.events);
    data.subjects.push_back(std::move(sub));
  }
  data.bundle.validate();
  return data;
}

AtlasProjection gen_toy_atlas(int n_vertices, int n_parcels, double overlap, std::uint64_t seed) {
  if (n_vertices < 1 || n_parcels < 1) throw InputError("toy atlas: counts must be >= 1");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw InputError("toy atlas: overlap must lie in [0, 1]");
  const auto n_multi = static_cast<int>(std::lround(overlap * n_vertices));
  if (n_multi > 0 && n_parcels < 2) {
    throw InputError("toy atlas: overlapping vertices need at least 2 parcels");
  }
  auto rng = derived_rng(seed, 4);
  std::vector<int> order(static_cast<std::size_t>(n_vertices));
  for (int v = 0; v < n_vertices; ++v) order[static_cast<std::size_t>(v)] = v;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> multi(static_cast<std::size_t>(n_vertices), false);
  for (int k = 0; k < n_multi; ++k) multi[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;

  std::uniform_int_distribution<int> parcel(0, n_parcels - 1);
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  AtlasProjection atlas;
  for (int v = 0; v < n_vertices; ++v) {
    int count = 1;
    if (multi[static_cast<std::size_t>(v)]) {
      count = std::min(n_parcels, 2 + std::uniform_int_distribution<int>(0, 1)(rng));
    }
    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < count) {
      const int p = parcel(rng);
      if (std::find(chosen.begin(), chosen.end(), p) == chosen.end()) chosen.push_back(p);
    }
    for (int p : chosen) atlas.entries.push_back({v, p, weight(rng)});
  }
  return atlas;
}

std::vector<TermMap> gen_term_maps(int n_parcels, std::uint64_t seed) {
  if (n_parcels < 1) throw InputError("term maps: n_parcels must be >= 1");
  const char* names[] = {"theory-of-mind", "moral", "language", "vision"};
  std::vector<TermMap> out;
  for (int t = 0; t < 4; ++t) {
    auto rng = derived_rng(seed, 10 + static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TermMap term;
    term.term = names[t];
    term.threshold = 0.5;
    term.weights.resize(static_cast<std::size_t>(n_parcels));
    for (auto& w : term.weights) w = u(rng);
    term.weights[static_cast<std::size_t>(t % n_parcels)] = 1.0;
    out.push_back(std::move(term));
  }
  return out;
}

SynthPaths generate(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  const auto data = make_synthetic(spec);
  SynthPaths paths;
  paths.bundle_dir = out_dir / "bundle";
  paths.truth_file = out_dir / "truth.json";
  paths.terms_dir = out_dir / "terms";
  paths.atlas_file = out_dir / "atlas.tsv";

  write_activation_bundle(data.bundle, paths.bundle_dir);
  for (const auto& sub : data.subjects) {
    const auto dir = out_dir / "scans" / sub.scan.subject_id;
    write_scan(sub, dir);
    paths.scan_dirs.push_back(dir);
  }
  write_f32_matrix(data.w0, out_dir / "w0.f32");
  write_f32_matrix(data.noiseless, out_dir / "expected_noiseless.f32");
  for (const auto& term : gen_term_maps(spec.n_parcels, spec.seed)) {
    write_term_map(term, paths.terms_dir / (term.term + ".json"));
  }
  write_atlas(gen_toy_atlas(4 * spec.n_parcels, spec.n_parcels, spec.n_parcels > 1 ? 0.5 : 0.0,
                            spec.seed),
              paths.atlas_file);

  nlohmann::ordered_json truth;
  truth["schema_version"] = kSchemaVersion;
  truth["w0_file"] = "w0.f32";
  truth["w0_shape"] = {spec.hidden_dim, spec.n_parcels};
  truth["w0_layer"] = 0;
  truth["expected_noiseless_file"] = "expected_noiseless.f32";
  truth["expected_noiseless_shape"] = {spec.n_scenarios, spec.n_parcels};
  truth["spec"] = {{"n_scenarios", spec.n_scenarios}, {"n_parcels", spec.n_parcels},
                   {"hidden_dim", spec.hidden_dim},   {"n_layers", spec.n_layers},
                   {"n_subjects", spec.n_subjects},   {"tr_seconds", spec.tr_seconds},
                   {"duration_s", spec.duration_s},   {"lag_s", spec.lag_s},
                   {"noise_sigma", spec.noise_sigma}, {"signal_sigma", spec.signal_sigma},
                   {"seed", spec.seed}};
  write_text_file(paths.truth_file, truth.dump(2) + "\n");
  return paths;
}

}  // namespace brainscore

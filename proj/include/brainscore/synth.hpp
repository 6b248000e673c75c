#pragma once

// Synthetic datasets with a known linear ground truth.
//
// Layer 0 activations are i.i.d. standard normal; every other layer is a
// random orthogonal rotation of layer 0, so targets are an exact linear map of
// every layer. Each scenario's lagged window is filled with
// X0 W0 + noise_sigma * N(0, 1); every other volume is pure noise.

#include "brainscore/dataio.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

namespace brainscore {

struct SynthSpec {
  int n_scenarios = 400;
  int n_parcels = 128;
  int hidden_dim = 64;
  int n_layers = 3;
  int n_subjects = 1;
  double tr_seconds = 2.0;
  double duration_s = 8.0;
  double lag_s = 6.0;
  double noise_sigma = 0.0;
  double signal_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthDataset {
  ActivationBundle bundle;
  std::vector<ScanData> subjects;
  FloatMatrix w0;         // [hidden_dim x n_parcels], applies to layer 0
  FloatMatrix noiseless;  // [n_scenarios x n_parcels] = X0 W0
};

/// Independent generator stream `stream` derived from the user seed.
std::mt19937_64 derived_rng(std::uint64_t seed, std::uint64_t stream);

SynthDataset make_synthetic(const SynthSpec& spec);

/// X W accumulated in double over k, rounded once to float.
FloatMatrix noiseless_targets(const FloatMatrix& x, const FloatMatrix& w);

struct SynthPaths {
  std::filesystem::path bundle_dir;
  std::vector<std::filesystem::path> scan_dirs;
  std::filesystem::path truth_file;
  std::filesystem::path terms_dir;
  std::filesystem::path atlas_file;
};

/// Writes bundle/, scans/sub-XX/, truth.json (+ w0.f32, expected_noiseless.f32),
/// terms/*.json and atlas.tsv under out_dir.
SynthPaths generate(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Each vertex references 1-3 parcels; round(overlap * n_vertices) of them
/// reference at least two.
AtlasProjection gen_toy_atlas(int n_vertices, int n_parcels, double overlap, std::uint64_t seed);

/// Term maps for theory-of-mind, moral, language and vision (the control group).
std::vector<TermMap> gen_term_maps(int n_parcels, std::uint64_t seed);

}  // namespace brainscore

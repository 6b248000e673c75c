#include "brainscore/cli.hpp"

#include "brainscore/dataio.hpp"
#include "brainscore/pipeline.hpp"
#include "brainscore/sampling.hpp"
#include "brainscore/scoring.hpp"
#include "brainscore/stats.hpp"
#include "brainscore/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <sstream>

namespace brainscore {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

fs::path require_out(const GlobalOptions& g) {
  if (g.out.empty()) throw InputError("--out is required for this subcommand");
  return fs::path(g.out);
}

void write_run_config(const fs::path& dir, json config) {
  write_text_file(dir / "run_config.json", config.dump(2) + "\n");
}

std::vector<double> parse_lambda_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    grid.push_back(parse_double(item, "--lambda-grid"));
  }
  if (grid.empty()) throw InputError("--lambda-grid is empty");
  return grid;
}

std::vector<ScanData> load_scan_set(const std::vector<std::string>& paths) {
  std::vector<ScanData> scans;
  for (const auto& p : paths) {
    const fs::path path(p);
    std::error_code ec;
    if (!fs::exists(path, ec)) throw InputError("missing scan path '" + p + "'");
    if (fs::is_regular_file(path / "meta.json", ec)) {
      scans.push_back(load_scan(path));
      continue;
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_directory() && fs::is_regular_file(entry.path() / "meta.json")) {
        dirs.push_back(entry.path());
      }
    }
    if (dirs.empty()) throw InputError("no scan directories found under '" + p + "'");
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) scans.push_back(load_scan(d));
  }
  for (std::size_t i = 0; i < scans.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (scans[i].scan.subject_id == scans[j].scan.subject_id) {
        throw InputError("duplicate subject_id '" + scans[i].scan.subject_id + "' in scan set");
      }
    }
  }
  return scans;
}

std::vector<TermMap> load_terms(const std::vector<std::string>& paths) {
  std::vector<TermMap> terms;
  for (const auto& p : paths) terms.push_back(load_term_map(p));
  return terms;
}

std::string format_parcel_scores(const ParcelScores& scores) {
  std::string out = "parcel_id\tvalue\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += std::to_string(i) + '\t' + (scores[i] ? fixed6(*scores[i]) : std::string("NA")) + '\n';
  }
  return out;
}

ParcelScores load_parcel_scores(const fs::path& file) {
  std::istringstream in(read_text_file(file));
  std::string line;
  if (!std::getline(in, line) || line != "parcel_id\tvalue") {
    throw InputError("'" + file.string() + "': expected header 'parcel_id\tvalue'");
  }
  ParcelScores scores;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = "'" + file.string() + "':" + std::to_string(line_no);
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError(where + ": expected 2 tab-separated fields");
    const auto id = parse_int(std::string_view(line).substr(0, tab), where + " parcel_id");
    if (id != static_cast<long long>(scores.size())) {
      throw InputError(where + ": parcel ids must run 0, 1, 2, ... in order");
    }
    const auto value = std::string_view(line).substr(tab + 1);
    if (value == "NA") {
      scores.emplace_back(std::nullopt);
    } else {
      scores.emplace_back(parse_double(value, where + " value"));
    }
  }
  if (scores.empty()) throw InputError("'" + file.string() + "': no parcel scores");
  return scores;
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string bundle;
  std::vector<std::string> scans;
  std::string strategy = "LAST";
  double lag = kDefaultLagSeconds;
  std::string lambda_grid = "1e-3,1e-1,1e1,1e3,1e5";
  int folds = 5;
  std::string metric = "pcc";
  std::vector<std::string> roi;
  std::vector<std::string> terms;
  bool permute = false;
};

int cmd_score(const ScoreArgs& a, const GlobalOptions& g, std::ostream& out) {
  const auto out_dir = require_out(g);
  ScoreConfig config;
  config.sampling = {parse_strategy(a.strategy), a.lag};
  config.lambda_grid = parse_lambda_grid(a.lambda_grid);
  config.folds = a.folds;
  config.seed = g.seed;
  config.metric = parse_metric(a.metric);
  config.terms = load_terms(a.terms);
  config.permute_targets = a.permute;
  config.threads = g.threads;
  for (const auto& r : a.roi) {
    if (r != kAllParcelsRoi) throw InputError("unknown --roi '" + r + "' (only 'all' is accepted)");
  }
  config.include_all_parcels = !a.roi.empty() || a.terms.empty();

  const auto bundle = load_activation_bundle(a.bundle);
  const auto scans = load_scan_set(a.scans);
  const auto result = run_scoring(bundle, scans, config);

  fs::create_directories(out_dir);
  write_score_table(result.per_subject, out_dir / "scores.tsv");
  write_score_table(result.per_layer, out_dir / "layer_scores.tsv");
  write_score_table(result.model, out_dir / "model_scores.tsv");
  write_text_file(out_dir / "parcel_scores.tsv", format_parcel_scores(result.mean_parcel));

  std::string lambdas = "subject_id\tlayer\tfold\tlambda\n";
  for (std::size_t task = 0; task < result.selected_lambda.size(); ++task) {
    const auto& subject = scans[task / bundle.layers.size()].scan.subject_id;
    const int layer = bundle.layers[task % bundle.layers.size()].index;
    for (std::size_t f = 0; f < result.selected_lambda[task].size(); ++f) {
      lambdas += subject + '\t' + std::to_string(layer) + '\t' + std::to_string(f) + '\t' +
                 shortest(result.selected_lambda[task][f]) + '\n';
    }
  }
  write_text_file(out_dir / "selected_lambda.tsv", lambdas);

  json terms = json::array();
  for (const auto& p : a.terms) terms.push_back(p);
  json scans_json = json::array();
  for (const auto& p : a.scans) scans_json.push_back(p);
  json subjects = json::array();
  for (const auto& s : scans) subjects.push_back(s.scan.subject_id);
  write_run_config(out_dir, {{"subcommand", "score"},
                             {"bundle", a.bundle},
                             {"scans", scans_json},
                             {"subjects", subjects},
                             {"strategy", std::string(to_string(config.sampling.strategy))},
                             {"lag_s", config.sampling.lag_s},
                             {"lambda_grid", config.lambda_grid},
                             {"folds", config.folds},
                             {"seed", config.seed},
                             {"fold_seed", config.seed},
                             {"metric", to_string(config.metric)},
                             {"roi_all", config.include_all_parcels},
                             {"terms", terms},
                             {"permute_targets", config.permute_targets},
                             {"permutation_seed_rule", "seed + 1 + subject_position"},
                             {"aggregation", "score_mean/score_std pooled over subject x layer "
                                             "layer-scores; std is the sample std"}});
  out << format_score_table(result.model);
  return kExitOk;
}

struct CompareArgs {
  std::string base;
  std::string tuned;
  std::vector<std::string> terms;
  double alpha = 0.05;
  std::string metric = "pcc";
};

int cmd_compare(const CompareArgs& a, const GlobalOptions& g, std::ostream& out) {
  const auto out_dir = require_out(g);
  const auto metric = parse_metric(a.metric);
  const auto base = load_score_table(a.base, metric);
  const auto tuned = load_score_table(a.tuned, metric);
  const auto terms = load_terms(a.terms);
  const auto results = compare_conditions(base, tuned, terms, a.alpha);
  const auto text = format_comparison(results);
  write_text_file(out_dir / "comparison.tsv", text);
  json term_paths = json::array();
  for (const auto& p : a.terms) term_paths.push_back(p);
  write_run_config(out_dir, {{"subcommand", "compare"},
                             {"base", a.base},
                             {"tuned", a.tuned},
                             {"terms", term_paths},
                             {"alpha", a.alpha},
                             {"metric", to_string(metric)},
                             {"test", "paired one-tailed Student t, tuned > base"},
                             {"correction", "bonferroni"},
                             {"m", static_cast<int>(terms.size())}});
  out << text;
  return kExitOk;
}

struct ProjectArgs {
  std::string scores;
  std::string atlas;
  std::string transform = "none";
  std::string metric = "cod";
  std::string roi = "all";
};

int cmd_project(const ProjectArgs& a, const GlobalOptions& g, std::ostream& out) {
  if (a.transform != "none" && a.transform != "neglog10") {
    throw InputError("unknown --transform '" + a.transform + "' (expected none or neglog10)");
  }
  const auto out_dir = require_out(g);
  const auto metric = parse_metric(a.metric);
  auto scores = load_parcel_scores(a.scores);
  const auto atlas = load_atlas(a.atlas, static_cast<Index>(scores.size()));
  std::string tag = kIdentityTransformTag;
  if (a.transform == "neglog10") {
    for (auto& s : scores) {
      if (s) s = cod_transform(*s);
    }
    tag = kCodTransformTag;
  }
  auto map = project_to_vertices(scores, atlas);
  map.transform = tag;

  std::string text = "vertex_id\tvalue\n";
  for (const auto& [vertex, value] : map.values) {
    text += std::to_string(vertex) + '\t' + fixed6(value) + '\n';
  }
  write_text_file(out_dir / "vertex_map.tsv", text);
  json sidecar = {{"transform", map.transform},
                  {"metric", to_string(metric)},
                  {"roi_set", a.roi},
                  {"aggregation", "per-parcel mean over subject x layer scores; vertex value is "
                                  "the atlas-weighted average of non-missing parcels"},
                  {"n_vertices", map.values.size()}};
  write_text_file(out_dir / "vertex_map.json", sidecar.dump(2) + "\n");
  write_run_config(out_dir, {{"subcommand", "project"},
                             {"scores", a.scores},
                             {"atlas", a.atlas},
                             {"transform", a.transform},
                             {"metric", to_string(metric)},
                             {"roi", a.roi}});
  out << "projected " << map.values.size() << " vertices (" << map.transform << ")\n";
  return kExitOk;
}

struct SampleArgs {
  std::string scan;
  std::string strategy = "LAST";
  double lag = kDefaultLagSeconds;
};

int cmd_sample(const SampleArgs& a, const GlobalOptions& g, std::ostream& out) {
  const auto data = load_scan(a.scan);
  const SamplingSpec spec{parse_strategy(a.strategy), a.lag};
  std::string text = "example_id\tscenario_id\tsub_index\tvolumes";
  for (Index p = 0; p < data.scan.n_parcels(); ++p) text += "\tp" + std::to_string(p);
  text += '\n';
  for (const auto& ev : data.events) {
    const auto volumes = sample_volumes(data.scan, ev, spec);
    const auto vectors = sample_event(data.scan, ev, spec);
    for (std::size_t k = 0; k < volumes.size(); ++k) {
      std::string vols;
      for (std::size_t i = 0; i < volumes[k].size(); ++i) {
        if (i) vols += ';';
        vols += std::to_string(volumes[k][i]);
      }
      text += ev.example_id + '\t' + ev.scenario_id + '\t' + std::to_string(k) + '\t' + vols;
      for (Index p = 0; p < vectors[k].size(); ++p) text += '\t' + fixed6(vectors[k](p));
      text += '\n';
    }
  }
  if (g.out.empty()) {
    out << text;
  } else {
    const fs::path out_dir(g.out);
    write_text_file(out_dir / "samples.tsv", text);
    write_run_config(out_dir, {{"subcommand", "sample"},
                               {"scan", a.scan},
                               {"strategy", std::string(to_string(spec.strategy))},
                               {"lag_s", spec.lag_s}});
    out << "wrote " << (out_dir / "samples.tsv").string() << '\n';
  }
  return kExitOk;
}

void validate_dataset_root(const fs::path& root, std::ostream& out) {
  const auto bundle = load_activation_bundle(root / "bundle");
  out << "OK: bundle " << (root / "bundle").string() << '\n';
  const auto scans = load_scan_set({(root / "scans").string()});
  for (const auto& s : scans) {
    for (const auto& ev : s.events) {
      if (std::find(bundle.example_ids.begin(), bundle.example_ids.end(), ev.example_id) ==
          bundle.example_ids.end()) {
        throw InputError("scan '" + s.scan.subject_id + "': example_id '" + ev.example_id +
                         "' not in bundle");
      }
    }
    out << "OK: scan " << s.scan.subject_id << '\n';
  }
  const Index n_parcels = scans.front().scan.n_parcels();
  if (fs::is_directory(root / "terms")) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(root / "terms")) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto t = load_term_map(f);
      if (static_cast<Index>(t.weights.size()) != n_parcels) {
        throw InputError("'" + f.string() + "': term map length does not match scans");
      }
      out << "OK: term map " << t.term << '\n';
    }
  }
  if (fs::is_regular_file(root / "atlas.tsv")) {
    load_atlas(root / "atlas.tsv", n_parcels);
    out << "OK: atlas " << (root / "atlas.tsv").string() << '\n';
  }
}

int cmd_validate(const std::string& path_text, Index n_parcels, std::ostream& out) {
  const fs::path path(path_text);
  std::error_code ec;
  if (!fs::exists(path, ec)) throw InputError("missing path '" + path_text + "'");
  if (fs::is_directory(path)) {
    if (fs::is_regular_file(path / "manifest.json")) {
      load_activation_bundle(path);
      out << "OK: bundle " << path_text << '\n';
    } else if (fs::is_regular_file(path / "meta.json")) {
      load_scan(path);
      out << "OK: scan " << path_text << '\n';
    } else if (fs::is_directory(path / "bundle")) {
      validate_dataset_root(path, out);
    } else {
      throw InputError("'" + path_text + "': not a bundle, scan or dataset directory");
    }
  } else if (path.extension() == ".json") {
    load_term_map(path);
    out << "OK: term map " << path_text << '\n';
  } else {
    const auto text = read_text_file(path);
    if (text.rfind("vertex_id\tparcel_id\tweight", 0) == 0) {
      load_atlas(path, n_parcels);
      out << "OK: atlas " << path_text << '\n';
    } else if (text.rfind("model_id\t", 0) == 0) {
      load_score_table(path);
      out << "OK: score table " << path_text << '\n';
    } else {
      throw InputError("'" + path_text + "': unrecognized file type");
    }
  }
  out << "OK\n";
  return kExitOk;
}

int cmd_gen_synthetic(SynthSpec spec, const GlobalOptions& g, std::ostream& out) {
  const auto out_dir = require_out(g);
  spec.seed = g.seed;
  const auto paths = generate(spec, out_dir);
  write_run_config(out_dir, {{"subcommand", "gen-synthetic"},
                             {"n_scenarios", spec.n_scenarios},
                             {"n_parcels", spec.n_parcels},
                             {"hidden_dim", spec.hidden_dim},
                             {"n_layers", spec.n_layers},
                             {"n_subjects", spec.n_subjects},
                             {"tr_seconds", spec.tr_seconds},
                             {"duration_s", spec.duration_s},
                             {"lag_s", spec.lag_s},
                             {"noise_sigma", spec.noise_sigma},
                             {"signal_sigma", spec.signal_sigma},
                             {"seed", spec.seed},
                             {"seed_streams", "activations 1, w0 2, rotations 3, atlas 4, "
                                              "term maps 10+t, subject noise 100+s"}});
  out << "wrote bundle " << paths.bundle_dir.string() << " and " << paths.scan_dirs.size()
      << " scan(s)\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Brain-score engine: encoding-model alignment between model activations and "
               "parcellated fMRI"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Seed for every random choice (folds, permutations, data)");
  app.add_option("--threads", g.threads, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Cross-validated brain scores per subject/layer/ROI");
  score_cmd->add_option("--bundle", score.bundle, "Activation bundle directory")->required();
  score_cmd->add_option("--scans", score.scans, "Scan directories, or directories of scans")
      ->required();
  score_cmd->add_option("--strategy", score.strategy, "AVG, LAST, MIDDLE or SENTENCES");
  score_cmd->add_option("--lag", score.lag, "Hemodynamic lag in seconds");
  score_cmd->add_option("--lambda-grid", score.lambda_grid, "Comma-separated ridge penalties");
  score_cmd->add_option("--folds", score.folds, "Cross-validation folds");
  score_cmd->add_option("--metric", score.metric, "pcc or cod");
  score_cmd->add_option("--roi", score.roi, "'all' adds the whole-brain group");
  score_cmd->add_option("--term", score.terms, "Term-map JSON files (ROI groups)");
  score_cmd->add_flag("--permute", score.permute, "Shuffle targets within folds (null run)");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "One-tailed Bonferroni comparison of two tables");
  compare_cmd->add_option("--base", compare.base, "Baseline score table")->required();
  compare_cmd->add_option("--tuned", compare.tuned, "Fine-tuned score table")->required();
  compare_cmd->add_option("--term", compare.terms, "Term-map JSON files")->required();
  compare_cmd->add_option("--alpha", compare.alpha, "Family-wise significance level");
  compare_cmd->add_option("--metric", compare.metric, "pcc or cod");

  ProjectArgs project;
  auto* project_cmd = app.add_subcommand("project", "Project parcel scores onto surface vertices");
  project_cmd->add_option("--scores", project.scores, "parcel_scores.tsv")->required();
  project_cmd->add_option("--atlas", project.atlas, "atlas.tsv")->required();
  project_cmd->add_option("--transform", project.transform, "none or neglog10");
  project_cmd->add_option("--metric", project.metric, "Metric of the parcel scores");
  project_cmd->add_option("--roi", project.roi, "ROI label recorded in the sidecar");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample", "Dump sampled volume indices and target vectors");
  sample_cmd->add_option("--scan", sample.scan, "Scan directory")->required();
  sample_cmd->add_option("--strategy", sample.strategy, "AVG, LAST, MIDDLE or SENTENCES");
  sample_cmd->add_option("--lag", sample.lag, "Hemodynamic lag in seconds");

  std::string validate_path;
  long long validate_parcels = kDefaultParcels;
  auto* validate_cmd = app.add_subcommand("validate", "Validate a bundle, scan, map or dataset");
  validate_cmd->add_option("path", validate_path, "Path to validate")->required();
  validate_cmd->add_option("--n-parcels", validate_parcels, "Parcel count for atlas checks");

  SynthSpec synth;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic dataset with known truth");
  gen_cmd->add_option("--n-scenarios", synth.n_scenarios);
  gen_cmd->add_option("--n-parcels", synth.n_parcels);
  gen_cmd->add_option("--hidden-dim", synth.hidden_dim);
  gen_cmd->add_option("--n-layers", synth.n_layers);
  gen_cmd->add_option("--n-subjects", synth.n_subjects);
  gen_cmd->add_option("--tr", synth.tr_seconds);
  gen_cmd->add_option("--duration", synth.duration_s);
  gen_cmd->add_option("--lag", synth.lag_s);
  gen_cmd->add_option("--noise-sigma", synth.noise_sigma);
  gen_cmd->add_option("--signal-sigma", synth.signal_sigma);

  std::vector<std::string> argv_store(args);
  if (argv_store.empty()) argv_store.emplace_back("brainscore");
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  try {
    if (*score_cmd) return cmd_score(score, g, out);
    if (*compare_cmd) return cmd_compare(compare, g, out);
    if (*project_cmd) return cmd_project(project, g, out);
    if (*sample_cmd) return cmd_sample(sample, g, out);
    if (*validate_cmd) return cmd_validate(validate_path, validate_parcels, out);
    if (*gen_cmd) return cmd_gen_synthetic(synth, g, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInput;
}

}  // namespace brainscore

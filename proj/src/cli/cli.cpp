#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "encmap/binary_io.hpp"
#include "encmap/distance.hpp"
#include "encmap/embedding_io.hpp"
#include "encmap/error.hpp"
#include "encmap/prediction.hpp"
#include "encmap/projection.hpp"
#include "encmap/qre.hpp"
#include "encmap/report.hpp"
#include "encmap/rng.hpp"
#include "encmap/spectral.hpp"
#include "encmap/synthetic.hpp"
#include "manifest.hpp"
#include "parallel.hpp"

namespace fs = std::filesystem;

namespace encmap::cli {

namespace {

struct CommonOptions {
  std::string output_dir = ".";
  int jobs = 1;
  bool force = false;
};

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::parameter:
    case ErrorKind::lookup:
      return kInvalidInvocation;
    default:
      return kDataError;
  }
}

void log_error(const std::string& message) { std::cerr << "encmap: " << message << '\n'; }

fs::path prepare_output_dir(const CommonOptions& common) {
  fs::path dir(common.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json_sidecar(const fs::path& artifact, nlohmann::json doc, const RunManifest& manifest) {
  doc["manifest"] = manifest.reference();
  write_sidecar(artifact, doc);
}

void reject_duplicate_stems(const std::vector<std::string>& inputs) {
  std::set<std::string> stems;
  for (const auto& in : inputs) {
    if (!stems.insert(fs::path(in).stem().string()).second) {
      throw Error(ErrorKind::parameter, "two inputs share the file stem '" + fs::path(in).stem().string() +
                                            "'; outputs would collide");
    }
  }
}

std::optional<EncoderRecord> record_from_sidecar(const nlohmann::json& meta) {
  if (!meta.is_object()) return std::nullopt;
  if (meta.contains("record") && meta["record"].is_object()) return encoder_record_from_json(meta["record"]);
  if (meta.contains("encoder_id")) return encoder_record_from_json(meta);
  return std::nullopt;
}

// An embedding file plus its sidecar, turned into a spectrum.
struct LoadedSpectrum {
  DensitySpectrum spectrum;
  std::optional<EncoderRecord> record;
};

LoadedSpectrum spectrum_from_embedding(const fs::path& path, double rank_tol, bool normalize) {
  auto matrix = read_embedding_matrix(path);
  const auto meta = read_sidecar(path);
  auto record = record_from_sidecar(meta);
  if (record) {
    check_record_matches(*record, matrix);
    if (!record->encoder_id.empty()) matrix = matrix.with_id(record->encoder_id);
  }
  if (normalize) matrix = l2_normalize_rows(matrix);
  return {compute_spectrum(matrix, rank_tol), std::move(record)};
}

LoadedSpectrum load_spectrum_input(const fs::path& path, double rank_tol, bool normalize) {
  const auto magic = detail::read_magic(path);
  if (magic == "EMAP") return spectrum_from_embedding(path, rank_tol, normalize);
  if (magic == "ESPC") {
    auto spectrum = read_spectrum(path);
    return {std::move(spectrum), record_from_sidecar(read_sidecar(path))};
  }
  throw Error(ErrorKind::format, path.string() + ": not an embedding (EMAP) or spectrum (ESPC) file");
}

// Runs `body` on every input, collecting per-file failures. Returns the exit code.
int for_each_input(const std::vector<std::string>& inputs, int jobs, RunManifest& manifest,
                   const std::function<void(std::size_t)>& body) {
  std::vector<std::string> failures(inputs.size());
  std::vector<int> codes(inputs.size(), kSuccess);
  parallel_for(inputs.size(), jobs, [&](std::size_t i) {
    try {
      body(i);
    } catch (const Error& e) {
      failures[i] = inputs[i] + ": " + e.what();
      codes[i] = exit_code_for(e);
    }
  });
  std::size_t failed = 0;
  int worst = kSuccess;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (failures[i].empty()) continue;
    ++failed;
    worst = std::max(worst, codes[i]);
    log_error(failures[i]);
    manifest.add_error(failures[i]);
  }
  if (failed == 0) return kSuccess;
  return failed < inputs.size() ? kPartialFailure : worst;
}

std::vector<FeatureVector> load_features(const std::vector<std::string>& inputs,
                                         std::vector<EncoderRecord>* records = nullptr) {
  std::vector<FeatureVector> out;
  std::set<std::string> seen;
  for (const auto& in : inputs) {
    auto fv = read_feature_vector(in);
    if (!seen.insert(fv.encoder_id).second) {
      throw Error(ErrorKind::validation, "duplicate encoder id " + fv.encoder_id);
    }
    if (records != nullptr) {
      auto record = record_from_sidecar(read_sidecar(in));
      if (!record) {
        record = EncoderRecord{};
        record->encoder_id = fv.encoder_id;
      }
      record->encoder_id = fv.encoder_id;
      records->push_back(std::move(*record));
    }
    out.push_back(std::move(fv));
  }
  return out;
}

// Distances come either from a single CSV or from feature vectors.
DistanceMatrix load_distances(const std::vector<std::string>& inputs, bool force) {
  if (inputs.size() == 1 && fs::path(inputs[0]).extension() == ".csv") return read_distance_csv(inputs[0]);
  const auto features = load_features(inputs);
  return pairwise_distances(features, force);
}

// Runs a subcommand body; a failure that aborts the whole command is still
// recorded in the manifest before it propagates.
template <typename Body>
int with_manifest(RunManifest& manifest, Body body) {
  try {
    return body();
  } catch (const Error& e) {
    manifest.add_error(e.what());
    manifest.write(exit_code_for(e));
    throw;
  }
}

nlohmann::json common_params(const CommonOptions& common) {
  return {{"output_dir", common.output_dir}, {"jobs", common.jobs}, {"force", common.force}};
}

// ---------------------------------------------------------------- spectrum

struct SpectrumOptions {
  std::vector<std::string> inputs;
  double rank_tol = kDefaultRankTolerance;
  bool normalize = false;
};

int cmd_spectrum(const SpectrumOptions& opt, const CommonOptions& common) {
  reject_duplicate_stems(opt.inputs);
  const auto dir = prepare_output_dir(common);
  RunManifest manifest("spectrum", dir);
  return with_manifest(manifest, [&] {
    manifest.parameters() = common_params(common);
    manifest.parameters()["rank_tol"] = opt.rank_tol;
    manifest.parameters()["normalize"] = opt.normalize;
    for (const auto& in : opt.inputs) manifest.add_input(in);

    std::vector<fs::path> written(opt.inputs.size());
    const int code = for_each_input(opt.inputs, common.jobs, manifest, [&](std::size_t i) {
      const fs::path in(opt.inputs[i]);
      if (detail::read_magic(in) != "EMAP") throw Error(ErrorKind::format, "expected an EMAP embedding file");
      auto loaded = spectrum_from_embedding(in, opt.rank_tol, opt.normalize);
      const auto out = dir / (in.stem().string() + ".espc");
      write_spectrum(loaded.spectrum, out);
      auto meta = spectrum_sidecar(loaded.spectrum);
      if (loaded.record) meta["record"] = to_json(*loaded.record);
      write_json_sidecar(out, meta, manifest);
      written[i] = out;
    });
    for (const auto& w : written) {
      if (!w.empty()) manifest.add_output(w);
    }
    manifest.write(code);
    return code;
  });
}

// ---------------------------------------------------------------- features

struct FeaturesOptions {
  std::vector<std::string> inputs;
  double epsilon = kDefaultEpsilon;
  double rank_tol = kDefaultRankTolerance;
  bool normalize = false;
};

int cmd_features(const FeaturesOptions& opt, const CommonOptions& common) {
  reject_duplicate_stems(opt.inputs);
  const auto dir = prepare_output_dir(common);
  RunManifest manifest("features", dir);
  return with_manifest(manifest, [&] {
    manifest.parameters() = common_params(common);
    manifest.parameters()["epsilon"] = opt.epsilon;
    manifest.parameters()["rank_tol"] = opt.rank_tol;
    manifest.parameters()["normalize"] = opt.normalize;
    for (const auto& in : opt.inputs) manifest.add_input(in);

    std::vector<fs::path> written(opt.inputs.size());
    const int code = for_each_input(opt.inputs, common.jobs, manifest, [&](std::size_t i) {
      const fs::path in(opt.inputs[i]);
      auto loaded = load_spectrum_input(in, opt.rank_tol, opt.normalize);
      const auto features = feature_vector(loaded.spectrum, opt.epsilon);
      const auto out = dir / (in.stem().string() + ".efvc");
      write_feature_vector(features, out);
      auto meta = feature_sidecar(features);
      if (loaded.record) meta["record"] = to_json(*loaded.record);
      write_json_sidecar(out, meta, manifest);
      written[i] = out;
    });
    for (const auto& w : written) {
      if (!w.empty()) manifest.add_output(w);
    }
    manifest.write(code);
    return code;
  });
}

// ---------------------------------------------------------------- map

struct MapOptions {
  std::vector<std::string> inputs;
  std::optional<double> perplexity;
  int iterations = 1000;
  double learning_rate = 200.0;
  std::uint64_t seed = 0;
  std::vector<std::string> color_by{"encoder_type"};
  std::vector<std::string> highlight;
  std::vector<double> crop;
  std::string prefix = "map";
  std::string title = "Map of encoders";
};

double effective_perplexity(const std::optional<double>& requested, Eigen::Index m) {
  if (requested) return *requested;
  constexpr double kDefault = 30.0;
  const double upper = static_cast<double>(m - 1);
  if (kDefault < upper) return kDefault;
  const double third = upper / 3.0;
  return third > 1.0 ? third : upper / 2.0;
}

int cmd_map(const MapOptions& opt, const CommonOptions& common) {
  const auto dir = prepare_output_dir(common);
  RunManifest manifest("map", dir);
  return with_manifest(manifest, [&] {
    for (const auto& in : opt.inputs) manifest.add_input(in);

    std::vector<EncoderRecord> records;
    const auto features = load_features(opt.inputs, &records);
    const auto distances = pairwise_distances(features, common.force);

    TsneParams params;
    params.perplexity = effective_perplexity(opt.perplexity, distances.size());
    params.iterations = opt.iterations;
    params.learning_rate = opt.learning_rate;
    params.seed = opt.seed;

    manifest.parameters() = common_params(common);
    manifest.parameters()["tsne"] = {{"perplexity", params.perplexity},
                                     {"iterations", params.iterations},
                                     {"learning_rate", params.learning_rate},
                                     {"seed", params.seed}};
    manifest.parameters()["color_by"] = opt.color_by;
    manifest.parameters()["prefix"] = opt.prefix;
    if (!features.empty()) {
      const auto& p = features.front().provenance;
      manifest.parameters()["provenance"] = {
          {"epsilon", p.epsilon}, {"rank_tolerance", p.rank_tolerance}, {"normalized", p.normalized}};
    }

    const auto dist_path = dir / "distances.csv";
    write_distance_csv(distances, dist_path);
    write_json_sidecar(dist_path, {{"metric", "l1"}}, manifest);
    manifest.add_output(dist_path);

    const auto layout = tsne(distances, params);
    const auto layout_path = dir / "layout.csv";
    write_layout_csv(layout, layout_path);
    write_json_sidecar(layout_path, {{"params", layout_params_json(layout)}}, manifest);
    manifest.add_output(layout_path);

    std::optional<BoundingBox> crop;
    if (!opt.crop.empty()) {
      if (opt.crop.size() != 4) throw Error(ErrorKind::parameter, "--crop takes x_min,x_max,y_min,y_max");
      crop = BoundingBox{opt.crop[0], opt.crop[1], opt.crop[2], opt.crop[3]};
    }
    for (const auto& field : opt.color_by) {
      PlotSpec spec{layout, records, field, opt.highlight, opt.title, std::nullopt};
      const auto path = dir / (opt.prefix + "_" + field + ".svg");
      render_scatter(spec, path);
      write_json_sidecar(path, {{"color_by", field}}, manifest);
      manifest.add_output(path);
      if (crop) {
        spec.crop = crop;
        const auto crop_path = dir / (opt.prefix + "_" + field + "_crop.svg");
        render_scatter(spec, crop_path);
        write_json_sidecar(crop_path, {{"color_by", field}, {"crop", opt.crop}}, manifest);
        manifest.add_output(crop_path);
      }
    }
    manifest.write(kSuccess);
    return kSuccess;
  });
}

// ---------------------------------------------------------------- neighbors

struct NeighborsOptions {
  std::vector<std::string> inputs;
  std::string target;
  long k = 5;
};

int cmd_neighbors(const NeighborsOptions& opt, const CommonOptions& common) {
  const auto dir = prepare_output_dir(common);
  RunManifest manifest("neighbors", dir);
  return with_manifest(manifest, [&] {
    manifest.parameters() = common_params(common);
    manifest.parameters()["target"] = opt.target;
    manifest.parameters()["k"] = opt.k;
    for (const auto& in : opt.inputs) manifest.add_input(in);

    const auto distances = load_distances(opt.inputs, common.force);
    const auto neighbors = nearest_neighbors(distances, opt.target, opt.k);

    std::string table = "rank,encoder_id,distance\n";
    char buf[64];
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12f", neighbors[i].distance);
      table += std::to_string(i + 1) + "," + neighbors[i].encoder_id + "," + buf + "\n";
    }
    std::cout << table;
    const auto path = dir / ("neighbors_" + fs::path(opt.target).filename().string() + ".csv");
    detail::write_text_atomic(path, table);
    write_json_sidecar(path, {{"target", opt.target}}, manifest);
    manifest.add_output(path);
    manifest.write(kSuccess);
    return kSuccess;
  });
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  long dim = 500;
  std::vector<std::string> groups;
  double noise_scale = 0.5;
  std::uint64_t seed = 0;
};

NoiseGroup parse_group(const std::string& text) {
  NoiseGroup g;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &g.sigma2_low, &g.sigma2_high, &g.count, &tail) != 3) {
    throw Error(ErrorKind::parameter, "--group expects LOW:HIGH:COUNT, got '" + text + "'");
  }
  return g;
}

int cmd_synth(const SynthOptions& opt, const CommonOptions& common) {
  const auto dir = prepare_output_dir(common);
  SyntheticSpec spec;
  spec.ambient_dim = opt.dim;
  spec.noise_scale = opt.noise_scale;
  spec.seed = opt.seed;
  if (!opt.groups.empty()) {
    spec.groups.clear();
    for (const auto& g : opt.groups) spec.groups.push_back(parse_group(g));
  }
  spec.validate();

  RunManifest manifest("synth", dir);
  return with_manifest(manifest, [&] {
    manifest.parameters() = common_params(common);
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : spec.groups) groups.push_back({{"sigma2_range", {g.sigma2_low, g.sigma2_high}}, {"count", g.count}});
    manifest.parameters()["dim"] = spec.ambient_dim;
    manifest.parameters()["groups"] = groups;
    manifest.parameters()["noise_scale"] = spec.noise_scale;
    manifest.parameters()["seed"] = spec.seed;
    manifest.parameters()["rng"] = std::string(Rng::algorithm);

    const auto encoders = generate(spec);
    std::vector<fs::path> written(encoders.size());
    parallel_for(encoders.size(), common.jobs, [&](std::size_t i) {
      const auto& e = encoders[i];
      const auto path = dir / (e.matrix.encoder_id() + ".emap");
      write_embedding_matrix(e.matrix, path);
      EncoderRecord record;
      record.encoder_id = e.matrix.encoder_id();
      record.encoder_type = "synthetic";
      record.dimensionality = e.matrix.n_cols();
      record.attributes["group_label"] = "group" + std::to_string(e.group);
      char sigma[32];
      std::snprintf(sigma, sizeof sigma, "%.6f", e.sigma2);
      record.attributes["sigma2"] = sigma;
      auto meta = to_json(record);
      meta["provenance"] = {{"group", e.group},
                            {"sigma2", e.sigma2},
                            {"seed", spec.seed},
                            {"matrix_seed", e.seed},
                            {"noise_scale", spec.noise_scale},
                            {"normalized", false},
                            {"rng", std::string(Rng::algorithm)}};
      write_json_sidecar(path, meta, manifest);
      written[i] = path;
    });
    for (const auto& w : written) manifest.add_output(w);
    manifest.write(kSuccess);
    return kSuccess;
  });
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
  std::vector<std::string> inputs;
  std::string scores;
  double l1_ratio = 0.5;
  int folds = 5;
  long pca_dim = 50;
  int n_alphas = 100;
  std::uint64_t seed = 0;
};

int cmd_predict(const PredictOptions& opt, const CommonOptions& common) {
  const auto dir = prepare_output_dir(common);
  RunManifest manifest("predict", dir);
  return with_manifest(manifest, [&] {
    manifest.parameters() = common_params(common);
    manifest.parameters()["l1_ratio"] = opt.l1_ratio;
    manifest.parameters()["folds"] = opt.folds;
    manifest.parameters()["pca_dim"] = opt.pca_dim;
    manifest.parameters()["n_alphas"] = opt.n_alphas;
    manifest.parameters()["seed"] = opt.seed;
    for (const auto& in : opt.inputs) manifest.add_input(in);
    manifest.add_input(opt.scores);

    const auto features = load_features(opt.inputs);
    for (std::size_t i = 1; i < features.size(); ++i) {
      if (!common.force) check_comparable(features.front(), features[i]);
    }
    const auto scores = read_scores_csv(opt.scores);

    PredictionOptions options;
    options.pca_dim = opt.pca_dim;
    options.cv.l1_ratio = opt.l1_ratio;
    options.cv.folds = opt.folds;
    options.cv.n_alphas = opt.n_alphas;
    options.cv.seed = opt.seed;
    const auto suite = run_prediction_suite(features, scores, options);
    for (const auto& w : suite.warnings) {
      log_error("warning: " + w);
      manifest.add_warning(w);
    }

    const auto report = dir / "prediction_report.csv";
    write_report_csv(suite, report);
    write_json_sidecar(report, {{"kind", "prediction_report"}}, manifest);
    manifest.add_output(report);
    const auto preds = dir / "oof_predictions.csv";
    write_predictions_csv(suite, preds);
    write_json_sidecar(preds, {{"kind", "oof_predictions"}}, manifest);
    manifest.add_output(preds);
    manifest.write(kSuccess);
    return kSuccess;
  });
}

// ---------------------------------------------------------------- cluster

struct ClusterOptions {
  std::vector<std::string> inputs;
  std::string linkage = "average";
  bool linear_heights = false;
  std::string prefix = "dendrogram";
};

int cmd_cluster(const ClusterOptions& opt, const CommonOptions& common) {
  const auto dir = prepare_output_dir(common);
  const auto linkage = parse_linkage(opt.linkage);
  RunManifest manifest("cluster", dir);
  return with_manifest(manifest, [&] {
    manifest.parameters() = common_params(common);
    manifest.parameters()["linkage"] = to_string(linkage);
    manifest.parameters()["log_heights"] = !opt.linear_heights;
    for (const auto& in : opt.inputs) manifest.add_input(in);

    const auto distances = load_distances(opt.inputs, common.force);
    const auto tree = hierarchical_cluster(distances, linkage);
    const auto newick = dir / (opt.prefix + ".nwk");
    detail::write_text_atomic(newick, tree.to_newick() + "\n");
    write_json_sidecar(newick, {{"linkage", to_string(linkage)}}, manifest);
    manifest.add_output(newick);
    const auto svg = dir / (opt.prefix + ".svg");
    render_dendrogram(tree, !opt.linear_heights, svg);
    write_json_sidecar(svg, {{"linkage", to_string(linkage)}, {"log_heights", !opt.linear_heights}}, manifest);
    manifest.add_output(svg);
    manifest.write(kSuccess);
    return kSuccess;
  });
}

void add_common(CLI::App* sub, CommonOptions& common, bool with_force) {
  sub->add_option("--output-dir", common.output_dir, "Directory for outputs")->envname("ENCMAP_OUTPUT_DIR");
  sub->add_option("--jobs", common.jobs, "Parallel workers over independent inputs")->check(CLI::PositiveNumber);
  if (with_force) sub->add_flag("--force", common.force, "Allow inputs with differing provenance");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"encmap: map sentence encoders by quantum relative entropy of their embedding spectra"};
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.set_version_flag("--version", ENCMAP_VERSION);

  CommonOptions common;

  SpectrumOptions spectrum;
  auto* s_spec = app.add_subcommand("spectrum", "Compute density spectra from embedding files");
  s_spec->add_option("inputs", spectrum.inputs, "Embedding files (.emap)")->required();
  s_spec->add_option("--rank-tol", spectrum.rank_tol, "Relative eigenvalue cutoff")->check(CLI::NonNegativeNumber);
  s_spec->add_flag("--normalize", spectrum.normalize, "L2-normalize rows before the spectrum");
  add_common(s_spec, common, false);

  FeaturesOptions features;
  auto* s_feat = app.add_subcommand("features", "Compute unit-base QRE feature vectors");
  s_feat->add_option("inputs", features.inputs, "Embedding (.emap) or spectrum (.espc) files")->required();
  s_feat->add_option("--epsilon", features.epsilon, "Null-space padding (default e^-12)")->check(CLI::PositiveNumber);
  s_feat->add_option("--rank-tol", features.rank_tol, "Relative eigenvalue cutoff")->check(CLI::NonNegativeNumber);
  s_feat->add_flag("--normalize", features.normalize, "L2-normalize rows before the spectrum");
  add_common(s_feat, common, false);

  MapOptions map;
  double perplexity = 0.0;
  auto* s_map = app.add_subcommand("map", "Pairwise l1 distances, t-SNE layout and scatter renders");
  s_map->add_option("inputs", map.inputs, "Feature vector files (.efvc)")->required();
  auto* perp_opt = s_map->add_option("--perplexity", perplexity, "t-SNE perplexity (default 30, reduced for small maps)");
  s_map->add_option("--iterations", map.iterations, "t-SNE iterations")->check(CLI::PositiveNumber);
  s_map->add_option("--learning-rate", map.learning_rate, "t-SNE learning rate")->check(CLI::PositiveNumber);
  s_map->add_option("--seed", map.seed, "t-SNE initialization seed");
  s_map->add_option("--color-by", map.color_by, "Record field(s) used for marker colors");
  s_map->add_option("--highlight", map.highlight, "Encoder ids to mark and label");
  s_map->add_option("--crop", map.crop, "Also render x_min x_max y_min y_max crop")->delimiter(',');
  s_map->add_option("--prefix", map.prefix, "Scatter file prefix");
  s_map->add_option("--title", map.title, "Scatter title");
  add_common(s_map, common, true);

  NeighborsOptions neighbors;
  auto* s_nn = app.add_subcommand("neighbors", "Nearest neighbours of one encoder by l1 distance");
  s_nn->add_option("inputs", neighbors.inputs, "Feature vectors (.efvc) or one distances .csv")->required();
  s_nn->add_option("--target", neighbors.target, "Encoder id to query")->required();
  s_nn->add_option("--k", neighbors.k, "Number of neighbours");
  add_common(s_nn, common, true);

  SynthOptions synth;
  auto* s_syn = app.add_subcommand("synth", "Generate noisy copies of the unit base embedding matrix");
  s_syn->add_option("--dim", synth.dim, "Ambient dimension N")->check(CLI::PositiveNumber);
  s_syn->add_option("--group", synth.groups, "Noise group LOW:HIGH:COUNT (repeatable)");
  s_syn->add_option("--noise-scale", synth.noise_scale, "Length of each noise step");
  s_syn->add_option("--seed", synth.seed, "Generation seed");
  add_common(s_syn, common, false);

  PredictOptions predict;
  auto* s_pred = app.add_subcommand("predict", "Predict task scores from feature vectors");
  s_pred->add_option("inputs", predict.inputs, "Feature vector files (.efvc)")->required();
  s_pred->add_option("--scores", predict.scores, "CSV of encoder_id,task_name,score")->required();
  s_pred->add_option("--l1-ratio", predict.l1_ratio, "Elastic-net l1 ratio in (0, 1]");
  s_pred->add_option("--folds", predict.folds, "Cross-validation folds");
  s_pred->add_option("--pca-dim", predict.pca_dim, "PCA dimension before regression")->check(CLI::PositiveNumber);
  s_pred->add_option("--n-alphas", predict.n_alphas, "Alpha grid size")->check(CLI::PositiveNumber);
  s_pred->add_option("--seed", predict.seed, "Fold shuffling seed");
  add_common(s_pred, common, true);

  ClusterOptions cluster;
  auto* s_cl = app.add_subcommand("cluster", "Hierarchical clustering to Newick and a dendrogram render");
  s_cl->add_option("inputs", cluster.inputs, "Feature vectors (.efvc) or one distances .csv")->required();
  s_cl->add_option("--linkage", cluster.linkage, "single, complete or average");
  s_cl->add_flag("--linear-heights", cluster.linear_heights, "Draw raw heights instead of ln(1 + h)");
  s_cl->add_option("--prefix", cluster.prefix, "Output file prefix");
  add_common(s_cl, common, true);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidInvocation;
  }

  try {
    if (*s_spec) return cmd_spectrum(spectrum, common);
    if (*s_feat) return cmd_features(features, common);
    if (*s_map) {
      if (perp_opt->count() > 0) map.perplexity = perplexity;
      return cmd_map(map, common);
    }
    if (*s_nn) return cmd_neighbors(neighbors, common);
    if (*s_syn) return cmd_synth(synth, common);
    if (*s_pred) return cmd_predict(predict, common);
    if (*s_cl) return cmd_cluster(cluster, common);
  } catch (const Error& e) {
    log_error(e.what());
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    log_error(std::string("malformed JSON: ") + e.what());
    return kDataError;
  }
  return kInvalidInvocation;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace encmap::cli

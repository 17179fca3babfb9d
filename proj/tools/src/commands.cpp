#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <json.hpp>

#include "eegemo/bands.hpp"
#include "eegemo/classic.hpp"
#include "eegemo/errors.hpp"
#include "eegemo/features.hpp"
#include "eegemo/ingest.hpp"
#include "eegemo/labeling.hpp"
#include "eegemo/neural.hpp"
#include "eegemo/spectral.hpp"
#include "eegemo/text.hpp"
#include "topomap.hpp"

namespace eegemo::cli {

namespace {

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) throw IoError("output directory is empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

CommandResult finish(std::string_view command, const PipelineConfig& config, const fs::path& out,
                     std::vector<fs::path> files) {
  CommandResult result;
  result.manifest_json = make_manifest(command, config, out, files);
  write_text_file(out / "manifest.json", result.manifest_json);
  files.push_back(out / "manifest.json");
  result.files = std::move(files);
  return result;
}

std::vector<int> target_values(const LabelSet& labels, Target target) {
  std::vector<int> y;
  for (const auto& t : labels.trials) {
    switch (target) {
      case Target::Valence: y.push_back(t.valence_positive ? 1 : 0); break;
      case Target::Arousal: y.push_back(t.arousal_positive ? 1 : 0); break;
      case Target::Quadrant: y.push_back(static_cast<int>(t.quadrant)); break;
    }
  }
  return y;
}

Band find_band(const PipelineConfig& config, std::string_view name) {
  for (auto selector : {config.band_set, BandSelector::TableOne, BandSelector::Meta}) {
    const BandSet set = band_set(selector);
    for (const auto& b : set.bands) {
      if (std::equal(b.name.begin(), b.name.end(), name.begin(), name.end(),
                     [](char a, char c) { return std::tolower(a) == std::tolower(c); })) {
        return b;
      }
    }
  }
  throw ConfigError("unknown band '" + std::string(name) +
                    "' (use a table_one name such as theta, or a meta band such as 4-8Hz)");
}

std::vector<std::size_t> resolve_channels(const TrialTensor& tensor, const PipelineConfig& config,
                                          std::string_view spec) {
  std::vector<std::size_t> out;
  if (spec.empty() || spec == "all") {
    for (std::size_t ch = 0; ch < tensor.n_channels(); ++ch) out.push_back(ch);
    return out;
  }
  if (spec == "subset") {
    for (auto ch : config.channel_subset) {
      if (ch >= tensor.n_channels()) throw RangeError("channel subset exceeds tensor channels");
      out.push_back(ch);
    }
    return out;
  }
  if (!tensor.has_full_layout()) {
    throw ValidationError("electrode names need a " + std::to_string(tensor.layout().size()) +
                          "-channel tensor");
  }
  for (const auto& name : split_csv(spec)) {
    auto idx = tensor.layout().index_of(name);
    if (!idx) throw ValidationError("unknown electrode '" + std::string(name) + "'");
    out.push_back(*idx);
  }
  return out;
}

std::string channel_label(const TrialTensor& tensor, std::size_t ch) {
  if (tensor.has_full_layout()) return tensor.layout().name(ch);
  return "ch" + std::to_string(ch);
}

}  // namespace

std::string make_manifest(std::string_view command, const PipelineConfig& config,
                          const fs::path& out_dir, const std::vector<fs::path>& files) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = config.rng_seed;
  j["config_digest"] = hex64(config_digest(config));
  auto list = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    const std::string bytes = read_text_file(f);
    nlohmann::ordered_json e;
    e["path"] = f.lexically_relative(out_dir).generic_string();
    e["bytes"] = bytes.size();
    e["fnv1a64"] = hex64(fnv1a64(bytes));
    list.push_back(std::move(e));
  }
  j["files"] = std::move(list);
  return j.dump(2) + "\n";
}

CommandResult cmd_generate(const GenerateOptions& options) {
  validate(options.config);
  ensure_dir(options.out_dir);
  SyntheticSpec spec = options.config.synthetic;
  spec.rng_seed = options.config.rng_seed;
  const SyntheticSubject subject = generate_synthetic(spec, options.config.synthetic_dims);
  const fs::path tensor_path = options.out_dir / (options.stem + ".eegt");
  const fs::path ratings_path = options.out_dir / (options.stem + "_ratings.csv");
  write_tensor(subject.tensor, tensor_path);
  write_ratings(subject.ratings, ratings_path);
  return finish("generate", options.config, options.out_dir, {tensor_path, ratings_path});
}

FeatureMode parse_feature_mode(std::string_view name) {
  if (name == "meta") return FeatureMode::Meta;
  if (name == "regions") return FeatureMode::Regions;
  throw ConfigError("mode must be 'meta' or 'regions', got '" + std::string(name) + "'");
}

CommandResult cmd_extract(const ExtractOptions& options) {
  validate(options.config);
  const TrialTensor tensor = read_tensor(options.tensor);
  const Ratings ratings = read_ratings(options.ratings);
  if (ratings.size() != tensor.n_trials()) {
    throw ValidationError("ratings cover " + std::to_string(ratings.size()) +
                          " trials, tensor has " + std::to_string(tensor.n_trials()));
  }
  const FeatureMatrix features = options.mode == FeatureMode::Meta
                                     ? meta_vectors(tensor, options.config)
                                     : region_stats(tensor, options.config);
  const LabelSet labels = make_labels(ratings);
  ensure_dir(options.out_dir);
  const fs::path features_path = options.out_dir / "features.csv";
  const fs::path labels_path = options.out_dir / "labels.csv";
  write_features_csv(features, features_path);
  write_labels_csv(labels, labels_path);
  return finish("extract", options.config, options.out_dir, {features_path, labels_path});
}

Target parse_target(std::string_view name) {
  if (name == "valence") return Target::Valence;
  if (name == "arousal") return Target::Arousal;
  if (name == "quadrant") return Target::Quadrant;
  throw ConfigError("target must be valence, arousal or quadrant, got '" + std::string(name) + "'");
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "svm") return Algorithm::Svm;
  if (name == "knn") return Algorithm::Knn;
  throw ConfigError("algo must be 'svm' or 'knn', got '" + std::string(name) + "'");
}

CommandResult cmd_train_classic(const TrainClassicOptions& options) {
  validate(options.config);
  if (options.inputs.empty()) throw ValidationError("no feature/label inputs given");
  Matrix x;
  std::vector<int> y;
  for (const auto& input : options.inputs) {
    const FeatureMatrix f = read_features_csv(input.features);
    const std::vector<int> labels = target_values(read_labels_csv(input.labels), options.target);
    if (x.cols == 0) {
      x.cols = f.n_cols();
    } else if (x.cols != f.n_cols()) {
      throw ValidationError("feature files disagree on column count");
    }
    for (std::size_t r = 0; r < f.n_rows(); ++r) {
      const std::size_t trial = f.provenance(r).trial;
      if (trial >= labels.size()) {
        throw ValidationError(input.features.string() + ": no label for trial " +
                              std::to_string(trial));
      }
      const auto row = f.row(r);
      x.data.insert(x.data.end(), row.begin(), row.end());
      y.push_back(labels[trial]);
      ++x.rows;
    }
  }

  const PipelineConfig& c = options.config;
  ClassifierSpec spec;
  if (options.algorithm == Algorithm::Knn) {
    spec = KnnSpec{c.knn_k};
  } else {
    spec = SvmSpec{SvmOptions{c.svm_c, c.svm_epochs, c.svm_batch_size, c.rng_seed}};
  }
  CrossValidationOptions cv;
  cv.folds = c.cv_folds;
  cv.seed = c.rng_seed;
  cv.averaging = options.target == Target::Quadrant ? Averaging::Macro : Averaging::Binary;
  const MetricsReport report = cross_validate(x, y, spec, cv);

  ensure_dir(options.out_dir);
  const fs::path metrics_path = options.out_dir / "metrics.json";
  write_text_file(metrics_path, metrics_to_json(report) + "\n");
  return finish("train-classic", options.config, options.out_dir, {metrics_path});
}

CommandResult cmd_train_lstm(const TrainLstmOptions& options) {
  validate(options.config);
  if (options.inputs.empty()) throw ValidationError("no feature/label inputs given");
  const LstmConfig& lc = options.config.lstm;
  std::vector<Sequence> data;
  for (const auto& input : options.inputs) {
    const FeatureMatrix f = read_features_csv(input.features);
    if (f.n_rows() == 0) continue;
    const std::uint32_t subject = f.provenance(0).subject;
    for (const auto& p : f.provenance()) {
      if (p.subject != subject) {
        throw ValidationError(input.features.string() + " mixes subjects; pass one file per subject");
      }
    }
    auto seqs = build_sequences(f, make_label_lookup(subject, read_labels_csv(input.labels)),
                                lc.seq_len, lc.n_outputs);
    if (!data.empty() && !seqs.empty() && seqs.front().x.rows() != data.front().x.rows()) {
      throw ValidationError("feature files disagree on column count");
    }
    std::move(seqs.begin(), seqs.end(), std::back_inserter(data));
  }

  ensure_dir(options.out_dir);
  TrainOptions to;
  to.seed = options.config.rng_seed;
  to.checkpoint_dir = options.out_dir / "checkpoints";
  to.resume_from = options.resume_from;
  const TrainResult result = train(data, lc, to);

  std::vector<fs::path> files;
  const fs::path report_path = options.out_dir / "train_report.jsonl";
  write_text_file(report_path, report_to_jsonl(result.report));
  files.push_back(report_path);

  const TrainReport& r = result.report;
  nlohmann::ordered_json summary;
  summary["split"] = r.split == SplitMode::ByTrial ? "trial" : "window";
  summary["n_sequences"] = data.size();
  summary["n_train"] = r.n_train;
  summary["n_validation"] = r.n_validation;
  summary["initial_train_loss"] = r.initial_train_loss;
  summary["initial_val_loss"] = r.initial_val_loss;
  if (!r.epochs.empty()) {
    summary["final_epoch"] = r.epochs.back().epoch;
    summary["final_train_loss"] = r.epochs.back().train_loss;
    summary["final_val_loss"] = r.epochs.back().val_loss;
    summary["final_val_accuracy"] = r.epochs.back().val_accuracy;
  }
  const fs::path summary_path = options.out_dir / "summary.json";
  write_text_file(summary_path, summary.dump(2) + "\n");
  files.push_back(summary_path);

  for (const auto& e : r.epochs) {
    if (!e.checkpoint.empty()) files.push_back(to.checkpoint_dir / e.checkpoint);
  }
  const fs::path final_path = options.out_dir / "final.ckpt";
  const std::size_t last_epoch = r.epochs.empty() ? 0 : r.epochs.back().epoch;
  save_checkpoint({result.model, result.optimizer, last_epoch, to.seed}, final_path);
  files.push_back(final_path);
  return finish("train-lstm", options.config, options.out_dir, files);
}

CommandResult cmd_topomap(const TopomapOptions& options) {
  validate(options.config);
  TrialTensor tensor = read_tensor(options.tensor);
  if (!tensor.has_full_layout()) {
    throw ValidationError("topomap needs a " + std::to_string(tensor.layout().size()) +
                          "-channel tensor, got " + std::to_string(tensor.n_channels()));
  }
  if (options.trial >= tensor.n_trials()) {
    throw RangeError("trial " + std::to_string(options.trial) + " out of range (tensor has " +
                     std::to_string(tensor.n_trials()) + ")");
  }
  const Band band = find_band(options.config, options.band);
  const double fs_hz = tensor.sample_rate_hz();
  const std::size_t seg = options.config.welch_segment_len;
  const SampleSpan span =
      analysis_span(options.t_start, options.t_end, fs_hz, tensor.n_samples(), seg);
  const WelchOptions welch{seg, options.config.welch_overlap, WindowKind::Hamming};

  std::vector<Electrode> electrodes;
  for (std::size_t ch = 0; ch < tensor.n_channels(); ++ch) {
    const auto signal = tensor.channel(options.trial, ch).subspan(span.start, span.length);
    const PsdEstimate psd = welch_psd(signal, fs_hz, welch);
    const std::string& name = tensor.layout().name(ch);
    electrodes.push_back({name, scalp_position(name), band_power(psd, band).value});
  }
  TopomapGrid grid = interpolate_grid(std::move(electrodes));
  grid.band = band.name;
  grid.t_start = options.t_start;
  grid.t_end = options.t_end;

  ensure_dir(options.out_dir);
  const fs::path grid_path = options.out_dir / "topomap.csv";
  const fs::path electrodes_path = options.out_dir / "electrodes.csv";
  const fs::path svg_path = options.out_dir / "topomap.svg";
  write_text_file(grid_path, format_grid_csv(grid));
  write_text_file(electrodes_path, format_electrodes_csv(grid));
  write_text_file(svg_path, render_svg(grid));
  return finish("topomap", options.config, options.out_dir,
                {grid_path, electrodes_path, svg_path});
}

CommandResult cmd_psd(const PsdOptions& options) {
  validate(options.config);
  const TrialTensor tensor = read_tensor(options.tensor);
  if (options.trial >= tensor.n_trials()) {
    throw RangeError("trial " + std::to_string(options.trial) + " out of range (tensor has " +
                     std::to_string(tensor.n_trials()) + ")");
  }
  const double nyquist = tensor.sample_rate_hz() / 2.0;
  const double fmin = options.fmin_hz.value_or(0.0);
  const double fmax = options.fmax_hz.value_or(nyquist);
  if (!(fmin >= 0.0 && fmin <= fmax)) throw RangeError("need 0 <= fmin <= fmax");

  const auto channels = resolve_channels(tensor, options.config, options.channels);
  if (channels.empty()) throw ValidationError("no channels selected");
  const WelchOptions welch{options.config.welch_segment_len, options.config.welch_overlap,
                           WindowKind::Hamming};
  std::vector<PsdEstimate> psds;
  for (auto ch : channels) {
    psds.push_back(welch_psd(tensor.channel(options.trial, ch), tensor.sample_rate_hz(), welch));
  }

  std::string csv = "freq_hz";
  for (auto ch : channels) csv += ',' + channel_label(tensor, ch);
  csv += '\n';
  const auto& freqs = psds.front().freqs_hz;
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    if (freqs[k] < fmin || freqs[k] > fmax) continue;
    csv += format_double(freqs[k]);
    for (const auto& p : psds) csv += ',' + format_double(p.power[k]);
    csv += '\n';
  }
  ensure_dir(options.out_dir);
  const fs::path psd_path = options.out_dir / "psd.csv";
  write_text_file(psd_path, csv);
  return finish("psd", options.config, options.out_dir, {psd_path});
}

}  // namespace eegemo::cli

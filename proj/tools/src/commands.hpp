#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eegemo/config.hpp"
#include "eegemo/tensor.hpp"

namespace eegemo::cli {

namespace fs = std::filesystem;

/// Files written by a command, in the order they appear in its manifest.
struct CommandResult {
  std::vector<fs::path> files;
  std::string manifest_json;
};

struct GenerateOptions {
  PipelineConfig config;
  fs::path out_dir;
  std::string stem = "subject";
};

/// <stem>.eegt, <stem>_ratings.csv, manifest.json.
CommandResult cmd_generate(const GenerateOptions& options);

enum class FeatureMode { Meta, Regions };
FeatureMode parse_feature_mode(std::string_view name);

struct ExtractOptions {
  PipelineConfig config;
  fs::path tensor;
  fs::path ratings;
  FeatureMode mode = FeatureMode::Regions;
  fs::path out_dir;
};

/// features.csv, labels.csv, manifest.json.
CommandResult cmd_extract(const ExtractOptions& options);

enum class Target { Valence, Arousal, Quadrant };
Target parse_target(std::string_view name);

enum class Algorithm { Svm, Knn };
Algorithm parse_algorithm(std::string_view name);

/// One features CSV paired with the labels CSV of the same subject.
struct LabeledFeatures {
  fs::path features;
  fs::path labels;
};

struct TrainClassicOptions {
  PipelineConfig config;
  std::vector<LabeledFeatures> inputs;
  Target target = Target::Valence;
  Algorithm algorithm = Algorithm::Svm;
  fs::path out_dir;
};

/// metrics.json, manifest.json.
CommandResult cmd_train_classic(const TrainClassicOptions& options);

struct TrainLstmOptions {
  PipelineConfig config;
  std::vector<LabeledFeatures> inputs;
  fs::path out_dir;
  std::optional<fs::path> resume_from;
};

/// train_report.jsonl, summary.json, checkpoints/epoch_NNNN.ckpt, final.ckpt,
/// manifest.json.
CommandResult cmd_train_lstm(const TrainLstmOptions& options);

struct TopomapOptions {
  PipelineConfig config;
  fs::path tensor;
  std::size_t trial = 0;
  double t_start = 0.153;
  double t_end = 0.273;
  std::string band = "theta";
  fs::path out_dir;
};

/// topomap.csv, electrodes.csv, topomap.svg, manifest.json.
CommandResult cmd_topomap(const TopomapOptions& options);

struct PsdOptions {
  PipelineConfig config;
  fs::path tensor;
  std::size_t trial = 0;
  /// Electrode names, "all", or "subset" for the configured channel subset.
  std::string channels = "all";
  std::optional<double> fmin_hz;
  std::optional<double> fmax_hz;
  fs::path out_dir;
};

/// psd.csv (freq_hz, one column per channel), manifest.json.
CommandResult cmd_psd(const PsdOptions& options);

/// Deterministic manifest: command, seed, config digest and an FNV-1a hash of
/// every listed file.
std::string make_manifest(std::string_view command, const PipelineConfig& config,
                          const fs::path& out_dir, const std::vector<fs::path>& files);

}  // namespace eegemo::cli

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eegemo/bands.hpp"
#include "eegemo/channels.hpp"

namespace eegemo {

enum class SplitMode { ByTrial, ByWindow };

struct LstmConfig {
  /// Recurrent hidden sizes, bottom to top. The full-size stack is
  /// {512, 256, 128, 64, 10}; the default is the desk-scale shrink.
  std::vector<std::size_t> hidden_sizes{32, 16, 8, 8, 4};
  /// Dropout after each recurrent layer (same length as hidden_sizes).
  std::vector<double> dropout{0.3, 0.5, 0.3, 0.3, 0.3};
  double head_dropout = 0.2;
  std::size_t head_hidden = 32;
  std::size_t n_outputs = 2;
  std::size_t seq_len = 10;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  double rho = 0.9;
  double epsilon = 1e-8;
  double momentum = 0.0;
  double bn_momentum = 0.9;
  double bn_epsilon = 1e-5;
  std::size_t checkpoint_every = 50;
  double train_fraction = 0.75;
  SplitMode split = SplitMode::ByTrial;

  static LstmConfig full_size();
};

struct SyntheticBand {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
  double center_hz = 0.0;
  double amplitude_uv = 0.0;
};

/// How synthetic trials are tied to their ratings. When enabled, exactly
/// ceil(n/2) trials get the "high" valence condition (valence band amplitude
/// scaled by high_gain, rating drawn from [6, 9]); the rest get low_gain and a
/// rating from [1, 4]. Arousal is planted independently in its own band.
struct LabelRule {
  bool enabled = true;
  std::size_t valence_band = 1;
  std::size_t arousal_band = 2;
  double high_gain = 2.0;
  double low_gain = 0.5;
};

struct SyntheticSpec {
  std::vector<SyntheticBand> bands;
  double noise_sigma_uv = 2.0;
  LabelRule label_rule;
  std::uint64_t rng_seed = 1;
};

/// Theta 6 Hz, Alpha 10 Hz, Beta 20 Hz, Gamma 40 Hz sinusoids inside the
/// theta-gamma bands, 2 uV white noise, valence planted in alpha, arousal in beta.
SyntheticSpec default_synthetic_spec();

struct SyntheticDims {
  std::size_t n_trials = 40;
  std::size_t n_channels = kDeapChannelCount;
  std::size_t n_samples = 8064;
  double sample_rate_hz = 128.0;
  std::uint32_t subject_id = 1;
};

struct PipelineConfig {
  std::size_t window_len = 256;
  std::size_t window_step = 16;
  std::size_t welch_segment_len = 256;
  double welch_overlap = 0.5;
  std::vector<std::size_t> channel_subset{kMetaChannelSubset.begin(),
                                          kMetaChannelSubset.end()};
  BandSelector band_set = BandSelector::Meta;
  std::uint64_t rng_seed = 1;
  std::size_t knn_k = 5;
  double svm_c = 1.0;
  std::size_t svm_epochs = 100;
  /// 0 = full-batch subgradient steps.
  std::size_t svm_batch_size = 0;
  std::size_t cv_folds = 5;
  std::vector<std::pair<std::string, Region>> region_overrides;
  LstmConfig lstm;
  SyntheticSpec synthetic = default_synthetic_spec();
  SyntheticDims synthetic_dims;

  ChannelLayout layout() const;
};

/// Throws ConfigError when any invariant is violated.
void validate(const PipelineConfig& config);

/// Applies one `key = value` setting. Throws ConfigError for unknown keys or
/// unparsable values.
void apply_setting(PipelineConfig& config, std::string_view key, std::string_view value);

/// Parses a flat UTF-8 `key = value` file; `#` starts a comment.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(std::string_view text);

/// Stable textual rendering of every setting, one `key = value` per line.
std::string canonical_string(const PipelineConfig& config);
std::uint64_t config_digest(const PipelineConfig& config);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Independent RNG seed for one consumer of a user seed (splitmix64 mixing),
/// so that two components never replay the same random stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Stream tags passed to derive_seed.
namespace seed_stream {
inline constexpr std::uint64_t kSynthetic = 1;
inline constexpr std::uint64_t kFolds = 2;
inline constexpr std::uint64_t kSvmBatches = 3;
inline constexpr std::uint64_t kLstmInit = 4;
inline constexpr std::uint64_t kLstmSplit = 5;
inline constexpr std::uint64_t kLstmShuffle = 6;
inline constexpr std::uint64_t kLstmDropout = 7;
}  // namespace seed_stream
std::string hex64(std::uint64_t value);

}  // namespace eegemo

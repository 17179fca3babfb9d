#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "eegemo/config.hpp"
#include "eegemo/tensor.hpp"

namespace eegemo {

// EEGT layout (all integers little-endian):
//   0-3   "EEGT"
//   4-7   version (u32, = 1)
//   8-11  n_trials, 12-15 n_channels, 16-19 n_samples (u32)
//   20-23 subject_id (u32)
//   24-31 sample_rate_hz (f64)
//   32-   n_trials * n_channels * n_samples f32, trial-major, then channel,
//         then sample.
inline constexpr std::uint32_t kTensorFormatVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 32;

struct TensorFileHeader {
  std::uint32_t version = kTensorFormatVersion;
  std::uint32_t n_trials = 0;
  std::uint32_t n_channels = 0;
  std::uint32_t n_samples = 0;
  std::uint32_t subject_id = 0;
  double sample_rate_hz = 0.0;

  std::size_t payload_bytes() const {
    return std::size_t{n_trials} * n_channels * n_samples * sizeof(float);
  }
};

/// Parses and validates the first 32 bytes. Throws FormatError.
TensorFileHeader decode_tensor_header(std::string_view bytes);

std::string encode_tensor(const TrialTensor& tensor);
TrialTensor decode_tensor(std::string_view bytes);

TrialTensor read_tensor(const std::filesystem::path& path);
void write_tensor(const TrialTensor& tensor, const std::filesystem::path& path);

/// CSV with header `trial,valence,arousal`; rows may come in any order but
/// must cover trials 0..n-1 exactly once.
Ratings parse_ratings(std::string_view csv);
Ratings read_ratings(const std::filesystem::path& path);
std::string format_ratings(const Ratings& ratings);
void write_ratings(const Ratings& ratings, const std::filesystem::path& path);

struct SyntheticSubject {
  TrialTensor tensor;
  Ratings ratings;
};

/// Sum of band sinusoids (seeded phase per trial/channel/band) plus white
/// Gaussian noise. Ratings follow `spec.label_rule`; without a rule they are
/// uniform on [1, 9]. Pure function of its arguments.
SyntheticSubject generate_synthetic(const SyntheticSpec& spec, const SyntheticDims& dims);

}  // namespace eegemo

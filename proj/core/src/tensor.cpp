#include "eegemo/tensor.hpp"

#include <cmath>
#include <string>

#include "eegemo/errors.hpp"

namespace eegemo {

TrialTensor::TrialTensor(std::uint32_t subject_id, std::size_t n_trials, std::size_t n_channels,
                         std::size_t n_samples, double sample_rate_hz)
    : TrialTensor(subject_id, n_trials, n_channels, n_samples, sample_rate_hz,
                  std::vector<double>(n_trials * n_channels * n_samples, 0.0)) {}

TrialTensor::TrialTensor(std::uint32_t subject_id, std::size_t n_trials, std::size_t n_channels,
                         std::size_t n_samples, double sample_rate_hz, std::vector<double> data)
    : subject_id_(subject_id),
      n_trials_(n_trials),
      n_channels_(n_channels),
      n_samples_(n_samples),
      sample_rate_hz_(sample_rate_hz),
      data_(std::move(data)) {
  if (n_trials == 0 || n_channels == 0 || n_samples == 0) {
    throw SizeError("trial tensor dimensions must all be >= 1");
  }
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw ConfigError("sample rate must be a positive finite number");
  }
  if (data_.size() != n_trials * n_channels * n_samples) {
    throw ShapeError("trial tensor payload has " + std::to_string(data_.size()) +
                     " values, expected " + std::to_string(n_trials * n_channels * n_samples));
  }
}

std::size_t TrialTensor::offset(std::size_t trial, std::size_t ch) const {
  if (trial >= n_trials_ || ch >= n_channels_) {
    throw RangeError("trial/channel index out of range (" + std::to_string(trial) + ", " +
                     std::to_string(ch) + ")");
  }
  return (trial * n_channels_ + ch) * n_samples_;
}

std::span<const double> TrialTensor::channel(std::size_t trial, std::size_t ch) const {
  return std::span<const double>(data_).subspan(offset(trial, ch), n_samples_);
}

std::span<double> TrialTensor::channel(std::size_t trial, std::size_t ch) {
  return std::span<double>(data_).subspan(offset(trial, ch), n_samples_);
}

void TrialTensor::check_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError("non-finite sample at flat index " + std::to_string(i));
    }
  }
}

}  // namespace eegemo

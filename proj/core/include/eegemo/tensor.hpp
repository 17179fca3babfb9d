#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eegemo/channels.hpp"

namespace eegemo {

/// One subject's recordings, trials x channels x samples of microvolts,
/// stored contiguously in trial-major, then channel, then sample order.
class TrialTensor {
 public:
  /// Zero-filled tensor. Throws SizeError / ConfigError on bad dimensions.
  TrialTensor(std::uint32_t subject_id, std::size_t n_trials, std::size_t n_channels,
              std::size_t n_samples, double sample_rate_hz);
  /// Takes ownership of `data`; its size must equal the product of dims.
  TrialTensor(std::uint32_t subject_id, std::size_t n_trials, std::size_t n_channels,
              std::size_t n_samples, double sample_rate_hz, std::vector<double> data);

  std::uint32_t subject_id() const { return subject_id_; }
  std::size_t n_trials() const { return n_trials_; }
  std::size_t n_channels() const { return n_channels_; }
  std::size_t n_samples() const { return n_samples_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  double duration_s() const { return static_cast<double>(n_samples_) / sample_rate_hz_; }

  std::span<const double> channel(std::size_t trial, std::size_t ch) const;
  std::span<double> channel(std::size_t trial, std::size_t ch);
  double at(std::size_t trial, std::size_t ch, std::size_t sample) const {
    return data_[offset(trial, ch) + sample];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Layout of the 32-channel montage; only meaningful when n_channels == 32.
  const ChannelLayout& layout() const { return layout_; }
  void set_layout(ChannelLayout layout) { layout_ = std::move(layout); }
  bool has_full_layout() const { return n_channels_ == layout_.size(); }

  /// Throws ValidationError if any sample is NaN or infinite.
  void check_finite() const;

  friend bool operator==(const TrialTensor& a, const TrialTensor& b) {
    return a.subject_id_ == b.subject_id_ && a.n_trials_ == b.n_trials_ &&
           a.n_channels_ == b.n_channels_ && a.n_samples_ == b.n_samples_ &&
           a.sample_rate_hz_ == b.sample_rate_hz_ && a.data_ == b.data_;
  }

 private:
  std::size_t offset(std::size_t trial, std::size_t ch) const;

  std::uint32_t subject_id_;
  std::size_t n_trials_;
  std::size_t n_channels_;
  std::size_t n_samples_;
  double sample_rate_hz_;
  std::vector<double> data_;
  ChannelLayout layout_ = default_channel_layout();
};

/// Self-reported valence/arousal ratings, one entry per trial, on the 1-9 scale.
struct Ratings {
  std::vector<double> valence;
  std::vector<double> arousal;

  std::size_t size() const { return valence.size(); }
};

inline constexpr double kRatingMin = 1.0;
inline constexpr double kRatingMax = 9.0;

}  // namespace eegemo

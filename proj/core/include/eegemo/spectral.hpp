#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "eegemo/bands.hpp"

namespace eegemo {

/// Full-length DFT of a signal; bin k sits at k * fs / N.
struct Spectrum {
  std::vector<std::complex<double>> bins;
  double sample_rate_hz = 1.0;

  std::size_t size() const { return bins.size(); }
  double frequency(std::size_t k) const {
    return static_cast<double>(k) * sample_rate_hz / static_cast<double>(bins.size());
  }
};

bool is_power_of_two(std::size_t n);

/// In-place iterative radix-2 FFT, X[k] = sum_n x[n] e^{-j 2 pi k n / N}.
/// The inverse transform includes the 1/N factor. Throws SizeError unless
/// the length is a power of two >= 2.
void fft_inplace(std::span<std::complex<double>> data, bool inverse = false);

Spectrum fft(std::span<const double> signal, double sample_rate_hz = 1.0);
std::vector<std::complex<double>> ifft(const Spectrum& spectrum);

/// w(n) = 0.54 - 0.46 cos(2 pi n / M), n = 0..M-1. Note the denominator is M,
/// not the M-1 of the symmetric textbook form. Throws SizeError when M < 2.
std::vector<double> hamming_window(std::size_t m);

enum class WindowKind { Hamming, Rectangular };

std::vector<double> make_window(WindowKind kind, std::size_t m);

struct WelchOptions {
  std::size_t segment_len = 256;
  /// Fraction of a segment shared with the next one; segment i starts at
  /// i * segment_len * (1 - overlap).
  double overlap = 0.5;
  WindowKind window = WindowKind::Hamming;
};

/// One-sided power spectral density in uV^2/Hz over bins 0..M/2.
struct PsdEstimate {
  std::vector<double> freqs_hz;
  std::vector<double> power;
  std::size_t segment_len = 0;
  std::size_t n_segments = 0;
  /// Sum of squared window samples (M * U).
  double window_energy = 0.0;
  double sample_rate_hz = 0.0;

  double resolution_hz() const {
    return sample_rate_hz / static_cast<double>(segment_len);
  }
  /// Sum of power * resolution over every bin.
  double total_power() const;
};

/// Windowed periodogram of one segment, |sum x(n) w(n) e^{-j2pi kn/M}|^2 /
/// (fs * sum w^2), interior bins doubled. `window` must match the segment
/// length.
PsdEstimate periodogram(std::span<const double> segment, double sample_rate_hz,
                        std::span<const double> window);

/// Segment start offsets used by Welch averaging; trailing samples that do not
/// fill a segment are dropped. Throws SizeError / ConfigError.
std::vector<std::size_t> welch_segment_starts(std::size_t n_samples, const WelchOptions& options);

/// Periodogram of every Welch segment, in segment order.
std::vector<PsdEstimate> welch_periodograms(std::span<const double> signal,
                                            double sample_rate_hz,
                                            const WelchOptions& options);

/// Mean of the segment periodograms.
PsdEstimate welch_psd(std::span<const double> signal, double sample_rate_hz,
                      const WelchOptions& options = {});

struct BandPower {
  double value = 0.0;
  /// Number of PSD bins that fell inside the band; zero flags an empty range.
  std::size_t n_bins = 0;

  bool empty() const { return n_bins == 0; }
};

/// Sum of power * df over bins with low <= f < high. Throws ConfigError unless
/// 0 <= low < high <= fs/2.
BandPower band_power(const PsdEstimate& psd, const Band& band);

}  // namespace eegemo

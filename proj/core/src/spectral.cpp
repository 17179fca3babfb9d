#include "eegemo/spectral.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "eegemo/errors.hpp"

namespace eegemo {
namespace {

// Forward twiddles e^{-j 2 pi k / N} for k < N/2, cached per size and thread.
const std::vector<std::complex<double>>& twiddles(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<std::complex<double>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<std::complex<double>> w(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(angle), std::sin(angle)};
  }
  return cache.emplace(n, std::move(w)).first->second;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::span<std::complex<double>> data, bool inverse) {
  const std::size_t n = data.size();
  if (n < 2 || !is_power_of_two(n)) {
    throw SizeError("FFT length " + std::to_string(n) + " is not a power of two >= 2");
  }

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const auto& w = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        std::complex<double> tw = w[k * stride];
        if (inverse) tw = std::conj(tw);
        const std::complex<double> u = data[start + k];
        const std::complex<double> v = data[start + k + half] * tw;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

Spectrum fft(std::span<const double> signal, double sample_rate_hz) {
  Spectrum out;
  out.sample_rate_hz = sample_rate_hz;
  out.bins.assign(signal.begin(), signal.end());
  fft_inplace(out.bins, false);
  return out;
}

std::vector<std::complex<double>> ifft(const Spectrum& spectrum) {
  std::vector<std::complex<double>> out = spectrum.bins;
  fft_inplace(out, true);
  return out;
}

std::vector<double> hamming_window(std::size_t m) {
  if (m < 2) throw SizeError("Hamming window needs M >= 2");
  std::vector<double> w(m);
  for (std::size_t n = 0; n < m; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * static_cast<double>(n) * std::numbers::pi /
                                  static_cast<double>(m));
  }
  return w;
}

std::vector<double> make_window(WindowKind kind, std::size_t m) {
  if (kind == WindowKind::Hamming) return hamming_window(m);
  if (m < 1) throw SizeError("window length must be >= 1");
  return std::vector<double>(m, 1.0);
}

double PsdEstimate::total_power() const {
  double sum = 0.0;
  for (double p : power) sum += p;
  return sum * resolution_hz();
}

PsdEstimate periodogram(std::span<const double> segment, double sample_rate_hz,
                        std::span<const double> window) {
  const std::size_t m = segment.size();
  if (window.size() != m) throw ShapeError("window length does not match segment length");
  if (!(sample_rate_hz > 0.0)) throw ConfigError("sample rate must be > 0");

  std::vector<std::complex<double>> buf(m);
  double energy = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    buf[n] = segment[n] * window[n];
    energy += window[n] * window[n];
  }
  fft_inplace(buf, false);

  const std::size_t n_bins = m / 2 + 1;
  const double scale = 1.0 / (sample_rate_hz * energy);
  PsdEstimate out;
  out.freqs_hz.resize(n_bins);
  out.power.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    double p = std::norm(buf[k]) * scale;
    if (k != 0 && k != m / 2) p *= 2.0;
    out.power[k] = p;
    out.freqs_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(m);
  }
  out.segment_len = m;
  out.n_segments = 1;
  out.window_energy = energy;
  out.sample_rate_hz = sample_rate_hz;
  return out;
}

std::vector<std::size_t> welch_segment_starts(std::size_t n_samples, const WelchOptions& options) {
  const std::size_t m = options.segment_len;
  if (!(options.overlap >= 0.0 && options.overlap < 1.0)) {
    throw ConfigError("Welch overlap must lie in [0, 1)");
  }
  if (m < 2) throw SizeError("Welch segment length must be >= 2");
  if (n_samples < m) {
    throw SizeError("signal of " + std::to_string(n_samples) +
                    " samples is shorter than the Welch segment (" + std::to_string(m) + ")");
  }
  // Small epsilon keeps e.g. 256 * (1 - 0.5) from flooring to 127.
  const auto hop = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(m) * (1.0 - options.overlap) + 1e-9)));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + m <= n_samples; s += hop) starts.push_back(s);
  return starts;
}

std::vector<PsdEstimate> welch_periodograms(std::span<const double> signal,
                                            double sample_rate_hz,
                                            const WelchOptions& options) {
  const auto starts = welch_segment_starts(signal.size(), options);
  const auto window = make_window(options.window, options.segment_len);
  std::vector<PsdEstimate> out;
  out.reserve(starts.size());
  for (std::size_t s : starts) {
    out.push_back(periodogram(signal.subspan(s, options.segment_len), sample_rate_hz, window));
  }
  return out;
}

PsdEstimate welch_psd(std::span<const double> signal, double sample_rate_hz,
                      const WelchOptions& options) {
  auto segments = welch_periodograms(signal, sample_rate_hz, options);
  PsdEstimate out = std::move(segments.front());
  for (std::size_t i = 1; i < segments.size(); ++i) {
    for (std::size_t k = 0; k < out.power.size(); ++k) out.power[k] += segments[i].power[k];
  }
  const double inv = 1.0 / static_cast<double>(segments.size());
  for (double& p : out.power) p *= inv;
  out.n_segments = segments.size();
  return out;
}

BandPower band_power(const PsdEstimate& psd, const Band& band) {
  const double nyquist = psd.sample_rate_hz / 2.0;
  if (!(band.low_hz >= 0.0 && band.low_hz < band.high_hz && band.high_hz <= nyquist)) {
    throw ConfigError("band '" + band.name + "' must satisfy 0 <= low < high <= fs/2");
  }
  BandPower out;
  const double df = psd.resolution_hz();
  for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
    if (band.contains(psd.freqs_hz[k])) {
      out.value += psd.power[k] * df;
      ++out.n_bins;
    }
  }
  return out;
}

}  // namespace eegemo

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "eegemo/bands.hpp"
#include "eegemo/errors.hpp"
#include "eegemo/spectral.hpp"
#include "oracles.hpp"

using namespace eegemo;
using cd = std::complex<double>;

namespace {

double max_abs_diff(const std::vector<cd>& a, const std::vector<cd>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<double> sine(std::size_t n, double amp, double freq, double fs, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
  }
  return x;
}

}  // namespace

TEST(Fft, ImpulseIsFlat) {
  std::vector<double> x{1, 0, 0, 0};
  const Spectrum s = fft(x);
  ASSERT_EQ(s.bins.size(), 4u);
  for (const auto& b : s.bins) {
    EXPECT_NEAR(b.real(), 1.0, 1e-15);
    EXPECT_NEAR(b.imag(), 0.0, 1e-15);
  }
}

TEST(Fft, ConstantIsDcOnly) {
  std::vector<double> x{1, 1, 1, 1};
  const Spectrum s = fft(x);
  EXPECT_NEAR(s.bins[0].real(), 4.0, 1e-15);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_NEAR(std::abs(s.bins[k]), 0.0, 1e-15);
}

TEST(Fft, MatchesNaiveDft) {
  for (std::size_t n : {2u, 4u, 8u, 64u, 256u, 1024u}) {
    const auto x = oracle::random_signal(n, 40 + n);
    std::vector<cd> xc(x.begin(), x.end());
    const auto expected = oracle::naive_dft(xc);
    EXPECT_LT(max_abs_diff(fft(x).bins, expected), 1e-10) << "n=" << n;
  }
}

TEST(Fft, ComplexInPlaceMatchesNaive) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  std::vector<cd> x(128);
  for (auto& v : x) v = {d(rng), d(rng)};
  auto y = x;
  fft_inplace(y);
  EXPECT_LT(max_abs_diff(y, oracle::naive_dft(x)), 1e-10);
  fft_inplace(y, true);
  EXPECT_LT(max_abs_diff(y, x), 1e-12);
}

TEST(Fft, InverseRoundTrip) {
  const auto x = oracle::random_signal(512, 9);
  const auto back = ifft(fft(x, 128.0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(back[i].real(), x[i], 1e-10);
    EXPECT_NEAR(back[i].imag(), 0.0, 1e-10);
  }
}

TEST(Fft, Parseval) {
  const auto x = oracle::random_signal(1024, 5, 3.0);
  double time_energy = 0.0;
  for (double v : x) time_energy += v * v;
  double freq_energy = 0.0;
  for (const auto& b : fft(x).bins) freq_energy += std::norm(b);
  freq_energy /= static_cast<double>(x.size());
  EXPECT_LT(oracle::rel_err(time_energy, freq_energy), 1e-9);
}

TEST(Fft, Linearity) {
  const auto x = oracle::random_signal(256, 1);
  const auto y = oracle::random_signal(256, 2);
  const double a = 2.5, b = -0.75;
  std::vector<double> z(256);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto fx = fft(x).bins, fy = fft(y).bins, fz = fft(z).bins;
  for (std::size_t k = 0; k < z.size(); ++k) {
    EXPECT_LT(std::abs(fz[k] - (a * fx[k] + b * fy[k])), 1e-10);
  }
}

TEST(Fft, BinFrequency) {
  std::vector<double> x(256, 0.0);
  const Spectrum s = fft(x, 128.0);
  EXPECT_DOUBLE_EQ(s.frequency(1), 0.5);
  EXPECT_DOUBLE_EQ(s.frequency(128), 64.0);
}

TEST(Fft, RejectsNonPowerOfTwo) {
  EXPECT_THROW(fft(std::vector<double>(6, 0.0)), SizeError);
  EXPECT_THROW(fft(std::vector<double>(1, 0.0)), SizeError);
  std::vector<cd> empty;
  EXPECT_THROW(fft_inplace(empty), SizeError);
  EXPECT_TRUE(is_power_of_two(1024));
  EXPECT_FALSE(is_power_of_two(1000));
}

TEST(Hamming, EndpointsAndPeak) {
  const auto w = hamming_window(256);
  ASSERT_EQ(w.size(), 256u);
  EXPECT_NEAR(w[0], 0.08, 1e-15);
  EXPECT_NEAR(w[128], 1.0, 1e-15);
  // Denominator M: the window is periodic, so w[M-1] != w[0].
  EXPECT_NEAR(w[255], 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * 255.0 / 256.0), 1e-15);
}

TEST(Hamming, EnergyByDirectSummation) {
  const std::size_t m = 256;
  const auto w = hamming_window(m);
  double direct = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    const double v = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / m);
    direct += v * v;
  }
  const auto x = oracle::random_signal(m, 1);
  EXPECT_NEAR(periodogram(x, 128.0, w).window_energy, direct, 1e-10);
  // Closed form for the periodic window: M (0.54^2 + 0.46^2 / 2).
  EXPECT_NEAR(direct, m * (0.54 * 0.54 + 0.46 * 0.46 / 2.0), 1e-9);
}

TEST(Hamming, RejectsTinyLength) {
  EXPECT_THROW(hamming_window(1), SizeError);
  EXPECT_THROW(hamming_window(0), SizeError);
}

TEST(Welch, SegmentGeometry) {
  WelchOptions o;
  const auto starts = welch_segment_starts(8064, o);
  // L = floor((len - M) / (M (1 - overlap))) + 1
  ASSERT_EQ(starts.size(), (8064u - 256u) / 128u + 1u);
  EXPECT_EQ(starts[1], 128u);
  EXPECT_LE(starts.back() + 256, 8064u);
  EXPECT_EQ(welch_segment_starts(256, o).size(), 1u);
  EXPECT_THROW(welch_segment_starts(255, o), SizeError);
  o.overlap = 1.0;
  EXPECT_THROW(welch_segment_starts(1024, o), ConfigError);
}

TEST(Welch, ZeroSignal) {
  const PsdEstimate p = welch_psd(std::vector<double>(1024, 0.0), 128.0);
  ASSERT_EQ(p.power.size(), 129u);
  for (double v : p.power) EXPECT_EQ(v, 0.0);
  for (const auto& b : band_set(BandSelector::Meta).bands) {
    EXPECT_EQ(band_power(p, b).value, 0.0);
  }
}

TEST(Welch, FrequencyAxis) {
  const PsdEstimate p = welch_psd(oracle::random_signal(512, 2), 128.0);
  EXPECT_EQ(p.freqs_hz.front(), 0.0);
  EXPECT_EQ(p.freqs_hz.back(), 64.0);
  EXPECT_DOUBLE_EQ(p.resolution_hz(), 0.5);
  EXPECT_EQ(p.segment_len, 256u);
  EXPECT_EQ(p.n_segments, 3u);
}

TEST(Welch, BinCenteredSinePower) {
  // A = 2 at 8 Hz (bin 16 for M = 256, fs = 128): signal power A^2 / 2 = 2.
  const auto x = sine(8064, 2.0, 8.0, 128.0, 0.3);
  const PsdEstimate p = welch_psd(x, 128.0);
  double total = 0.0;
  for (double v : p.power) total += v * p.resolution_hz();
  EXPECT_NEAR(total, 2.0, 0.05 * 2.0);
  EXPECT_NEAR(p.total_power(), total, 1e-12);
}

TEST(Welch, TimeDomainVarianceOracle) {
  const auto x = oracle::random_signal(4096, 11, 2.0);
  // Average Welch power estimates the variance of white noise.
  const double variance = oracle::population_std(x) * oracle::population_std(x);
  EXPECT_NEAR(welch_psd(x, 128.0).total_power(), variance, 0.1 * variance);
}

TEST(Welch, WhiteNoiseIsFlat) {
  const auto x = oracle::random_signal(256 + 128 * 99, 21);
  const PsdEstimate p = welch_psd(x, 128.0);
  ASSERT_GE(p.n_segments, 50u);
  double lo = 1e300, hi = 0.0;
  for (std::size_t k = 0; k < p.power.size(); ++k) {
    if (p.freqs_hz[k] < 2.0 || p.freqs_hz[k] > 60.0) continue;
    lo = std::min(lo, p.power[k]);
    hi = std::max(hi, p.power[k]);
  }
  EXPECT_LT(hi / lo, 3.0);
}

TEST(Welch, NonNegativeAndQuadraticInAmplitude) {
  const auto x = oracle::random_signal(2048, 4);
  std::vector<double> x2(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) x2[i] = 2.0 * x[i];
  const PsdEstimate a = welch_psd(x, 128.0);
  const PsdEstimate b = welch_psd(x2, 128.0);
  for (std::size_t k = 0; k < a.power.size(); ++k) {
    EXPECT_GE(a.power[k], 0.0);
    if (a.power[k] > 0.0) EXPECT_LT(oracle::rel_err(b.power[k], 4.0 * a.power[k]), 1e-9);
  }
}

TEST(Welch, SingleRectangularSegmentIsBarePeriodogram) {
  const auto x = oracle::random_signal(256, 8);
  const PsdEstimate w = welch_psd(x, 128.0, {256, 0.5, WindowKind::Rectangular});
  ASSERT_EQ(w.n_segments, 1u);
  // Independent periodogram: |DFT|^2 / (fs M), interior bins doubled.
  std::vector<cd> xc(x.begin(), x.end());
  const auto dft = oracle::naive_dft(xc);
  for (std::size_t k = 0; k <= 128; ++k) {
    double expected = std::norm(dft[k]) / (128.0 * 256.0);
    if (k != 0 && k != 128) expected *= 2.0;
    EXPECT_NEAR(w.power[k], expected, 1e-12 * std::max(1.0, expected));
  }
}

TEST(Welch, MeanOfSegmentPeriodograms) {
  const auto x = oracle::random_signal(1024, 6);
  const auto segs = welch_periodograms(x, 128.0, {});
  const PsdEstimate avg = welch_psd(x, 128.0);
  ASSERT_EQ(segs.size(), avg.n_segments);
  for (std::size_t k = 0; k < avg.power.size(); ++k) {
    double m = 0.0;
    for (const auto& s : segs) m += s.power[k];
    EXPECT_NEAR(avg.power[k], m / static_cast<double>(segs.size()), 1e-12);
  }
}

TEST(Welch, ShortSignalThrows) {
  EXPECT_THROW(welch_psd(std::vector<double>(100, 1.0), 128.0), SizeError);
}

TEST(BandPower, AlphaSineDominates) {
  const auto x = sine(8064, 5.0, 10.0, 128.0);
  const PsdEstimate p = welch_psd(x, 128.0);
  const BandSet table = band_set(BandSelector::TableOne);
  const double alpha = band_power(p, table.by_name("alpha")).value;
  const double total = band_power(p, {"all", 4.0, 45.0}).value;
  EXPECT_GT(alpha, 0.9 * total);
}

TEST(BandPower, MetaBandsTileFourToFortyFive) {
  const PsdEstimate p = welch_psd(oracle::random_signal(4096, 77), 128.0);
  double sum = 0.0;
  for (const auto& b : band_set(BandSelector::Meta).bands) sum += band_power(p, b).value;
  // Direct summation over [4, 45).
  double direct = 0.0;
  for (std::size_t k = 0; k < p.power.size(); ++k) {
    if (p.freqs_hz[k] >= 4.0 && p.freqs_hz[k] < 45.0) direct += p.power[k] * p.resolution_hz();
  }
  EXPECT_NEAR(sum, direct, 1e-9 * direct);
}

TEST(BandPower, HalfOpenEdges) {
  const PsdEstimate p = welch_psd(oracle::random_signal(256, 1), 128.0);
  // [8, 12) holds bins 8.0 .. 11.5 at 0.5 Hz resolution.
  EXPECT_EQ(band_power(p, {"a", 8.0, 12.0}).n_bins, 8u);
  EXPECT_EQ(band_power(p, {"a", 8.0, 8.5}).n_bins, 1u);
}

TEST(BandPower, EmptyRangeIsFlagged) {
  const PsdEstimate p = welch_psd(oracle::random_signal(256, 1), 128.0);
  const BandPower bp = band_power(p, {"narrow", 8.1, 8.2});
  EXPECT_TRUE(bp.empty());
  EXPECT_EQ(bp.value, 0.0);
}

TEST(BandPower, RejectsInvalidBands) {
  const PsdEstimate p = welch_psd(oracle::random_signal(256, 1), 128.0);
  EXPECT_THROW(band_power(p, {"x", 10.0, 8.0}), ConfigError);
  EXPECT_THROW(band_power(p, {"x", -1.0, 8.0}), ConfigError);
  EXPECT_THROW(band_power(p, {"x", 40.0, 70.0}), ConfigError);
}

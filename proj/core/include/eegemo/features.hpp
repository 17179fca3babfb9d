#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eegemo/config.hpp"
#include "eegemo/tensor.hpp"

namespace eegemo {

struct RowProvenance {
  std::uint32_t subject = 0;
  std::size_t trial = 0;
  /// Window index, or -1 for rows that summarize a whole trial.
  long long window = -1;

  friend bool operator==(const RowProvenance&, const RowProvenance&) = default;
};

/// Dense row-major feature table with named columns and per-row provenance.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<std::string> col_names);

  std::size_t n_rows() const { return provenance_.size(); }
  std::size_t n_cols() const { return col_names_.size(); }
  const std::vector<std::string>& col_names() const { return col_names_; }
  const std::vector<RowProvenance>& provenance() const { return provenance_; }
  const RowProvenance& provenance(std::size_t row) const { return provenance_.at(row); }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * n_cols(), n_cols());
  }
  double at(std::size_t r, std::size_t c) const { return values_[r * n_cols() + c]; }
  std::span<const double> values() const { return values_; }

  /// Throws ShapeError if the row length is wrong, ValidationError on NaN/Inf.
  void append_row(RowProvenance prov, std::span<const double> row);
  void reserve(std::size_t rows) {
    values_.reserve(rows * n_cols());
    provenance_.reserve(rows);
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::vector<std::string> col_names_;
  std::vector<double> values_;
  std::vector<RowProvenance> provenance_;
};

struct WindowPlan {
  std::size_t window_len = 0;
  std::size_t step = 0;
  std::size_t n_windows = 0;

  std::size_t start(std::size_t w) const { return w * step; }
};

/// floor((n_samples - window_len) / step) + 1 windows; window w covers
/// [w * step, w * step + window_len). Throws SizeError / ConfigError.
WindowPlan sliding_windows(std::size_t n_samples, std::size_t window_len, std::size_t step);

/// Windowed features: one row per (trial, window); for every channel of the
/// configured subset and every band of `config.band_set`, the band power of the
/// window's single-segment Hamming periodogram. Columns are channel-major.
FeatureMatrix meta_vectors(const TrialTensor& tensor, const PipelineConfig& config);

enum class Statistic { Mean, Std, Min, Q1, Median, Q3, Max };
inline constexpr std::array<Statistic, 7> kStatistics = {
    Statistic::Mean, Statistic::Std, Statistic::Min,   Statistic::Q1,
    Statistic::Median, Statistic::Q3, Statistic::Max};
std::string_view statistic_name(Statistic s);

/// Linear interpolation between order statistics at position q * (n - 1).
/// `sorted` must be ascending and non-empty.
double quantile_inclusive(std::span<const double> sorted, double q);

/// Mean, population std, min, Q1, median, Q3, max of `values` (non-empty).
std::array<double, 7> seven_statistics(std::span<const double> values);

/// Region features: one row per trial. For each region and theta-gamma band the
/// per-segment Welch band powers of all channels in the region are pooled and
/// summarized by the seven statistics. Columns are region-major, then band,
/// then statistic (6 x 4 x 7 = 168 for the default layout).
FeatureMatrix region_stats(const TrialTensor& tensor, const PipelineConfig& config);

/// CSV with header `subject,trial,window,<col names...>`.
std::string format_features_csv(const FeatureMatrix& matrix);
void write_features_csv(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix parse_features_csv(std::string_view csv);
FeatureMatrix read_features_csv(const std::filesystem::path& path);

}  // namespace eegemo

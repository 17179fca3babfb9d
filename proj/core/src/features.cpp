#include "eegemo/features.hpp"

#include <algorithm>
#include <cmath>

#include "eegemo/errors.hpp"
#include "eegemo/spectral.hpp"
#include "eegemo/text.hpp"

namespace eegemo {
namespace {

std::string channel_label(const TrialTensor& tensor, std::size_t ch) {
  if (tensor.has_full_layout()) return tensor.layout().name(ch);
  return "ch" + std::to_string(ch);
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::vector<std::string> col_names)
    : col_names_(std::move(col_names)) {}

void FeatureMatrix::append_row(RowProvenance prov, std::span<const double> row) {
  if (row.size() != n_cols()) {
    throw ShapeError("feature row has " + std::to_string(row.size()) + " values, expected " +
                     std::to_string(n_cols()));
  }
  for (double v : row) {
    if (!std::isfinite(v)) {
      throw ValidationError("non-finite feature value in trial " + std::to_string(prov.trial));
    }
  }
  values_.insert(values_.end(), row.begin(), row.end());
  provenance_.push_back(prov);
}

WindowPlan sliding_windows(std::size_t n_samples, std::size_t window_len, std::size_t step) {
  if (window_len < 1 || step < 1) throw ConfigError("window length and step must be >= 1");
  if (n_samples < window_len) {
    throw SizeError("trial of " + std::to_string(n_samples) + " samples is shorter than the " +
                    std::to_string(window_len) + "-sample window");
  }
  return {window_len, step, (n_samples - window_len) / step + 1};
}

FeatureMatrix meta_vectors(const TrialTensor& tensor, const PipelineConfig& config) {
  const BandSet bands = band_set(config.band_set);
  for (std::size_t ch : config.channel_subset) {
    if (ch >= tensor.n_channels()) {
      throw ConfigError("channel index " + std::to_string(ch) + " exceeds tensor channel count " +
                        std::to_string(tensor.n_channels()));
    }
  }
  const WindowPlan plan =
      sliding_windows(tensor.n_samples(), config.window_len, config.window_step);
  const double fs = tensor.sample_rate_hz();
  const auto window = hamming_window(config.window_len);

  std::vector<std::string> names;
  for (std::size_t ch : config.channel_subset) {
    for (const Band& b : bands.bands) names.push_back(channel_label(tensor, ch) + "_" + b.name);
  }
  FeatureMatrix out(std::move(names));
  out.reserve(tensor.n_trials() * plan.n_windows);

  std::vector<double> row(out.n_cols());
  for (std::size_t t = 0; t < tensor.n_trials(); ++t) {
    for (std::size_t w = 0; w < plan.n_windows; ++w) {
      std::size_t col = 0;
      for (std::size_t ch : config.channel_subset) {
        const auto segment = tensor.channel(t, ch).subspan(plan.start(w), plan.window_len);
        const PsdEstimate psd = periodogram(segment, fs, window);
        for (const Band& b : bands.bands) row[col++] = band_power(psd, b).value;
      }
      out.append_row({tensor.subject_id(), t, static_cast<long long>(w)}, row);
    }
  }
  return out;
}

std::string_view statistic_name(Statistic s) {
  switch (s) {
    case Statistic::Mean: return "mean";
    case Statistic::Std: return "std";
    case Statistic::Min: return "min";
    case Statistic::Q1: return "q1";
    case Statistic::Median: return "median";
    case Statistic::Q3: return "q3";
    case Statistic::Max: return "max";
  }
  return "?";
}

double quantile_inclusive(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw SizeError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::array<double, 7> seven_statistics(std::span<const double> values) {
  if (values.empty()) throw SizeError("statistics of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : sorted) var += (v - mean) * (v - mean);
  var /= n;
  return {mean,
          std::sqrt(var),
          sorted.front(),
          quantile_inclusive(sorted, 0.25),
          quantile_inclusive(sorted, 0.5),
          quantile_inclusive(sorted, 0.75),
          sorted.back()};
}

FeatureMatrix region_stats(const TrialTensor& tensor, const PipelineConfig& config) {
  if (!tensor.has_full_layout()) {
    throw ConfigError("region statistics need the full " + std::to_string(kDeapChannelCount) +
                      "-channel layout, tensor has " + std::to_string(tensor.n_channels()));
  }
  const ChannelLayout layout = config.layout();
  const BandSet bands = band_set(BandSelector::TableOne);
  std::array<std::vector<std::size_t>, kRegionCount> members;
  for (std::size_t r = 0; r < kRegionCount; ++r) {
    members[r] = layout.channels_in(kAllRegions[r]);
    if (members[r].empty()) {
      throw ConfigError("region " + std::string(region_name(kAllRegions[r])) + " has no channels");
    }
  }

  std::vector<std::string> names;
  for (Region region : kAllRegions) {
    for (const Band& b : bands.bands) {
      for (Statistic s : kStatistics) {
        names.push_back(std::string(region_name(region)) + "_" + b.name + "_" +
                        std::string(statistic_name(s)));
      }
    }
  }
  FeatureMatrix out(std::move(names));
  out.reserve(tensor.n_trials());

  const WelchOptions welch{config.welch_segment_len, config.welch_overlap, WindowKind::Hamming};
  const double fs = tensor.sample_rate_hz();
  // powers[ch][band] = per-segment band powers of that channel.
  std::vector<std::vector<std::vector<double>>> powers(
      tensor.n_channels(), std::vector<std::vector<double>>(bands.size()));
  std::vector<double> row;
  row.reserve(out.n_cols());
  std::vector<double> pool;

  for (std::size_t t = 0; t < tensor.n_trials(); ++t) {
    for (std::size_t ch = 0; ch < tensor.n_channels(); ++ch) {
      const auto segments = welch_periodograms(tensor.channel(t, ch), fs, welch);
      for (std::size_t b = 0; b < bands.size(); ++b) {
        auto& dst = powers[ch][b];
        dst.clear();
        for (const auto& psd : segments) dst.push_back(band_power(psd, bands[b]).value);
      }
    }
    row.clear();
    for (std::size_t r = 0; r < kRegionCount; ++r) {
      for (std::size_t b = 0; b < bands.size(); ++b) {
        pool.clear();
        for (std::size_t ch : members[r]) {
          pool.insert(pool.end(), powers[ch][b].begin(), powers[ch][b].end());
        }
        const auto stats = seven_statistics(pool);
        row.insert(row.end(), stats.begin(), stats.end());
      }
    }
    out.append_row({tensor.subject_id(), t, -1}, row);
  }
  return out;
}

std::string format_features_csv(const FeatureMatrix& matrix) {
  std::string out = "subject,trial,window";
  for (const auto& name : matrix.col_names()) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
    const auto& p = matrix.provenance(r);
    out += std::to_string(p.subject) + ',' + std::to_string(p.trial) + ',' +
           std::to_string(p.window);
    for (double v : matrix.row(r)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_features_csv(const FeatureMatrix& matrix, const std::filesystem::path& path) {
  write_text_file(path, format_features_csv(matrix));
}

FeatureMatrix parse_features_csv(std::string_view csv) {
  const auto lines = split_lines(csv);
  if (lines.empty()) throw ValidationError("feature CSV is empty");
  auto header = split_csv(lines.front());
  if (header.size() < 3 || header[0] != "subject" || header[1] != "trial" ||
      header[2] != "window") {
    throw ValidationError("feature CSV header must start with subject,trial,window");
  }
  std::vector<std::string> names(header.begin() + 3, header.end());
  FeatureMatrix out(std::move(names));
  std::vector<double> row(out.n_cols());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_csv(lines[i]);
    const std::string where = "feature row " + std::to_string(i);
    if (fields.size() != out.n_cols() + 3) {
      throw ValidationError(where + ": expected " + std::to_string(out.n_cols() + 3) + " fields");
    }
    RowProvenance prov;
    const long long subject = parse_int(fields[0], where);
    const long long trial = parse_int(fields[1], where);
    if (subject < 0 || trial < 0) throw ValidationError(where + ": negative subject or trial");
    prov.subject = static_cast<std::uint32_t>(subject);
    prov.trial = static_cast<std::size_t>(trial);
    prov.window = parse_int(fields[2], where);
    for (std::size_t c = 0; c < out.n_cols(); ++c) row[c] = parse_double(fields[c + 3], where);
    out.append_row(prov, row);
  }
  return out;
}

FeatureMatrix read_features_csv(const std::filesystem::path& path) {
  return parse_features_csv(read_text_file(path));
}

}  // namespace eegemo

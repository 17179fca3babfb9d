#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eegemo/channels.hpp"

namespace eegemo::cli {

struct Electrode {
  std::string name;
  ScalpPosition pos;
  double value = 0.0;
};

struct TopomapGrid {
  std::string band;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t size = 64;
  /// Row-major, row 0 at the top (y = +1).
  std::vector<double> values;
  std::vector<Electrode> electrodes;

  double x_of(std::size_t col) const;
  double y_of(std::size_t row) const;
  double at(std::size_t row, std::size_t col) const { return values[row * size + col]; }
};

/// Inverse-distance weighting with weights 1/d^power over the `neighbors`
/// closest electrodes. A point on top of an electrode takes its value.
double idw_value(std::span<const Electrode> electrodes, double x, double y, double power = 2.0,
                 std::size_t neighbors = 4);

/// Fills a size x size grid over [-1, 1]^2 by IDW.
TopomapGrid interpolate_grid(std::vector<Electrode> electrodes, std::size_t size = 64);

/// First sample and length of the analysis window for [t_start, t_end). Spans
/// shorter than `min_len` samples are widened to a `min_len` window centered
/// on the span and clamped to the trial. Throws RangeError.
struct SampleSpan {
  std::size_t start = 0;
  std::size_t length = 0;
};
SampleSpan analysis_span(double t_start, double t_end, double sample_rate_hz,
                         std::size_t n_samples, std::size_t min_len);

std::string format_grid_csv(const TopomapGrid& grid);
std::string format_electrodes_csv(const TopomapGrid& grid);
std::string render_svg(const TopomapGrid& grid);

}  // namespace eegemo::cli

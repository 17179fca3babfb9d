#include "topomap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "eegemo/errors.hpp"
#include "eegemo/text.hpp"

namespace eegemo::cli {

double TopomapGrid::x_of(std::size_t col) const {
  return -1.0 + (2.0 * static_cast<double>(col) + 1.0) / static_cast<double>(size);
}

double TopomapGrid::y_of(std::size_t row) const {
  return 1.0 - (2.0 * static_cast<double>(row) + 1.0) / static_cast<double>(size);
}

double idw_value(std::span<const Electrode> electrodes, double x, double y, double power,
                 std::size_t neighbors) {
  if (electrodes.empty()) throw ValidationError("IDW needs at least one electrode");
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(electrodes.size());
  for (std::size_t i = 0; i < electrodes.size(); ++i) {
    const double dx = electrodes[i].pos.x - x;
    const double dy = electrodes[i].pos.y - y;
    dist.emplace_back(std::hypot(dx, dy), i);
  }
  const std::size_t k = std::min(neighbors, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  if (dist.front().first < 1e-12) return electrodes[dist.front().second].value;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const double w = 1.0 / std::pow(dist[j].first, power);
    num += w * electrodes[dist[j].second].value;
    den += w;
  }
  return num / den;
}

TopomapGrid interpolate_grid(std::vector<Electrode> electrodes, std::size_t size) {
  if (size == 0) throw SizeError("topomap grid size must be >= 1");
  TopomapGrid grid;
  grid.size = size;
  grid.electrodes = std::move(electrodes);
  grid.values.resize(size * size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      grid.values[r * size + c] = idw_value(grid.electrodes, grid.x_of(c), grid.y_of(r));
    }
  }
  return grid;
}

SampleSpan analysis_span(double t_start, double t_end, double sample_rate_hz,
                         std::size_t n_samples, std::size_t min_len) {
  const double duration = static_cast<double>(n_samples) / sample_rate_hz;
  if (!(t_start >= 0.0 && t_start < t_end && t_end <= duration)) {
    throw RangeError("time range [" + format_double(t_start) + ", " + format_double(t_end) +
                     ") must satisfy 0 <= start < end <= " + format_double(duration) + " s");
  }
  auto first = static_cast<std::size_t>(std::floor(t_start * sample_rate_hz));
  auto last = static_cast<std::size_t>(std::ceil(t_end * sample_rate_hz));
  last = std::clamp(last, first + 1, n_samples);
  if (last - first >= min_len) return {first, last - first};
  if (n_samples < min_len) {
    throw RangeError("trial has " + std::to_string(n_samples) + " samples, fewer than one " +
                     std::to_string(min_len) + "-sample analysis window");
  }
  // Center a min_len window on the span, then clamp it inside the trial.
  const double center = 0.5 * static_cast<double>(first + last);
  const double ideal = center - 0.5 * static_cast<double>(min_len);
  const double max_start = static_cast<double>(n_samples - min_len);
  const auto start = static_cast<std::size_t>(std::clamp(std::floor(ideal), 0.0, max_start));
  return {start, min_len};
}

std::string format_grid_csv(const TopomapGrid& grid) {
  std::string out = "row,col,x,y,value\n";
  for (std::size_t r = 0; r < grid.size; ++r) {
    for (std::size_t c = 0; c < grid.size; ++c) {
      out += std::to_string(r) + ',' + std::to_string(c) + ',' + format_double(grid.x_of(c)) +
             ',' + format_double(grid.y_of(r)) + ',' + format_double(grid.at(r, c)) + '\n';
    }
  }
  return out;
}

std::string format_electrodes_csv(const TopomapGrid& grid) {
  std::string out = "electrode,x,y,value\n";
  for (const auto& e : grid.electrodes) {
    out += e.name + ',' + format_double(e.pos.x) + ',' + format_double(e.pos.y) + ',' +
           format_double(e.value) + '\n';
  }
  return out;
}

namespace {

// Blue -> white -> red.
std::string color_for(double t) {
  t = std::clamp(t, 0.0, 1.0);
  int r, g, b;
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(std::lround(59 + u * (255 - 59)));
    g = static_cast<int>(std::lround(76 + u * (255 - 76)));
    b = static_cast<int>(std::lround(192 + u * (255 - 192)));
  } else {
    const double u = (t - 0.5) / 0.5;
    r = static_cast<int>(std::lround(255 + u * (180 - 255)));
    g = static_cast<int>(std::lround(255 + u * (4 - 255)));
    b = static_cast<int>(std::lround(255 + u * (38 - 255)));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string render_svg(const TopomapGrid& grid) {
  constexpr double kCell = 6.0;
  constexpr double kMargin = 20.0;
  const double extent = kCell * static_cast<double>(grid.size);
  const double width = extent + 2 * kMargin;
  auto px = [&](double x) { return kMargin + (x + 1.0) * 0.5 * extent; };
  auto py = [&](double y) { return kMargin + (1.0 - y) * 0.5 * extent; };

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t r = 0; r < grid.size; ++r) {
    for (std::size_t c = 0; c < grid.size; ++c) {
      if (std::hypot(grid.x_of(c), grid.y_of(r)) > 1.0) continue;
      lo = std::min(lo, grid.at(r, c));
      hi = std::max(hi, grid.at(r, c));
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
         fixed(width + 30, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + ' ' +
         fixed(width + 30, 0) + "\">\n";
  out += "<title>" + grid.band + " " + fixed(grid.t_start, 3) + "-" + fixed(grid.t_end, 3) +
         " s</title>\n";
  for (std::size_t r = 0; r < grid.size; ++r) {
    for (std::size_t c = 0; c < grid.size; ++c) {
      if (std::hypot(grid.x_of(c), grid.y_of(r)) > 1.0) continue;
      const double t = (grid.at(r, c) - lo) / (hi - lo);
      out += "<rect x=\"" + fixed(kMargin + kCell * static_cast<double>(c), 1) + "\" y=\"" +
             fixed(kMargin + kCell * static_cast<double>(r), 1) + "\" width=\"" + fixed(kCell, 1) +
             "\" height=\"" + fixed(kCell, 1) + "\" fill=\"" + color_for(t) + "\"/>\n";
    }
  }
  out += "<circle cx=\"" + fixed(px(0)) + "\" cy=\"" + fixed(py(0)) + "\" r=\"" +
         fixed(extent / 2) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (const auto& e : grid.electrodes) {
    out += "<circle cx=\"" + fixed(px(e.pos.x)) + "\" cy=\"" + fixed(py(e.pos.y)) +
           "\" r=\"2\" fill=\"black\"/>\n";
    out += "<text x=\"" + fixed(px(e.pos.x) + 3) + "\" y=\"" + fixed(py(e.pos.y) - 3) +
           "\" font-size=\"7\">" + e.name + "</text>\n";
  }
  out += "<text x=\"" + fixed(kMargin) + "\" y=\"" + fixed(width + 18) +
         "\" font-size=\"10\">" + grid.band + " power, min " + format_double(lo) + " max " +
         format_double(hi) + " uV^2</text>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace eegemo::cli

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace eegemo {

/// Half-open frequency interval [low_hz, high_hz).
struct Band {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;

  bool contains(double f) const { return f >= low_hz && f < high_hz; }
};

/// Sorted, non-overlapping bands.
struct BandSet {
  std::vector<Band> bands;

  std::size_t size() const { return bands.size(); }
  const Band& operator[](std::size_t i) const { return bands[i]; }
  /// Index of the band containing f, or size() when none does.
  std::size_t band_index(double f) const;
  /// Case-insensitive lookup by band name; throws ConfigError.
  const Band& by_name(std::string_view name) const;
};

enum class BandSelector {
  /// Theta 4-8, Alpha 8-16, Beta 16-32, Gamma 32-64 Hz.
  TableOne,
  /// Five intervals bounded by the edges 4, 8, 12, 16, 25, 45 Hz.
  Meta,
};

BandSet band_set(BandSelector selector);
/// Accepts "table_one" or "meta"; throws ConfigError otherwise.
BandSet band_set(std::string_view selector);
BandSelector parse_band_selector(std::string_view selector);
std::string_view band_selector_name(BandSelector selector);

/// Checks ordering/overlap invariants; throws ConfigError.
void validate_band_set(const BandSet& set);

}  // namespace eegemo

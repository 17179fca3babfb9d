#include "eegemo/bands.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "eegemo/errors.hpp"

namespace eegemo {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::size_t BandSet::band_index(double f) const {
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (bands[i].contains(f)) return i;
  }
  return bands.size();
}

const Band& BandSet::by_name(std::string_view name) const {
  const std::string key = lower(name);
  for (const auto& b : bands) {
    if (lower(b.name) == key) return b;
  }
  throw ConfigError("unknown band '" + std::string(name) + "'");
}

BandSet band_set(BandSelector selector) {
  switch (selector) {
    case BandSelector::TableOne:
      return BandSet{{{"Theta", 4.0, 8.0},
                      {"Alpha", 8.0, 16.0},
                      {"Beta", 16.0, 32.0},
                      {"Gamma", 32.0, 64.0}}};
    case BandSelector::Meta: {
      constexpr std::array<double, 6> edges = {4, 8, 12, 16, 25, 45};
      BandSet set;
      for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        std::string name = std::to_string(static_cast<int>(edges[i])) + "-" +
                           std::to_string(static_cast<int>(edges[i + 1])) + "Hz";
        set.bands.push_back({std::move(name), edges[i], edges[i + 1]});
      }
      return set;
    }
  }
  throw ConfigError("unknown band selector");
}

BandSelector parse_band_selector(std::string_view selector) {
  const std::string key = lower(selector);
  if (key == "table_one") return BandSelector::TableOne;
  if (key == "meta") return BandSelector::Meta;
  throw ConfigError("unknown band selector '" + std::string(selector) +
                    "' (expected table_one or meta)");
}

BandSet band_set(std::string_view selector) {
  return band_set(parse_band_selector(selector));
}

std::string_view band_selector_name(BandSelector selector) {
  return selector == BandSelector::TableOne ? "table_one" : "meta";
}

void validate_band_set(const BandSet& set) {
  if (set.bands.empty()) throw ConfigError("band set is empty");
  for (std::size_t i = 0; i < set.bands.size(); ++i) {
    const Band& b = set.bands[i];
    if (!(b.low_hz < b.high_hz)) {
      throw ConfigError("band '" + b.name + "' has low >= high");
    }
    if (i > 0 && b.low_hz < set.bands[i - 1].high_hz) {
      throw ConfigError("band '" + b.name + "' overlaps or is out of order");
    }
  }
}

}  // namespace eegemo

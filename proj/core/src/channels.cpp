#include "eegemo/channels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include "eegemo/errors.hpp"

namespace eegemo {
namespace {

struct ElectrodeEntry {
  std::string_view name;
  Region region;
  // Spherical 10-20 coordinates: inclination from Cz and azimuth measured
  // clockwise from the nose (degrees).
  double inclination_deg;
  double azimuth_deg;
};

// DEAP channel order.
constexpr std::array<ElectrodeEntry, kDeapChannelCount> kElectrodes = {{
    {"Fp1", Region::Prefrontal, 92.0, -18.0},
    {"AF3", Region::Prefrontal, 74.0, -23.0},
    {"F3", Region::Frontal, 60.0, -39.0},
    {"F7", Region::Frontal, 92.0, -54.0},
    {"FC5", Region::Frontal, 72.0, -69.0},
    {"FC1", Region::Frontal, 32.0, -45.0},
    {"C3", Region::Central, 46.0, -90.0},
    {"T7", Region::Temporal, 92.0, -90.0},
    {"CP5", Region::Parietal, 72.0, -111.0},
    {"CP1", Region::Parietal, 32.0, -135.0},
    {"P3", Region::Parietal, 60.0, -141.0},
    {"P7", Region::Parietal, 92.0, -126.0},
    {"PO3", Region::Occipital, 74.0, -157.0},
    {"O1", Region::Occipital, 92.0, -162.0},
    {"Oz", Region::Occipital, 92.0, 180.0},
    {"Pz", Region::Parietal, 46.0, 180.0},
    {"Fp2", Region::Prefrontal, 92.0, 18.0},
    {"AF4", Region::Prefrontal, 74.0, 23.0},
    {"Fz", Region::Frontal, 46.0, 0.0},
    {"F4", Region::Frontal, 60.0, 39.0},
    {"F8", Region::Frontal, 92.0, 54.0},
    {"FC6", Region::Frontal, 72.0, 69.0},
    {"FC2", Region::Frontal, 32.0, 45.0},
    {"Cz", Region::Central, 0.0, 0.0},
    {"C4", Region::Central, 46.0, 90.0},
    {"T8", Region::Temporal, 92.0, 90.0},
    {"CP6", Region::Parietal, 72.0, 111.0},
    {"CP2", Region::Parietal, 32.0, 135.0},
    {"P4", Region::Parietal, 60.0, 141.0},
    {"P8", Region::Parietal, 92.0, 126.0},
    {"PO4", Region::Occipital, 74.0, 157.0},
    {"O2", Region::Occipital, 92.0, 162.0},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view region_name(Region r) {
  switch (r) {
    case Region::Prefrontal: return "Prefrontal";
    case Region::Frontal: return "Frontal";
    case Region::Central: return "Central";
    case Region::Temporal: return "Temporal";
    case Region::Parietal: return "Parietal";
    case Region::Occipital: return "Occipital";
  }
  return "?";
}

Region parse_region(std::string_view name) {
  for (Region r : kAllRegions) {
    if (iequals(region_name(r), name)) return r;
  }
  throw ConfigError("unknown region '" + std::string(name) + "'");
}

std::optional<std::size_t> ChannelLayout::index_of(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names_.begin());
}

Region ChannelLayout::region_of(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw ConfigError("unknown electrode '" + std::string(name) + "'");
  return regions_[*idx];
}

std::vector<std::size_t> ChannelLayout::channels_in(Region r) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (regions_[i] == r) out.push_back(i);
  }
  return out;
}

ChannelLayout ChannelLayout::with_region(std::string_view name, Region r) const {
  auto idx = index_of(name);
  if (!idx) throw ConfigError("unknown electrode '" + std::string(name) + "'");
  ChannelLayout copy = *this;
  copy.regions_[*idx] = r;
  return copy;
}

ChannelLayout default_channel_layout() {
  ChannelLayout layout;
  layout.names_.reserve(kElectrodes.size());
  layout.regions_.reserve(kElectrodes.size());
  for (const auto& e : kElectrodes) {
    layout.names_.emplace_back(e.name);
    layout.regions_.push_back(e.region);
  }
  return layout;
}

ScalpPosition scalp_position(std::string_view electrode) {
  for (const auto& e : kElectrodes) {
    if (e.name == electrode) {
      const double r = e.inclination_deg / 100.0;
      const double az = e.azimuth_deg * std::numbers::pi / 180.0;
      return {r * std::sin(az), r * std::cos(az)};
    }
  }
  throw ConfigError("no scalp position for electrode '" + std::string(electrode) + "'");
}

}  // namespace eegemo

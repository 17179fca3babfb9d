#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eegemo {

enum class Region { Prefrontal, Frontal, Central, Temporal, Parietal, Occipital };

inline constexpr std::size_t kRegionCount = 6;
inline constexpr std::array<Region, kRegionCount> kAllRegions = {
    Region::Prefrontal, Region::Frontal,  Region::Central,
    Region::Temporal,   Region::Parietal, Region::Occipital};

std::string_view region_name(Region r);
/// Case-insensitive; throws ConfigError on unknown names.
Region parse_region(std::string_view name);

inline constexpr std::size_t kDeapChannelCount = 32;

/// The 32-electrode DEAP montage and its electrode -> region mapping.
///
/// Default region table (standard 10-20 prefix grouping):
///
///   Prefrontal  Fp1 Fp2 AF3 AF4
///   Frontal     F3 F4 F7 F8 Fz FC1 FC2 FC5 FC6
///   Central     C3 C4 Cz
///   Temporal    T7 T8
///   Parietal    P3 P4 P7 P8 Pz CP1 CP2 CP5 CP6
///   Occipital   O1 O2 Oz PO3 PO4
///
/// Individual assignments can be overridden with `with_region`.
class ChannelLayout {
 public:
  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t index) const { return names_.at(index); }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Throws ConfigError when `name` is not part of the layout.
  Region region_of(std::string_view name) const;
  Region region_at(std::size_t index) const { return regions_.at(index); }
  /// Channel indices belonging to `r`, ascending.
  std::vector<std::size_t> channels_in(Region r) const;

  /// Copy of this layout with one electrode moved to another region.
  ChannelLayout with_region(std::string_view name, Region r) const;

  friend ChannelLayout default_channel_layout();

 private:
  std::vector<std::string> names_;
  std::vector<Region> regions_;
};

/// Fp1, AF3, F3, F7, FC5, FC1, C3, T7, CP5, CP1, P3, P7, PO3, O1, Oz, Pz,
/// Fp2, AF4, Fz, F4, F8, FC6, FC2, Cz, C4, T8, CP6, CP2, P4, P8, PO4, O2.
ChannelLayout default_channel_layout();

/// 0-based indices of the 14-channel subset used for the windowed meta vectors.
inline constexpr std::array<std::size_t, 14> kMetaChannelSubset = {
    1, 2, 3, 4, 6, 11, 13, 17, 19, 20, 21, 25, 29, 31};

/// 2-D scalp position (unit-circle projection, +y towards the nose, +x right).
struct ScalpPosition {
  double x = 0.0;
  double y = 0.0;
};

/// Azimuthal-equidistant projection of the 10-20 position, radius =
/// inclination from Cz / 100 degrees. Throws ConfigError for unknown names.
ScalpPosition scalp_position(std::string_view electrode);

}  // namespace eegemo

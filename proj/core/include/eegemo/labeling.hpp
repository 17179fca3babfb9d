#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eegemo/tensor.hpp"

namespace eegemo {

enum class Quadrant { HAHV, HALV, LAHV, LALV };

std::string_view quadrant_name(Quadrant q);
/// Throws ValidationError on anything but the four quadrant names.
Quadrant parse_quadrant(std::string_view name);
Quadrant quadrant_of(bool valence_positive, bool arousal_positive);

struct TrialLabel {
  bool valence_positive = false;
  bool arousal_positive = false;
  Quadrant quadrant = Quadrant::LALV;

  friend bool operator==(const TrialLabel&, const TrialLabel&) = default;
};

/// Per-trial labels; index = trial.
struct LabelSet {
  std::vector<TrialLabel> trials;

  std::size_t size() const { return trials.size(); }
  const TrialLabel& operator[](std::size_t trial) const { return trials.at(trial); }
  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

/// Middle of the sorted values, averaging the two central ones for even n.
double median(std::span<const double> values);

/// values[i] >= median(values); ties at the median count as positive.
/// Throws SizeError on empty input.
std::vector<bool> median_split(std::span<const double> values);

/// Same rule against an explicit threshold.
std::vector<bool> threshold_split(std::span<const double> values, double threshold);

LabelSet make_labels(const Ratings& ratings);

enum class MedianScope { Pooled, PerSubject };

/// Labels for several subjects. Pooled computes one median per scale over all
/// subjects' ratings; PerSubject splits each subject on its own medians.
std::vector<LabelSet> make_labels(std::span<const Ratings> subjects, MedianScope scope);

/// CSV `trial,valence_positive,arousal_positive,quadrant` with 0/1 flags.
std::string format_labels_csv(const LabelSet& labels);
void write_labels_csv(const LabelSet& labels, const std::filesystem::path& path);
LabelSet parse_labels_csv(std::string_view csv);
LabelSet read_labels_csv(const std::filesystem::path& path);

}  // namespace eegemo

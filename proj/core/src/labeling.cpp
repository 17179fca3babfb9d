#include "eegemo/labeling.hpp"

#include <algorithm>

#include "eegemo/errors.hpp"
#include "eegemo/text.hpp"

namespace eegemo {

std::string_view quadrant_name(Quadrant q) {
  switch (q) {
    case Quadrant::HAHV: return "HAHV";
    case Quadrant::HALV: return "HALV";
    case Quadrant::LAHV: return "LAHV";
    case Quadrant::LALV: return "LALV";
  }
  return "?";
}

Quadrant parse_quadrant(std::string_view name) {
  for (Quadrant q : {Quadrant::HAHV, Quadrant::HALV, Quadrant::LAHV, Quadrant::LALV}) {
    if (quadrant_name(q) == name) return q;
  }
  throw ValidationError("unknown quadrant '" + std::string(name) + "'");
}

Quadrant quadrant_of(bool valence_positive, bool arousal_positive) {
  if (arousal_positive) return valence_positive ? Quadrant::HAHV : Quadrant::HALV;
  return valence_positive ? Quadrant::LAHV : Quadrant::LALV;
}

double median(std::span<const double> values) {
  if (values.empty()) throw SizeError("median of an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

std::vector<bool> threshold_split(std::span<const double> values, double threshold) {
  std::vector<bool> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] >= threshold;
  return out;
}

std::vector<bool> median_split(std::span<const double> values) {
  return threshold_split(values, median(values));
}

namespace {

LabelSet labels_from_flags(const std::vector<bool>& valence, const std::vector<bool>& arousal) {
  LabelSet out;
  out.trials.resize(valence.size());
  for (std::size_t i = 0; i < valence.size(); ++i) {
    out.trials[i] = {valence[i], arousal[i], quadrant_of(valence[i], arousal[i])};
  }
  return out;
}

void check_ratings(const Ratings& r) {
  if (r.valence.size() != r.arousal.size()) {
    throw ShapeError("valence and arousal columns differ in length");
  }
  if (r.size() == 0) throw SizeError("no ratings");
}

}  // namespace

LabelSet make_labels(const Ratings& ratings) {
  check_ratings(ratings);
  return labels_from_flags(median_split(ratings.valence), median_split(ratings.arousal));
}

std::vector<LabelSet> make_labels(std::span<const Ratings> subjects, MedianScope scope) {
  std::vector<LabelSet> out;
  if (scope == MedianScope::PerSubject) {
    for (const auto& r : subjects) out.push_back(make_labels(r));
    return out;
  }
  std::vector<double> all_valence;
  std::vector<double> all_arousal;
  for (const auto& r : subjects) {
    check_ratings(r);
    all_valence.insert(all_valence.end(), r.valence.begin(), r.valence.end());
    all_arousal.insert(all_arousal.end(), r.arousal.begin(), r.arousal.end());
  }
  const double mv = median(all_valence);
  const double ma = median(all_arousal);
  for (const auto& r : subjects) {
    out.push_back(labels_from_flags(threshold_split(r.valence, mv), threshold_split(r.arousal, ma)));
  }
  return out;
}

std::string format_labels_csv(const LabelSet& labels) {
  std::string out = "trial,valence_positive,arousal_positive,quadrant\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels.trials[i];
    out += std::to_string(i) + ',' + (l.valence_positive ? '1' : '0') + ',' +
           (l.arousal_positive ? '1' : '0') + ',' + std::string(quadrant_name(l.quadrant)) + '\n';
  }
  return out;
}

void write_labels_csv(const LabelSet& labels, const std::filesystem::path& path) {
  write_text_file(path, format_labels_csv(labels));
}

LabelSet parse_labels_csv(std::string_view csv) {
  const auto lines = split_lines(csv);
  if (lines.empty() || lines.front() != "trial,valence_positive,arousal_positive,quadrant") {
    throw ValidationError(
        "labels CSV must start with header 'trial,valence_positive,arousal_positive,quadrant'");
  }
  LabelSet out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split_csv(lines[i]);
    const std::string where = "labels row " + std::to_string(i);
    if (f.size() != 4) throw ValidationError(where + ": expected 4 fields");
    if (parse_int(f[0], where) != static_cast<long long>(out.size())) {
      throw ValidationError(where + ": trials must be listed in order starting at 0");
    }
    auto flag = [&](std::string_view s) {
      if (s == "1") return true;
      if (s == "0") return false;
      throw ValidationError(where + ": flags must be 0 or 1");
    };
    TrialLabel l{flag(f[1]), flag(f[2]), parse_quadrant(f[3])};
    if (l.quadrant != quadrant_of(l.valence_positive, l.arousal_positive)) {
      throw ValidationError(where + ": quadrant disagrees with the flags");
    }
    out.trials.push_back(l);
  }
  return out;
}

LabelSet read_labels_csv(const std::filesystem::path& path) {
  return parse_labels_csv(read_text_file(path));
}

}  // namespace eegemo

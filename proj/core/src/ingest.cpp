#include "eegemo/ingest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>
#include <numeric>
#include <random>

#include "byteio.hpp"
#include "eegemo/errors.hpp"
#include "eegemo/text.hpp"

namespace eegemo {
using detail::put_u32;

namespace {

constexpr char kMagic[4] = {'E', 'E', 'G', 'T'};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) throw SizeError(std::string(what) + " does not fit the EEGT header");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

TensorFileHeader decode_tensor_header(std::string_view bytes) {
  if (bytes.size() < kTensorHeaderBytes) {
    throw FormatError("EEGT header truncated: " + std::to_string(bytes.size()) + " of " +
                      std::to_string(kTensorHeaderBytes) + " bytes");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic (expected EEGT)");
  detail::ByteReader in(bytes.substr(4, kTensorHeaderBytes - 4));
  TensorFileHeader h;
  h.version = in.u32();
  if (h.version != kTensorFormatVersion) {
    throw FormatError("unsupported EEGT version " + std::to_string(h.version));
  }
  h.n_trials = in.u32();
  h.n_channels = in.u32();
  h.n_samples = in.u32();
  h.subject_id = in.u32();
  h.sample_rate_hz = in.f64();
  if (h.n_trials == 0 || h.n_channels == 0 || h.n_samples == 0) {
    throw FormatError("EEGT dimensions must all be >= 1");
  }
  if (!(h.sample_rate_hz > 0.0) || !std::isfinite(h.sample_rate_hz)) {
    throw FormatError("EEGT sample rate must be positive");
  }
  return h;
}

std::string encode_tensor(const TrialTensor& tensor) {
  std::string out;
  const auto data = tensor.data();
  out.reserve(kTensorHeaderBytes + data.size() * sizeof(float));
  out.append(kMagic, 4);
  put_u32(out, kTensorFormatVersion);
  put_u32(out, checked_u32(tensor.n_trials(), "n_trials"));
  put_u32(out, checked_u32(tensor.n_channels(), "n_channels"));
  put_u32(out, checked_u32(tensor.n_samples(), "n_samples"));
  put_u32(out, tensor.subject_id());
  detail::put_f64(out, tensor.sample_rate_hz());
  for (double v : data) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

TrialTensor decode_tensor(std::string_view bytes) {
  const TensorFileHeader h = decode_tensor_header(bytes);
  const std::size_t expected = kTensorHeaderBytes + h.payload_bytes();
  if (bytes.size() != expected) {
    throw CorruptionError("EEGT payload size mismatch: expected " + std::to_string(expected) +
                          " bytes, found " + std::to_string(bytes.size()));
  }
  const std::size_t count = h.payload_bytes() / sizeof(float);
  std::vector<double> data(count);
  detail::ByteReader payload(bytes.substr(kTensorHeaderBytes));
  for (auto& v : data) v = static_cast<double>(std::bit_cast<float>(payload.u32()));
  TrialTensor tensor(h.subject_id, h.n_trials, h.n_channels, h.n_samples, h.sample_rate_hz,
                     std::move(data));
  tensor.check_finite();
  return tensor;
}

TrialTensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(read_text_file(path));
}

void write_tensor(const TrialTensor& tensor, const std::filesystem::path& path) {
  write_text_file(path, encode_tensor(tensor));
}

Ratings parse_ratings(std::string_view csv) {
  auto lines = split_lines(csv);
  if (lines.empty() || lines.front() != "trial,valence,arousal") {
    throw ValidationError("ratings CSV must start with header 'trial,valence,arousal'");
  }
  struct Row {
    long long trial;
    double valence;
    double arousal;
  };
  std::vector<Row> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_csv(lines[i]);
    const std::string where = "ratings row " + std::to_string(i);
    if (fields.size() != 3) throw ValidationError(where + ": expected 3 fields");
    Row r{parse_int(fields[0], where), parse_double(fields[1], where),
          parse_double(fields[2], where)};
    for (double v : {r.valence, r.arousal}) {
      if (!(v >= kRatingMin && v <= kRatingMax)) {
        throw ValidationError(where + " (trial " + std::to_string(r.trial) + "): rating " +
                              format_double(v) + " outside [1, 9]");
      }
    }
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.trial < b.trial; });
  Ratings out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].trial != static_cast<long long>(i)) {
      if (i > 0 && rows[i].trial == rows[i - 1].trial) {
        throw ValidationError("duplicate ratings for trial " + std::to_string(rows[i].trial));
      }
      throw ValidationError("missing ratings for trial " + std::to_string(i));
    }
    out.valence.push_back(rows[i].valence);
    out.arousal.push_back(rows[i].arousal);
  }
  if (out.size() == 0) throw ValidationError("ratings CSV has no rows");
  return out;
}

Ratings read_ratings(const std::filesystem::path& path) {
  return parse_ratings(read_text_file(path));
}

std::string format_ratings(const Ratings& ratings) {
  std::string out = "trial,valence,arousal\n";
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    out += std::to_string(i) + ',' + format_double(ratings.valence[i]) + ',' +
           format_double(ratings.arousal[i]) + '\n';
  }
  return out;
}

void write_ratings(const Ratings& ratings, const std::filesystem::path& path) {
  write_text_file(path, format_ratings(ratings));
}

SyntheticSubject generate_synthetic(const SyntheticSpec& spec, const SyntheticDims& dims) {
  if (dims.n_trials == 0 || dims.n_channels == 0 || dims.n_samples == 0) {
    throw ConfigError("synthetic dimensions must all be >= 1");
  }
  const double fs = dims.sample_rate_hz;
  double max_center = 0.0;
  for (const auto& b : spec.bands) {
    if (!(b.center_hz >= b.low_hz && b.center_hz < b.high_hz)) {
      throw ConfigError("synthetic band '" + b.name + "' center lies outside its band");
    }
    if (b.amplitude_uv < 0.0) throw ConfigError("synthetic amplitudes must be >= 0");
    max_center = std::max(max_center, b.center_hz);
  }
  if (!(fs > 2.0 * max_center)) {
    throw ConfigError("sample rate " + format_double(fs) +
                      " Hz violates Nyquist for a " + format_double(max_center) + " Hz component");
  }
  if (spec.noise_sigma_uv < 0.0) throw ConfigError("noise sigma must be >= 0");
  const LabelRule& rule = spec.label_rule;
  if (rule.enabled &&
      (rule.valence_band >= spec.bands.size() || rule.arousal_band >= spec.bands.size())) {
    throw ConfigError("label rule refers to a missing synthetic band");
  }

  std::mt19937_64 rng(derive_seed(spec.rng_seed, seed_stream::kSynthetic));
  const std::size_t n = dims.n_trials;

  // ceil(n/2) "high" trials so the median split lands between the groups.
  auto draw_high_set = [&] {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> high(n, false);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) high[order[i]] = true;
    return high;
  };

  Ratings ratings;
  ratings.valence.resize(n);
  ratings.arousal.resize(n);
  std::vector<bool> valence_high(n, false);
  std::vector<bool> arousal_high(n, false);
  if (rule.enabled) {
    valence_high = draw_high_set();
    arousal_high = draw_high_set();
    std::uniform_real_distribution<double> high_rating(6.0, 9.0);
    std::uniform_real_distribution<double> low_rating(1.0, 4.0);
    for (std::size_t t = 0; t < n; ++t) {
      ratings.valence[t] = valence_high[t] ? high_rating(rng) : low_rating(rng);
      ratings.arousal[t] = arousal_high[t] ? high_rating(rng) : low_rating(rng);
    }
  } else {
    std::uniform_real_distribution<double> any_rating(kRatingMin, kRatingMax);
    for (std::size_t t = 0; t < n; ++t) {
      ratings.valence[t] = any_rating(rng);
      ratings.arousal[t] = any_rating(rng);
    }
  }

  TrialTensor tensor(dims.subject_id, n, dims.n_channels, dims.n_samples, fs);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> amplitude(spec.bands.size());
  std::vector<double> phase(spec.bands.size());

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t b = 0; b < spec.bands.size(); ++b) {
      double gain = 1.0;
      if (rule.enabled && b == rule.valence_band) {
        gain *= valence_high[t] ? rule.high_gain : rule.low_gain;
      }
      if (rule.enabled && b == rule.arousal_band) {
        gain *= arousal_high[t] ? rule.high_gain : rule.low_gain;
      }
      amplitude[b] = spec.bands[b].amplitude_uv * gain;
    }
    for (std::size_t ch = 0; ch < dims.n_channels; ++ch) {
      for (auto& p : phase) p = phase_dist(rng);
      auto out = tensor.channel(t, ch);
      for (std::size_t s = 0; s < dims.n_samples; ++s) {
        const double time = static_cast<double>(s) / fs;
        double v = 0.0;
        for (std::size_t b = 0; b < spec.bands.size(); ++b) {
          if (amplitude[b] == 0.0) continue;
          v += amplitude[b] *
               std::sin(2.0 * std::numbers::pi * spec.bands[b].center_hz * time + phase[b]);
        }
        if (spec.noise_sigma_uv > 0.0) v += spec.noise_sigma_uv * noise(rng);
        out[s] = v;
      }
    }
  }
  return {std::move(tensor), std::move(ratings)};
}

}  // namespace eegemo

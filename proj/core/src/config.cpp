#include "eegemo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "eegemo/errors.hpp"
#include "eegemo/text.hpp"

namespace eegemo {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    auto pos = s.find(',');
    auto item = trim(s.substr(0, pos));
    if (!item.empty()) out.push_back(item);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("cannot parse value '" + std::string(value) + "' for key '" +
                      std::string(key) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "on" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "off" || value == "0" || value == "no") return false;
  throw ConfigError("expected boolean for key '" + std::string(key) + "'");
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view value) {
  std::vector<T> out;
  for (auto item : split_list(value)) out.push_back(parse_number<T>(key, item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t synthetic_band_index(const SyntheticSpec& spec, std::string_view name) {
  for (std::size_t i = 0; i < spec.bands.size(); ++i) {
    if (spec.bands[i].name == name) return i;
  }
  throw ConfigError("unknown synthetic band '" + std::string(name) + "'");
}

}  // namespace

LstmConfig LstmConfig::full_size() {
  LstmConfig c;
  c.hidden_sizes = {512, 256, 128, 64, 10};
  c.epochs = 1000;
  return c;
}

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.bands = {{"theta", 4.0, 8.0, 6.0, 3.0},
                {"alpha", 8.0, 16.0, 10.0, 5.0},
                {"beta", 16.0, 32.0, 20.0, 2.5},
                {"gamma", 32.0, 64.0, 40.0, 1.0}};
  return spec;
}

ChannelLayout PipelineConfig::layout() const {
  ChannelLayout l = default_channel_layout();
  for (const auto& [name, region] : region_overrides) l = l.with_region(name, region);
  return l;
}

void validate(const PipelineConfig& c) {
  if (c.window_step < 1) throw ConfigError("window_step must be >= 1");
  if (c.window_len < 2 || !is_power_of_two(c.window_len)) {
    throw ConfigError("window_len must be a power of two >= 2");
  }
  if (c.welch_segment_len < 2 || !is_power_of_two(c.welch_segment_len)) {
    throw ConfigError("welch_segment_len must be a power of two >= 2");
  }
  if (!(c.welch_overlap >= 0.0 && c.welch_overlap < 1.0)) {
    throw ConfigError("welch_overlap must lie in [0, 1)");
  }
  if (c.channel_subset.empty()) throw ConfigError("channel_subset is empty");
  for (std::size_t i = 0; i < c.channel_subset.size(); ++i) {
    if (c.channel_subset[i] >= kDeapChannelCount) {
      throw ConfigError("channel_subset index out of [0, 31]");
    }
    if (i > 0 && c.channel_subset[i] <= c.channel_subset[i - 1]) {
      throw ConfigError("channel_subset must be strictly increasing");
    }
  }
  if (c.knn_k < 1) throw ConfigError("knn_k must be >= 1");
  if (!(c.svm_c > 0.0)) throw ConfigError("svm_c must be > 0");
  if (c.svm_epochs < 1) throw ConfigError("svm_epochs must be >= 1");
  if (c.cv_folds < 2) throw ConfigError("cv_folds must be >= 2");

  const LstmConfig& l = c.lstm;
  if (l.hidden_sizes.empty()) throw ConfigError("lstm.hidden_sizes is empty");
  for (auto h : l.hidden_sizes) {
    if (h == 0) throw ConfigError("lstm.hidden_sizes entries must be >= 1");
  }
  if (l.dropout.size() != l.hidden_sizes.size()) {
    throw ConfigError("lstm.dropout needs one rate per recurrent layer");
  }
  for (double p : l.dropout) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rates must lie in [0, 1)");
  }
  if (!(l.head_dropout >= 0.0 && l.head_dropout < 1.0)) {
    throw ConfigError("lstm.head_dropout must lie in [0, 1)");
  }
  if (l.n_outputs > 2) throw ConfigError("lstm.n_outputs must be 1 or 2");
  if (l.head_hidden == 0 || l.n_outputs == 0 || l.seq_len == 0 || l.batch_size == 0) {
    throw ConfigError("lstm sizes must be >= 1");
  }
  if (!(l.learning_rate > 0.0) || !(l.rho >= 0.0 && l.rho < 1.0) || !(l.epsilon >= 0.0)) {
    throw ConfigError("invalid RMSprop hyperparameters");
  }
  if (!(l.momentum >= 0.0 && l.momentum < 1.0)) {
    throw ConfigError("lstm.momentum must lie in [0, 1)");
  }
  if (!(l.bn_momentum >= 0.0 && l.bn_momentum < 1.0) || !(l.bn_epsilon > 0.0)) {
    throw ConfigError("invalid batch-norm hyperparameters");
  }
  if (!(l.train_fraction > 0.0 && l.train_fraction < 1.0)) {
    throw ConfigError("lstm.train_fraction must lie in (0, 1)");
  }

  const SyntheticSpec& s = c.synthetic;
  if (!(s.noise_sigma_uv >= 0.0)) throw ConfigError("synth.noise_sigma must be >= 0");
  for (const auto& b : s.bands) {
    if (!(b.amplitude_uv >= 0.0)) throw ConfigError("synthetic amplitudes must be >= 0");
    if (!(b.center_hz >= b.low_hz && b.center_hz < b.high_hz)) {
      throw ConfigError("synthetic band '" + b.name + "' center lies outside its band");
    }
  }
  if (s.label_rule.enabled && (s.label_rule.valence_band >= s.bands.size() ||
                               s.label_rule.arousal_band >= s.bands.size())) {
    throw ConfigError("label rule refers to a missing synthetic band");
  }
  const SyntheticDims& d = c.synthetic_dims;
  if (d.n_trials == 0 || d.n_channels == 0 || d.n_samples == 0 || !(d.sample_rate_hz > 0.0)) {
    throw ConfigError("synthetic dimensions must be >= 1 and sample rate > 0");
  }
}

void apply_setting(PipelineConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  key = trim(key);
  auto num_size = [&] { return parse_number<std::size_t>(key, value); };
  auto num_double = [&] { return parse_number<double>(key, value); };

  if (key == "window_len") c.window_len = num_size();
  else if (key == "window_step") c.window_step = num_size();
  else if (key == "welch_segment_len") c.welch_segment_len = num_size();
  else if (key == "welch_overlap") c.welch_overlap = num_double();
  else if (key == "channel_subset") c.channel_subset = parse_list<std::size_t>(key, value);
  else if (key == "band_set") c.band_set = parse_band_selector(value);
  else if (key == "rng_seed") c.rng_seed = parse_number<std::uint64_t>(key, value);
  else if (key == "knn_k") c.knn_k = num_size();
  else if (key == "svm_c") c.svm_c = num_double();
  else if (key == "svm_epochs") c.svm_epochs = num_size();
  else if (key == "svm_batch_size") c.svm_batch_size = num_size();
  else if (key == "cv_folds") c.cv_folds = num_size();
  else if (key.starts_with("region.")) {
    std::string name(key.substr(7));
    Region r = parse_region(value);
    default_channel_layout().region_of(name);  // validates the name
    c.region_overrides.emplace_back(std::move(name), r);
  }
  else if (key == "lstm.hidden_sizes") c.lstm.hidden_sizes = parse_list<std::size_t>(key, value);
  else if (key == "lstm.dropout") c.lstm.dropout = parse_list<double>(key, value);
  else if (key == "lstm.head_dropout") c.lstm.head_dropout = num_double();
  else if (key == "lstm.head_hidden") c.lstm.head_hidden = num_size();
  else if (key == "lstm.n_outputs") c.lstm.n_outputs = num_size();
  else if (key == "lstm.seq_len") c.lstm.seq_len = num_size();
  else if (key == "lstm.epochs") c.lstm.epochs = num_size();
  else if (key == "lstm.batch_size") c.lstm.batch_size = num_size();
  else if (key == "lstm.learning_rate") c.lstm.learning_rate = num_double();
  else if (key == "lstm.rho") c.lstm.rho = num_double();
  else if (key == "lstm.epsilon") c.lstm.epsilon = num_double();
  else if (key == "lstm.momentum") c.lstm.momentum = num_double();
  else if (key == "lstm.bn_momentum") c.lstm.bn_momentum = num_double();
  else if (key == "lstm.bn_epsilon") c.lstm.bn_epsilon = num_double();
  else if (key == "lstm.checkpoint_every") c.lstm.checkpoint_every = num_size();
  else if (key == "lstm.train_fraction") c.lstm.train_fraction = num_double();
  else if (key == "lstm.split") {
    if (value == "trial") c.lstm.split = SplitMode::ByTrial;
    else if (value == "window") c.lstm.split = SplitMode::ByWindow;
    else throw ConfigError("lstm.split must be 'trial' or 'window'");
  }
  else if (key == "lstm.size") {
    if (value == "full") {
      auto full = LstmConfig::full_size();
      c.lstm.hidden_sizes = full.hidden_sizes;
    } else if (value != "desk") {
      throw ConfigError("lstm.size must be 'desk' or 'full'");
    }
  }
  else if (key == "synth.n_trials") c.synthetic_dims.n_trials = num_size();
  else if (key == "synth.n_channels") c.synthetic_dims.n_channels = num_size();
  else if (key == "synth.n_samples") c.synthetic_dims.n_samples = num_size();
  else if (key == "synth.sample_rate_hz") c.synthetic_dims.sample_rate_hz = num_double();
  else if (key == "synth.subject_id") c.synthetic_dims.subject_id = parse_number<std::uint32_t>(key, value);
  else if (key == "synth.noise_sigma") c.synthetic.noise_sigma_uv = num_double();
  else if (key == "synth.label_rule") c.synthetic.label_rule.enabled = parse_bool(key, value);
  else if (key == "synth.high_gain") c.synthetic.label_rule.high_gain = num_double();
  else if (key == "synth.low_gain") c.synthetic.label_rule.low_gain = num_double();
  else if (key == "synth.valence_band") c.synthetic.label_rule.valence_band = synthetic_band_index(c.synthetic, value);
  else if (key == "synth.arousal_band") c.synthetic.label_rule.arousal_band = synthetic_band_index(c.synthetic, value);
  else if (key.starts_with("synth.") && (key.ends_with(".amplitude") || key.ends_with(".center_hz"))) {
    auto rest = key.substr(6);
    auto dot = rest.find('.');
    auto& band = c.synthetic.bands[synthetic_band_index(c.synthetic, rest.substr(0, dot))];
    if (rest.substr(dot + 1) == "amplitude") band.amplitude_uv = num_double();
    else band.center_hz = num_double();
  }
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string canonical_string(const PipelineConfig& c) {
  std::ostringstream out;
  auto kv = [&](std::string_view k, const std::string& v) { out << k << " = " << v << '\n'; };
  kv("window_len", std::to_string(c.window_len));
  kv("window_step", std::to_string(c.window_step));
  kv("welch_segment_len", std::to_string(c.welch_segment_len));
  kv("welch_overlap", format_double(c.welch_overlap));
  kv("channel_subset", join(c.channel_subset));
  kv("band_set", std::string(band_selector_name(c.band_set)));
  kv("rng_seed", std::to_string(c.rng_seed));
  kv("knn_k", std::to_string(c.knn_k));
  kv("svm_c", format_double(c.svm_c));
  kv("svm_epochs", std::to_string(c.svm_epochs));
  kv("svm_batch_size", std::to_string(c.svm_batch_size));
  kv("cv_folds", std::to_string(c.cv_folds));
  for (const auto& [name, region] : c.region_overrides) {
    kv("region." + name, std::string(region_name(region)));
  }
  const LstmConfig& l = c.lstm;
  kv("lstm.hidden_sizes", join(l.hidden_sizes));
  kv("lstm.dropout", join(l.dropout));
  kv("lstm.head_dropout", format_double(l.head_dropout));
  kv("lstm.head_hidden", std::to_string(l.head_hidden));
  kv("lstm.n_outputs", std::to_string(l.n_outputs));
  kv("lstm.seq_len", std::to_string(l.seq_len));
  kv("lstm.epochs", std::to_string(l.epochs));
  kv("lstm.batch_size", std::to_string(l.batch_size));
  kv("lstm.learning_rate", format_double(l.learning_rate));
  kv("lstm.rho", format_double(l.rho));
  kv("lstm.epsilon", format_double(l.epsilon));
  kv("lstm.momentum", format_double(l.momentum));
  kv("lstm.bn_momentum", format_double(l.bn_momentum));
  kv("lstm.bn_epsilon", format_double(l.bn_epsilon));
  kv("lstm.checkpoint_every", std::to_string(l.checkpoint_every));
  kv("lstm.train_fraction", format_double(l.train_fraction));
  kv("lstm.split", l.split == SplitMode::ByTrial ? "trial" : "window");
  const SyntheticDims& d = c.synthetic_dims;
  kv("synth.n_trials", std::to_string(d.n_trials));
  kv("synth.n_channels", std::to_string(d.n_channels));
  kv("synth.n_samples", std::to_string(d.n_samples));
  kv("synth.sample_rate_hz", format_double(d.sample_rate_hz));
  kv("synth.subject_id", std::to_string(d.subject_id));
  const SyntheticSpec& s = c.synthetic;
  kv("synth.noise_sigma", format_double(s.noise_sigma_uv));
  kv("synth.label_rule", s.label_rule.enabled ? "true" : "false");
  kv("synth.high_gain", format_double(s.label_rule.high_gain));
  kv("synth.low_gain", format_double(s.label_rule.low_gain));
  if (s.label_rule.valence_band < s.bands.size()) {
    kv("synth.valence_band", s.bands[s.label_rule.valence_band].name);
  }
  if (s.label_rule.arousal_band < s.bands.size()) {
    kv("synth.arousal_band", s.bands[s.label_rule.arousal_band].name);
  }
  for (const auto& b : s.bands) {
    kv("synth." + b.name + ".amplitude", format_double(b.amplitude_uv));
    kv("synth." + b.name + ".center_hz", format_double(b.center_hz));
  }
  return out.str();
}

std::uint64_t config_digest(const PipelineConfig& config) {
  return fnv1a64(canonical_string(config));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(seed) ^ stream);
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

}  // namespace eegemo

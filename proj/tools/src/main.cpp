#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "eegemo/errors.hpp"

namespace {

using namespace eegemo;
using namespace eegemo::cli;

constexpr int kExitValidation = 2;
constexpr int kExitInternal = 1;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::vector<std::string> settings;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig config = g.config_path.empty() ? PipelineConfig{} : load_config(g.config_path);
  for (const auto& kv : g.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_setting(config, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  if (g.seed) config.rng_seed = *g.seed;
  validate(config);
  return config;
}

std::vector<LabeledFeatures> pair_inputs(const std::vector<std::string>& features,
                                         const std::vector<std::string>& labels) {
  if (features.size() != labels.size()) {
    throw ValidationError("each --features needs a matching --labels (got " +
                          std::to_string(features.size()) + " and " +
                          std::to_string(labels.size()) + ")");
  }
  std::vector<LabeledFeatures> out;
  for (std::size_t i = 0; i < features.size(); ++i) out.push_back({features[i], labels[i]});
  return out;
}

void print_result(const CommandResult& r) { std::cout << r.manifest_json; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG emotion-recognition pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "key = value config file");
  app.add_option("--seed", g.seed, "RNG seed (overrides rng_seed)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--set", g.settings, "override one config key, key=value (repeatable)");

  auto* generate = app.add_subcommand("generate", "write a synthetic subject (EEGT + ratings)");
  std::string stem = "subject";
  generate->add_option("--stem", stem, "output file stem")->capture_default_str();

  auto* extract = app.add_subcommand("extract", "compute features and labels");
  std::string tensor_path, ratings_path, mode = "regions";
  extract->add_option("--tensor", tensor_path, "EEGT file")->required();
  extract->add_option("--ratings", ratings_path, "ratings CSV")->required();
  extract->add_option("--mode", mode, "meta | regions")->capture_default_str();

  auto* classic = app.add_subcommand("train-classic", "cross-validate KNN or linear SVM");
  std::vector<std::string> features, labels;
  std::string target = "valence", algo = "svm";
  classic->add_option("--features", features, "features CSV (repeatable)")->required();
  classic->add_option("--labels", labels, "labels CSV, one per --features")->required();
  classic->add_option("--target", target, "valence | arousal | quadrant")->capture_default_str();
  classic->add_option("--algo", algo, "svm | knn")->capture_default_str();

  auto* lstm = app.add_subcommand("train-lstm", "train the LSTM on window features");
  std::string resume;
  lstm->add_option("--features", features, "meta features CSV (repeatable)")->required();
  lstm->add_option("--labels", labels, "labels CSV, one per --features")->required();
  lstm->add_option("--resume", resume, "checkpoint to continue from");

  auto* topo = app.add_subcommand("topomap", "band-power scalp map over a time span");
  std::size_t trial = 0;
  double t_start = 0.153, t_end = 0.273;
  std::string band = "theta";
  topo->add_option("--tensor", tensor_path, "EEGT file")->required();
  topo->add_option("--trial", trial, "trial index")->capture_default_str();
  topo->add_option("--t-start", t_start, "span start (s)")->capture_default_str();
  topo->add_option("--t-end", t_end, "span end (s)")->capture_default_str();
  topo->add_option("--band", band, "band name")->capture_default_str();

  auto* psd = app.add_subcommand("psd", "Welch PSD per channel of one trial");
  std::string channels = "all";
  std::optional<double> fmin, fmax;
  psd->add_option("--tensor", tensor_path, "EEGT file")->required();
  psd->add_option("--trial", trial, "trial index")->capture_default_str();
  psd->add_option("--channels", channels, "all | subset | comma-separated names")
      ->capture_default_str();
  psd->add_option("--fmin", fmin, "lowest frequency to keep (Hz)");
  psd->add_option("--fmax", fmax, "highest frequency to keep (Hz)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    const PipelineConfig config = resolve_config(g);
    if (*generate) {
      print_result(cmd_generate({config, g.out, stem}));
    } else if (*extract) {
      print_result(cmd_extract({config, tensor_path, ratings_path, parse_feature_mode(mode), g.out}));
    } else if (*classic) {
      print_result(cmd_train_classic({config, pair_inputs(features, labels), parse_target(target),
                                      parse_algorithm(algo), g.out}));
    } else if (*lstm) {
      TrainLstmOptions o{config, pair_inputs(features, labels), g.out, std::nullopt};
      if (!resume.empty()) o.resume_from = resume;
      print_result(cmd_train_lstm(o));
    } else if (*topo) {
      print_result(cmd_topomap({config, tensor_path, trial, t_start, t_end, band, g.out}));
    } else if (*psd) {
      print_result(cmd_psd({config, tensor_path, trial, channels, fmin, fmax, g.out}));
    }
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}

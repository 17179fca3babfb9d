#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <json.hpp>

#include "commands.hpp"
#include "eegemo/errors.hpp"
#include "eegemo/features.hpp"
#include "eegemo/labeling.hpp"
#include "eegemo/ingest.hpp"
#include "eegemo/text.hpp"
#include "oracles.hpp"
#include "topomap.hpp"

using namespace eegemo;
using namespace eegemo::cli;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  apply_setting(c, "synth.n_trials", "8");
  apply_setting(c, "synth.n_samples", "1024");
  apply_setting(c, "knn_k", "3");
  apply_setting(c, "svm_epochs", "30");
  apply_setting(c, "lstm.epochs", "2");
  apply_setting(c, "lstm.checkpoint_every", "1");
  return c;
}

fs::path generate_into(const fs::path& dir, const PipelineConfig& c) {
  cmd_generate({c, dir, "subject"});
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EEGEMO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<Electrode> ring(double value_at_first) {
  std::vector<Electrode> e;
  for (const char* name : {"Fz", "Cz", "Pz", "T7", "T8", "Oz"}) {
    e.push_back({name, scalp_position(name), 0.0});
  }
  e[0].value = value_at_first;
  return e;
}

}  // namespace

TEST(Idw, ExactAtElectrodeAndConvex) {
  const auto e = ring(5.0);
  EXPECT_DOUBLE_EQ(idw_value(e, e[0].pos.x, e[0].pos.y), 5.0);
  EXPECT_DOUBLE_EQ(idw_value(e, e[1].pos.x, e[1].pos.y), 0.0);
  const TopomapGrid g = interpolate_grid(e, 32);
  ASSERT_EQ(g.values.size(), 32u * 32u);
  double best = -1.0;
  std::size_t best_cell = 0;
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    EXPECT_GE(g.values[i], 0.0);
    EXPECT_LE(g.values[i], 5.0);
    if (g.values[i] > best) {
      best = g.values[i];
      best_cell = i;
    }
  }
  // The peak cell is the one closest to the peaked electrode.
  const double px = g.x_of(best_cell % 32), py = g.y_of(best_cell / 32);
  EXPECT_LT(std::hypot(px - e[0].pos.x, py - e[0].pos.y), 2.0 / 32.0 * std::sqrt(2.0));
}

TEST(Idw, ConstantField) {
  auto e = ring(0.0);
  for (auto& x : e) x.value = 2.5;
  const TopomapGrid g = interpolate_grid(e, 16);
  for (double v : g.values) EXPECT_NEAR(v, 2.5, 1e-12);
}

TEST(Idw, UsesOnlyNearestFour) {
  std::vector<Electrode> e;
  for (int i = 0; i < 5; ++i) e.push_back({"e", {0.1 * i, 0.0}, 0.0});
  e[4].value = 100.0;  // farthest from the query point
  EXPECT_EQ(idw_value(e, -0.5, 0.0), 0.0);
  EXPECT_GT(idw_value(e, -0.5, 0.0, 2.0, 5), 0.0);
}

TEST(Grid, CellCenters) {
  TopomapGrid g;
  g.size = 64;
  EXPECT_DOUBLE_EQ(g.x_of(0), -1.0 + 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(g.y_of(0), 1.0 - 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(g.x_of(63), 1.0 - 1.0 / 64.0);
}

TEST(AnalysisSpan, ShortWindowWidensAndClamps) {
  const SampleSpan s = analysis_span(0.153, 0.273, 128.0, 8064, 256);
  EXPECT_EQ(s.start, 0u);
  EXPECT_EQ(s.length, 256u);
  const SampleSpan mid = analysis_span(30.0, 30.5, 128.0, 8064, 256);
  EXPECT_EQ(mid.length, 256u);
  EXPECT_EQ(mid.start, 3840u + 32u - 128u);
  const SampleSpan end = analysis_span(62.9, 63.0, 128.0, 8064, 256);
  EXPECT_EQ(end.start + end.length, 8064u);
  const SampleSpan big = analysis_span(10.0, 20.0, 128.0, 8064, 256);
  EXPECT_EQ(big.start, 1280u);
  EXPECT_EQ(big.length, 1280u);
}

TEST(AnalysisSpan, RejectsBadRanges) {
  EXPECT_THROW(analysis_span(0.3, 0.2, 128.0, 8064, 256), RangeError);
  EXPECT_THROW(analysis_span(-0.1, 0.2, 128.0, 8064, 256), RangeError);
  EXPECT_THROW(analysis_span(60.0, 64.0, 128.0, 8064, 256), RangeError);
}

TEST(Commands, GenerateIsDeterministic) {
  const auto a = oracle::scratch_dir("cli_gen_a");
  const auto b = oracle::scratch_dir("cli_gen_b");
  const PipelineConfig c = small_config();
  const CommandResult ra = cmd_generate({c, a, "subject"});
  const CommandResult rb = cmd_generate({c, b, "subject"});
  EXPECT_EQ(ra.manifest_json, rb.manifest_json);
  EXPECT_EQ(read_text_file(a / "subject.eegt"), read_text_file(b / "subject.eegt"));
  const TrialTensor t = read_tensor(a / "subject.eegt");
  EXPECT_EQ(t.n_trials(), 8u);
  EXPECT_EQ(t.n_samples(), 1024u);
  PipelineConfig other = c;
  other.rng_seed = 2;
  const auto d = oracle::scratch_dir("cli_gen_c");
  EXPECT_NE(cmd_generate({other, d, "subject"}).manifest_json, ra.manifest_json);
}

TEST(Commands, ManifestSchema) {
  const auto dir = oracle::scratch_dir("cli_manifest");
  const CommandResult r = cmd_generate({small_config(), dir, "s1"});
  const auto j = nlohmann::json::parse(r.manifest_json);
  EXPECT_EQ(j["command"], "generate");
  EXPECT_EQ(j["seed"], 1);
  EXPECT_EQ(j["config_digest"].get<std::string>().size(), 16u);
  ASSERT_EQ(j["files"].size(), 2u);
  EXPECT_EQ(j["files"][0]["path"], "s1.eegt");
  for (const auto& f : j["files"]) {
    const std::string bytes = read_text_file(dir / f["path"].get<std::string>());
    EXPECT_EQ(f["bytes"].get<std::size_t>(), bytes.size());
    EXPECT_EQ(f["fnv1a64"], hex64(fnv1a64(bytes)));
  }
  EXPECT_EQ(read_text_file(dir / "manifest.json"), r.manifest_json);
  EXPECT_EQ(r.files.back(), dir / "manifest.json");
}

TEST(Commands, ExtractBothModes) {
  const PipelineConfig c = small_config();
  const auto dir = generate_into(oracle::scratch_dir("cli_extract"), c);
  cmd_extract({c, dir / "subject.eegt", dir / "subject_ratings.csv", FeatureMode::Regions,
               dir / "regions"});
  cmd_extract({c, dir / "subject.eegt", dir / "subject_ratings.csv", FeatureMode::Meta,
               dir / "meta"});
  const FeatureMatrix r = read_features_csv(dir / "regions" / "features.csv");
  const FeatureMatrix m = read_features_csv(dir / "meta" / "features.csv");
  EXPECT_EQ(r.n_rows(), 8u);
  EXPECT_EQ(r.n_cols(), 168u);
  EXPECT_EQ(m.n_rows(), 8u * 49u);
  EXPECT_EQ(m.n_cols(), 70u);
  EXPECT_EQ(read_labels_csv(dir / "meta" / "labels.csv").size(), 8u);
  EXPECT_THROW(parse_feature_mode("both"), ConfigError);
}

TEST(Commands, TrainClassicWritesMetrics) {
  const PipelineConfig c = small_config();
  const auto dir = generate_into(oracle::scratch_dir("cli_classic"), c);
  cmd_extract({c, dir / "subject.eegt", dir / "subject_ratings.csv", FeatureMode::Regions,
               dir / "f"});
  for (Algorithm algo : {Algorithm::Knn, Algorithm::Svm}) {
    const auto out = dir / (algo == Algorithm::Knn ? "knn" : "svm");
    cmd_train_classic({c, {{dir / "f" / "features.csv", dir / "f" / "labels.csv"}},
                       Target::Valence, algo, out});
    const auto j = nlohmann::json::parse(read_text_file(out / "metrics.json"));
    EXPECT_EQ(j["folds"].size(), 5u);
    EXPECT_GE(j["accuracy"].get<double>(), 0.0);
    EXPECT_LE(j["accuracy"].get<double>(), 1.0);
  }
  EXPECT_THROW(cmd_train_classic({c, {}, Target::Valence, Algorithm::Knn, dir / "x"}),
               ValidationError);
  EXPECT_EQ(parse_target("quadrant"), Target::Quadrant);
  EXPECT_THROW(parse_algorithm("rf"), ConfigError);
}

TEST(Commands, TrainLstmResumeMatchesStraightRun) {
  PipelineConfig c = small_config();
  const auto dir = generate_into(oracle::scratch_dir("cli_lstm"), c);
  cmd_extract({c, dir / "subject.eegt", dir / "subject_ratings.csv", FeatureMode::Meta,
               dir / "f"});
  const std::vector<LabeledFeatures> in = {{dir / "f" / "features.csv", dir / "f" / "labels.csv"}};
  const CommandResult r = cmd_train_lstm({c, in, dir / "run", std::nullopt});
  EXPECT_TRUE(fs::exists(dir / "run" / "checkpoints" / "epoch_0001.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "run" / "checkpoints" / "epoch_0002.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "run" / "final.ckpt"));
  const std::string report = read_text_file(dir / "run" / "train_report.jsonl");
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 2);
  const auto summary = nlohmann::json::parse(read_text_file(dir / "run" / "summary.json"));
  EXPECT_EQ(summary["final_epoch"], 2);
  EXPECT_EQ(summary["n_sequences"], 8 * 4);

  cmd_train_lstm({c, in, dir / "resumed", dir / "run" / "checkpoints" / "epoch_0001.ckpt"});
  EXPECT_EQ(read_text_file(dir / "resumed" / "final.ckpt"),
            read_text_file(dir / "run" / "final.ckpt"));
}

TEST(Commands, TopomapOutputs) {
  const PipelineConfig c = small_config();
  const auto dir = generate_into(oracle::scratch_dir("cli_topo"), c);
  cmd_topomap({c, dir / "subject.eegt", 1, 0.153, 0.273, "theta", dir / "t"});
  const std::string grid = read_text_file(dir / "t" / "topomap.csv");
  EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 1 + 64 * 64);
  EXPECT_EQ(grid.substr(0, grid.find('\n')), "row,col,x,y,value");
  const std::string el = read_text_file(dir / "t" / "electrodes.csv");
  EXPECT_EQ(std::count(el.begin(), el.end(), '\n'), 33);
  EXPECT_NE(read_text_file(dir / "t" / "topomap.svg").find("<svg"), std::string::npos);
  EXPECT_THROW(cmd_topomap({c, dir / "subject.eegt", 8, 0.1, 0.2, "theta", dir / "t2"}),
               RangeError);
  EXPECT_THROW(cmd_topomap({c, dir / "subject.eegt", 0, 0.1, 0.2, "delta", dir / "t3"}),
               ConfigError);
}

TEST(Commands, PsdAxisAndAlphaPeak) {
  PipelineConfig c = small_config();
  apply_setting(c, "synth.alpha.amplitude", "20");
  const auto dir = generate_into(oracle::scratch_dir("cli_psd"), c);
  PsdOptions o;
  o.config = c;
  o.tensor = dir / "subject.eegt";
  o.trial = 2;
  o.channels = "O1,O2";
  o.out_dir = dir / "p";
  cmd_psd(o);
  const std::string text = read_text_file(dir / "p" / "psd.csv");
  const auto lines = split_lines(text);
  EXPECT_EQ(lines[0], "freq_hz,O1,O2");
  ASSERT_EQ(lines.size(), 1u + 129u);  // 0..64 Hz at 0.5 Hz
  double best = -1.0, best_f = -1.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv(lines[i]);
    const double freq = std::stod(std::string(f[0]));
    EXPECT_DOUBLE_EQ(freq, 0.5 * static_cast<double>(i - 1));
    const double v = std::stod(std::string(f[1]));
    if (v > best) {
      best = v;
      best_f = freq;
    }
  }
  EXPECT_NEAR(best_f, 10.0, 1.0);

  o.channels = "Fz";
  o.fmin_hz = 4.0;
  o.fmax_hz = 45.0;
  o.out_dir = dir / "q";
  cmd_psd(o);
  const std::string narrow = read_text_file(dir / "q" / "psd.csv");
  const auto q = split_lines(narrow);
  EXPECT_EQ(split_csv(q[1])[0], "4");
  o.channels = "XX";
  EXPECT_THROW(cmd_psd(o), ValidationError);
}

TEST(Binary, ExitCodes) {
  const auto dir = oracle::scratch_dir("cli_exit");
  const std::string out = " --out " + dir.string();
  EXPECT_EQ(run_cli("generate --set synth.n_trials=4 --set synth.n_samples=512" + out), 0);
  EXPECT_TRUE(fs::exists(dir / "subject.eegt"));
  EXPECT_EQ(run_cli("--no-such-flag"), 2);
  EXPECT_EQ(run_cli("generate --set nonsense=1" + out), 2);
  EXPECT_EQ(run_cli("extract --tensor /nonexistent.eegt --ratings /nonexistent.csv" + out), 2);
  EXPECT_EQ(run_cli("topomap --tensor " + (dir / "subject.eegt").string() +
                    " --t-start 0.3 --t-end 0.2" + out),
            2);
}

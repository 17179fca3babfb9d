#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "eegemo/errors.hpp"
#include "eegemo/neural.hpp"
#include "oracles.hpp"

using namespace eegemo;
using Eigen::MatrixXd;

namespace {

LstmConfig small_config() {
  LstmConfig c;
  c.hidden_sizes = {8, 4};
  c.dropout = {0.3, 0.5};
  c.head_hidden = 5;
  c.n_outputs = 2;
  c.seq_len = 3;
  return c;
}

SequenceBatch random_batch(std::size_t dim, std::size_t steps, std::size_t batch,
                           std::uint64_t seed) {
  const auto v = oracle::random_signal(dim * steps * batch, seed);
  SequenceBatch out;
  for (std::size_t t = 0; t < steps; ++t) {
    out.push_back(Eigen::Map<const MatrixXd>(v.data() + t * dim * batch,
                                             static_cast<Eigen::Index>(dim),
                                             static_cast<Eigen::Index>(batch)));
  }
  return out;
}

double train_loss(const LstmModel& m, const SequenceBatch& x, const MatrixXd& y,
                  std::uint64_t mask_seed) {
  return mse_loss(forward(m, x, Mode::Train, mask_seed).predictions, y);
}

// Separable toy data: the sign of feature 0 carries valence, feature 1 arousal.
std::vector<Sequence> toy_sequences(std::size_t n_trials, std::size_t per_trial,
                                    std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::vector<Sequence> out;
  for (std::size_t t = 0; t < n_trials; ++t) {
    const bool v = t % 2 == 0, a = (t / 2) % 2 == 0;
    for (std::size_t s = 0; s < per_trial; ++s) {
      Sequence q;
      q.subject = 1;
      q.trial = t;
      q.first_window = s * 4;
      q.x = MatrixXd(dim, 4);
      for (Eigen::Index r = 0; r < q.x.rows(); ++r) {
        for (Eigen::Index c = 0; c < q.x.cols(); ++c) q.x(r, c) = noise(rng);
      }
      q.x.row(0).array() += v ? 1.0 : -1.0;
      q.x.row(1).array() += a ? 1.0 : -1.0;
      q.target = Eigen::Vector2d(v ? 1.0 : 0.0, a ? 1.0 : 0.0);
      out.push_back(std::move(q));
    }
  }
  return out;
}

LstmConfig toy_config(std::size_t epochs) {
  LstmConfig c;
  c.hidden_sizes = {8, 4};
  c.dropout = {0.1, 0.1};
  c.head_hidden = 8;
  c.seq_len = 4;
  c.epochs = epochs;
  c.batch_size = 16;
  c.learning_rate = 0.01;
  c.checkpoint_every = 2;
  return c;
}

std::vector<double> flat_params(LstmModel& m) {
  std::vector<double> out;
  for (const auto& v : tensor_views(m.params)) out.insert(out.end(), v.data, v.data + v.size);
  return out;
}

}  // namespace

TEST(Activations, SigmoidValues) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(2.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_NEAR(sigmoid(-800.0), 0.0, 1e-300);
  EXPECT_EQ(sigmoid(800.0), 1.0);
}

TEST(Cell, ZeroWeights) {
  const auto p = LstmLayerParams::zeros(3, 2);
  const MatrixXd x = MatrixXd::Constant(3, 1, 4.0);
  const CellState s0 = lstm_cell_forward(p, x, MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 1));
  EXPECT_EQ(s0.c.norm(), 0.0);
  EXPECT_EQ(s0.h.norm(), 0.0);
  const CellState s1 = lstm_cell_forward(p, x, MatrixXd::Zero(2, 1), MatrixXd::Ones(2, 1));
  EXPECT_DOUBLE_EQ(s1.c(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s1.h(1, 0), 0.5 * std::tanh(0.5));
  EXPECT_THROW(lstm_cell_forward(p, MatrixXd::Zero(2, 1), MatrixXd::Zero(2, 1),
                                 MatrixXd::Zero(2, 1)),
               ShapeError);
}

TEST(Cell, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d(0.0, 0.7);
  LstmLayerParams p = LstmLayerParams::zeros(3, 4);
  p.w = p.w.unaryExpr([&](double) { return d(rng); });
  p.u = p.u.unaryExpr([&](double) { return d(rng); });
  p.b = p.b.unaryExpr([&](double) { return d(rng); });
  const MatrixXd x = MatrixXd::NullaryExpr(3, 2, [&] { return d(rng); });
  const MatrixXd h0 = MatrixXd::NullaryExpr(4, 2, [&] { return d(rng); });
  const MatrixXd c0 = MatrixXd::NullaryExpr(4, 2, [&] { return d(rng); });
  const MatrixXd wh = MatrixXd::NullaryExpr(4, 2, [&] { return d(rng); });
  const MatrixXd wc = MatrixXd::NullaryExpr(4, 2, [&] { return d(rng); });
  // L = sum(wh .* h) + sum(wc .* c)
  auto loss = [&](const LstmLayerParams& q, const MatrixXd& xx, const MatrixXd& hh,
                  const MatrixXd& cc) {
    const CellState s = lstm_cell_forward(q, xx, hh, cc);
    return (wh.array() * s.h.array()).sum() + (wc.array() * s.c.array()).sum();
  };
  const CellGrads g = lstm_cell_backward(p, lstm_cell_forward_cached(p, x, h0, c0), wh, wc);
  const double h = 1e-6;
  auto check = [&](MatrixXd& target, const MatrixXd& analytic, auto&& eval) {
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      const double keep = target.data()[i];
      target.data()[i] = keep + h;
      const double up = eval();
      target.data()[i] = keep - h;
      const double down = eval();
      target.data()[i] = keep;
      EXPECT_LT(oracle::rel_err((up - down) / (2 * h), analytic.data()[i], 1e-6), 1e-5);
    }
  };
  LstmLayerParams q = p;
  MatrixXd xx = x, hh = h0, cc = c0;
  auto eval = [&] { return loss(q, xx, hh, cc); };
  check(q.w, g.params.w, eval);
  check(q.u, g.params.u, eval);
  MatrixXd bcol = q.b;
  auto eval_b = [&] {
    q.b = bcol;
    return loss(q, xx, hh, cc);
  };
  check(bcol, g.params.b, eval_b);
  q.b = p.b;
  check(xx, g.dx, eval);
  check(hh, g.dh_prev, eval);
  check(cc, g.dc_prev, eval);
}

TEST(Model, FullGradientMatchesFiniteDifferences) {
  const LstmConfig cfg = small_config();
  LstmModel m = init_model(cfg, 6, 11);
  // Non-trivial batch-norm affine parameters so their gradients are exercised.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 0.2);
  for (auto& bn : m.params.bn) {
    bn.gamma = bn.gamma.unaryExpr([&](double g) { return g + d(rng); });
    bn.beta = bn.beta.unaryExpr([&](double) { return d(rng); });
  }
  const SequenceBatch x = random_batch(6, 3, 2, 21);
  MatrixXd y(2, 2);
  y << 1, 0, 0, 1;
  const std::uint64_t seed = 99;

  const ForwardCache fc = forward(m, x, Mode::Train, seed);
  ModelParameters grads = backward(m, fc, mse_grad(fc.predictions, y));
  auto pv = tensor_views(m.params);
  auto gv = tensor_views(grads);
  ASSERT_EQ(pv.size(), gv.size());
  const double h = 1e-6;
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t t = 0; t < pv.size(); ++t) {
    ASSERT_EQ(pv[t].size, gv[t].size);
    for (std::size_t i = 0; i < pv[t].size; ++i) {
      const double keep = pv[t].data[i];
      pv[t].data[i] = keep + h;
      const double up = train_loss(m, x, y, seed);
      pv[t].data[i] = keep - h;
      const double down = train_loss(m, x, y, seed);
      pv[t].data[i] = keep;
      const double e = oracle::rel_err((up - down) / (2 * h), gv[t].data[i], 1e-6);
      if (e > worst) {
        worst = e;
        worst_name = pv[t].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  EXPECT_LT(worst, 1e-4) << worst_name;
}

TEST(Loss, MseExamples) {
  MatrixXd p(2, 1), t(2, 1);
  p << 0.5, 1.0;
  t << 0.0, 1.0;
  EXPECT_DOUBLE_EQ(mse_loss(p, t), 0.125);
  const MatrixXd g = mse_grad(p, t);
  EXPECT_DOUBLE_EQ(g(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(g(1, 0), 0.0);
  EXPECT_EQ(mse_loss(t, t), 0.0);
}

TEST(Rmsprop, FirstStep) {
  RmspropState s;
  s.mean_square = {{0.0}};
  s.velocity = {{0.0}};
  std::vector<double> param = {0.0};
  const std::vector<double> grad = {1.0};
  rmsprop_step(s, 0, param, grad);
  // lr / sqrt(0.1)
  EXPECT_NEAR(param[0], -0.0031623, 1e-7);
  EXPECT_NEAR(s.mean_square[0][0], 0.1, 1e-15);
}

TEST(Rmsprop, MinimizesQuadratic) {
  RmspropState s;
  s.learning_rate = 0.01;
  s.mean_square = {{0.0}};
  s.velocity = {{0.0}};
  std::vector<double> p = {0.0};
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> g = {2.0 * (p[0] - 3.0)};
    rmsprop_step(s, 0, p, g);
  }
  EXPECT_NEAR(p[0], 3.0, 0.05);
}

TEST(Rmsprop, MomentumAccumulates) {
  RmspropState s;
  s.momentum = 0.5;
  s.mean_square = {{0.0}};
  s.velocity = {{0.0}};
  std::vector<double> p = {0.0};
  rmsprop_step(s, 0, p, std::vector<double>{1.0});
  const double v1 = s.velocity[0][0];
  rmsprop_step(s, 0, p, std::vector<double>{1.0});
  const double expected_v2 = 0.5 * v1 + 0.001 / (std::sqrt(0.19) + 1e-8);
  EXPECT_NEAR(s.velocity[0][0], expected_v2, 1e-12);
  EXPECT_NEAR(p[0], -(v1 + expected_v2), 1e-12);
}

TEST(Dropout, InvertedMaskExpectation) {
  LstmConfig cfg = small_config();
  cfg.hidden_sizes = {20};
  cfg.dropout = {0.4};
  const LstmModel m = init_model(cfg, 3, 1);
  const SequenceBatch x = random_batch(3, 5, 1000, 2);
  double sum = 0.0;
  std::size_t count = 0, zeros = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const ForwardCache fc = forward(m, x, Mode::Train, seed);
    for (const auto& mask : fc.layers[0].dropout_masks) {
      for (Eigen::Index i = 0; i < mask.size(); ++i) {
        const double v = mask.data()[i];
        ASSERT_TRUE(v == 0.0 || std::abs(v - 1.0 / 0.6) < 1e-12);
        sum += v;
        zeros += v == 0.0;
        ++count;
      }
    }
  }
  ASSERT_GE(count, 100000u);
  EXPECT_NEAR(sum / static_cast<double>(count), 1.0, 0.02);
  EXPECT_NEAR(static_cast<double>(zeros) / static_cast<double>(count), 0.4, 0.02);
  EXPECT_TRUE(forward(m, x, Mode::Eval).layers[0].dropout_masks.empty());
}

TEST(BatchNorm, TrainModeNormalizes) {
  LstmConfig cfg = small_config();
  cfg.dropout = {0.0, 0.0};
  const LstmModel m = init_model(cfg, 4, 7);
  const SequenceBatch x = random_batch(4, 3, 64, 8);
  const ForwardCache fc = forward(m, x, Mode::Train, 1);
  for (const auto& layer : fc.layers) {
    const MatrixXd& xh = layer.bn.x_hat;
    for (Eigen::Index r = 0; r < xh.rows(); ++r) {
      const double mean = xh.row(r).mean();
      const double var = (xh.row(r).array() - mean).square().mean();
      EXPECT_NEAR(mean, 0.0, 1e-6);
      EXPECT_NEAR(var, layer.bn.var(r) / (layer.bn.var(r) + cfg.bn_epsilon), 1e-9);
    }
  }
  // Intermediate layers normalize over batch x time, the last over the batch.
  EXPECT_EQ(fc.layers[0].bn.x_hat.cols(), 64 * 3);
  EXPECT_EQ(fc.layers[1].bn.x_hat.cols(), 64);
}

TEST(BatchNorm, RunningStatsMove) {
  LstmModel m = init_model(small_config(), 4, 7);
  const SequenceBatch x = random_batch(4, 3, 16, 9);
  const ForwardCache fc = forward(m, x, Mode::Train, 1);
  update_running_stats(m, fc);
  const auto& bn = fc.layers[1].bn;
  for (Eigen::Index r = 0; r < bn.mean.size(); ++r) {
    EXPECT_NEAR(m.running[1].mean(r), 0.1 * bn.mean(r), 1e-12);
  }
}

TEST(Model, PredictionsInUnitInterval) {
  const LstmModel m = init_model(small_config(), 6, 3);
  const ForwardCache fc = forward(m, random_batch(6, 3, 10, 4), Mode::Eval);
  ASSERT_EQ(fc.predictions.rows(), 2);
  ASSERT_EQ(fc.predictions.cols(), 10);
  EXPECT_GT(fc.predictions.minCoeff(), 0.0);
  EXPECT_LT(fc.predictions.maxCoeff(), 1.0);
}

TEST(Model, InitIsSeeded) {
  LstmModel a = init_model(small_config(), 6, 3);
  LstmModel b = init_model(small_config(), 6, 3);
  LstmModel c = init_model(small_config(), 6, 4);
  EXPECT_EQ(flat_params(a), flat_params(b));
  EXPECT_NE(flat_params(a), flat_params(c));
  const double bound = 1.0 / std::sqrt(6.0);
  EXPECT_LE(a.params.lstm[0].w.cwiseAbs().maxCoeff(), bound);
  LstmConfig bad = small_config();
  bad.dropout = {0.1};
  EXPECT_THROW(init_model(bad, 6, 1), ConfigError);
}

TEST(Sequences, BuildFromFeatures) {
  FeatureMatrix f({"a", "b"});
  for (std::size_t t = 0; t < 2; ++t) {
    for (long long w = 6; w >= 0; --w) {
      const double v = static_cast<double>(10 * t + static_cast<std::size_t>(w));
      f.append_row({1, t, w}, std::vector<double>{v, -v});
    }
  }
  LabelSet labels;
  labels.trials = {TrialLabel{true, false, Quadrant::LAHV}, TrialLabel{false, true, Quadrant::HALV}};
  const auto seqs = build_sequences(f, make_label_lookup(1, labels), 3, 2);
  ASSERT_EQ(seqs.size(), 4u);  // 7 windows -> 2 sequences per trial
  EXPECT_EQ(seqs[0].x(0, 0), 0.0);
  EXPECT_EQ(seqs[0].x(0, 2), 2.0);
  EXPECT_EQ(seqs[1].first_window, 3u);
  EXPECT_EQ(seqs[3].x(1, 0), -13.0);
  EXPECT_EQ(seqs[2].target(1), 1.0);
  EXPECT_EQ(seqs[0].target(0), 1.0);
  EXPECT_THROW(build_sequences(f, LabelLookup{}, 3, 2), ValidationError);
  EXPECT_THROW(build_sequences(f, make_label_lookup(1, labels), 3, 3), ConfigError);
}

TEST(Split, ByTrialKeepsTrialsTogether) {
  const auto data = toy_sequences(12, 5, 3, 1);
  const DataSplit s = split_dataset(data, toy_config(1), 7);
  EXPECT_EQ(s.train.size() + s.validation.size(), data.size());
  std::set<std::size_t> train_trials, val_trials;
  for (auto i : s.train) train_trials.insert(data[i].trial);
  for (auto i : s.validation) val_trials.insert(data[i].trial);
  EXPECT_EQ(train_trials.size(), 9u);
  for (auto t : val_trials) EXPECT_EQ(train_trials.count(t), 0u);
  const DataSplit again = split_dataset(data, toy_config(1), 7);
  EXPECT_EQ(again.train, s.train);
}

TEST(Checkpoint, RoundTripIsLossless) {
  const auto data = toy_sequences(8, 4, 3, 2);
  TrainResult r = train(data, toy_config(1), TrainOptions{});
  const Checkpoint ck{r.model, r.optimizer, 1, 1};
  const std::string bytes = encode_checkpoint(ck);
  Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(flat_params(back.model), flat_params(r.model));
  EXPECT_EQ(back.model.scaler.mean, r.model.scaler.mean);
  EXPECT_EQ(back.optimizer.mean_square, r.optimizer.mean_square);
  EXPECT_EQ(back.model.config.hidden_sizes, r.model.config.hidden_sizes);
  EXPECT_EQ(back.epoch, 1u);

  const auto idx = std::vector<std::size_t>{0, 1, 2};
  EXPECT_EQ(evaluate(back.model, data, idx).predictions, evaluate(r.model, data, idx).predictions);
}

TEST(Checkpoint, CorruptionDetected) {
  const LstmModel m = init_model(small_config(), 6, 3);
  const std::string bytes = encode_checkpoint({m, make_rmsprop(m.config, m.params), 0, 1});
  EXPECT_THROW(decode_checkpoint(bytes + "x"), CorruptionError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad[20] ^= 1;  // inside the config text
  EXPECT_THROW(decode_checkpoint(bad), CorruptionError);
}

TEST(Train, LearnsToyProblemDeterministically) {
  const auto data = toy_sequences(16, 6, 3, 3);
  const TrainResult a = train(data, toy_config(6), TrainOptions{});
  const TrainResult b = train(data, toy_config(6), TrainOptions{});
  ASSERT_EQ(a.report.epochs.size(), 6u);
  EXPECT_LT(a.report.epochs.back().train_loss, a.report.initial_train_loss);
  EXPECT_GE(a.report.epochs.back().val_accuracy, 0.9);
  EXPECT_EQ(report_to_jsonl(a.report), report_to_jsonl(b.report));
  EXPECT_EQ(a.report.n_train + a.report.n_validation, data.size());
}

TEST(Train, ResumeIsBitwiseEqual) {
  const auto data = toy_sequences(16, 6, 3, 4);
  const auto dir = oracle::scratch_dir("resume");
  TrainOptions o;
  o.checkpoint_dir = dir;
  TrainResult full = train(data, toy_config(4), o);
  ASSERT_TRUE(std::filesystem::exists(dir / "epoch_0002.ckpt"));
  ASSERT_TRUE(std::filesystem::exists(dir / "epoch_0004.ckpt"));
  EXPECT_EQ(full.report.epochs[1].checkpoint, "epoch_0002.ckpt");
  EXPECT_EQ(full.report.epochs[0].checkpoint, "");

  TrainOptions r;
  r.resume_from = dir / "epoch_0002.ckpt";
  TrainResult resumed = train(data, toy_config(4), r);
  ASSERT_EQ(resumed.report.epochs.size(), 2u);
  EXPECT_EQ(resumed.report.epochs[0].epoch, 3u);
  EXPECT_EQ(flat_params(resumed.model), flat_params(full.model));
  EXPECT_EQ(resumed.optimizer.mean_square, full.optimizer.mean_square);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(resumed.report.epochs[i].val_loss, full.report.epochs[2 + i].val_loss);
  }

  Checkpoint last = load_checkpoint(dir / "epoch_0004.ckpt");
  EXPECT_EQ(flat_params(last.model), flat_params(full.model));

  TrainOptions wrong_seed = r;
  wrong_seed.seed = 2;
  EXPECT_THROW(train(data, toy_config(4), wrong_seed), ConfigError);
}

TEST(Train, RejectsDegenerateSplits) {
  const auto data = toy_sequences(1, 3, 3, 5);
  EXPECT_THROW(train(data, toy_config(1), TrainOptions{}), ConfigError);
  EXPECT_THROW(train({}, toy_config(1), TrainOptions{}), ConfigError);
}

TEST(Report, JsonLinesPerEpoch) {
  TrainReport rep;
  rep.epochs.resize(3);
  for (std::size_t i = 0; i < 3; ++i) rep.epochs[i].epoch = i + 1;
  const std::string s = report_to_jsonl(rep);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
  EXPECT_NE(s.find("\"epoch\":1"), std::string::npos) << s;
}

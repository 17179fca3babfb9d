#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eegemo/classic.hpp"
#include "eegemo/config.hpp"
#include "eegemo/features.hpp"
#include "eegemo/labeling.hpp"

namespace eegemo {

// Conventions: activations are column-per-sample, i.e. a batch of B vectors of
// size n is an n x B matrix. Gate blocks are stacked in the order
// input, forget, output, candidate (i, f, o, g).

double sigmoid(double x);

struct LstmLayerParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Eigen::MatrixXd w;  // 4H x I
  Eigen::MatrixXd u;  // 4H x H
  Eigen::VectorXd b;  // 4H

  static LstmLayerParams zeros(std::size_t input_dim, std::size_t hidden_dim);
};

struct CellState {
  Eigen::MatrixXd h;
  Eigen::MatrixXd c;
};

/// Everything the backward pass needs from one cell step.
struct CellCache {
  Eigen::MatrixXd x, h_prev, c_prev;
  Eigen::MatrixXd i, f, o, g;
  Eigen::MatrixXd c, tanh_c, h;
};

struct CellGrads {
  LstmLayerParams params;  // dW, dU, db
  Eigen::MatrixXd dx, dh_prev, dc_prev;
};

/// i, f, o = sigmoid, g = tanh; c = f*c_prev + i*g; h = o*tanh(c).
/// Throws ShapeError on inconsistent dimensions.
CellState lstm_cell_forward(const LstmLayerParams& p, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& c_prev);
CellCache lstm_cell_forward_cached(const LstmLayerParams& p, const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& h_prev, const Eigen::MatrixXd& c_prev);
/// Gradients given dL/dh and dL/dc flowing into this step's outputs.
CellGrads lstm_cell_backward(const LstmLayerParams& p, const CellCache& cache,
                             const Eigen::MatrixXd& dh, const Eigen::MatrixXd& dc);

struct BatchNormParams {
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
};

struct BatchNormRunning {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

struct DenseParams {
  Eigen::MatrixXd w;  // out x in
  Eigen::VectorXd b;
};

/// All trainable tensors. Gradients use the same type.
struct ModelParameters {
  std::vector<LstmLayerParams> lstm;
  std::vector<BatchNormParams> bn;
  DenseParams head_hidden;
  DenseParams head_out;

  /// Same shapes, all zeros.
  ModelParameters zeros_like() const;
};

/// Mutable view of one tensor's storage (column-major for matrices).
struct TensorView {
  std::string name;
  std::vector<std::size_t> shape;
  double* data = nullptr;
  std::size_t size = 0;
};

/// Fixed traversal order shared by the optimizer and the checkpoint writer.
std::vector<TensorView> tensor_views(ModelParameters& params);

/// Stacked LSTM -> (dropout, batch norm) per layer -> dropout -> dense ReLU
/// -> dense sigmoid head, plus the feature scaler fitted on training data.
struct LstmModel {
  LstmConfig config;
  std::size_t input_dim = 0;
  ModelParameters params;
  std::vector<BatchNormRunning> running;
  ScalerState scaler;
};

/// Uniform(+-1/sqrt(fan_in)) weights, zero biases, gamma = 1, beta = 0,
/// running mean 0 / variance 1, identity scaler. Throws ConfigError.
LstmModel init_model(const LstmConfig& config, std::size_t input_dim, std::uint64_t seed);

enum class Mode { Train, Eval };

/// seq_len matrices, each input_dim x batch.
using SequenceBatch = std::vector<Eigen::MatrixXd>;

/// Saved intermediates of one forward pass.
struct ForwardCache {
  struct BatchNormCache {
    Eigen::MatrixXd x_hat;  // H x N
    Eigen::VectorXd mean, var, inv_std;
  };
  struct Layer {
    std::vector<CellCache> steps;
    std::vector<Eigen::MatrixXd> dropout_masks;  // scaled masks, empty in eval mode
    BatchNormCache bn;
  };
  std::vector<Layer> layers;
  Eigen::MatrixXd head_mask;  // scaled mask, empty in eval mode
  Eigen::MatrixXd head_in;    // after head dropout
  Eigen::MatrixXd z1, r, z2;
  Eigen::MatrixXd predictions;
  Mode mode = Mode::Eval;
  std::size_t batch = 0;
};

/// Pure forward pass; train mode draws inverted-dropout masks from
/// `mask_seed` and normalizes with batch statistics, eval mode uses running
/// statistics and no dropout. Predictions are n_outputs x batch in (0, 1).
ForwardCache forward(const LstmModel& model, const SequenceBatch& batch, Mode mode,
                     std::uint64_t mask_seed = 0);

/// Backpropagation through time for dL/dpredictions.
ModelParameters backward(const LstmModel& model, const ForwardCache& cache,
                         const Eigen::MatrixXd& d_predictions);

/// Moves running statistics toward the batch statistics in `cache`.
void update_running_stats(LstmModel& model, const ForwardCache& cache);

/// Mean of squared differences over every element.
double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);
/// 2 (pred - target) / n.
Eigen::MatrixXd mse_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

struct RmspropState {
  double learning_rate = 0.001;
  double rho = 0.9;
  double epsilon = 1e-8;
  double momentum = 0.0;
  /// Per-tensor moving average of squared gradients (tensor_views order).
  std::vector<std::vector<double>> mean_square;
  std::vector<std::vector<double>> velocity;
};

RmspropState make_rmsprop(const LstmConfig& config, const ModelParameters& params);

/// avg <- rho avg + (1 - rho) g^2; v <- momentum v + lr g / (sqrt(avg) + eps);
/// param <- param - v.
void rmsprop_step(RmspropState& state, ModelParameters& params, ModelParameters& grads);

/// Element-wise version on a single flat tensor, same rule.
void rmsprop_step(RmspropState& state, std::size_t tensor_index, std::span<double> param,
                  std::span<const double> grad);

// ---------------------------------------------------------------------------
// Data assembly and training

struct Sequence {
  std::uint32_t subject = 0;
  std::size_t trial = 0;
  std::size_t first_window = 0;
  Eigen::MatrixXd x;       // input_dim x seq_len
  Eigen::VectorXd target;  // n_outputs
};

using LabelLookup = std::map<std::pair<std::uint32_t, std::size_t>, TrialLabel>;

/// Labels of one subject keyed by (subject, trial).
LabelLookup make_label_lookup(std::uint32_t subject, const LabelSet& labels);

/// Windows of each trial sorted by window index and chunked into
/// non-overlapping runs of seq_len; the tail is dropped. Targets are
/// (valence_positive, arousal_positive) truncated to n_outputs.
std::vector<Sequence> build_sequences(const FeatureMatrix& features, const LabelLookup& labels,
                                      std::size_t seq_len, std::size_t n_outputs);

SequenceBatch make_batch(const std::vector<Sequence>& data, std::span<const std::size_t> indices,
                         Eigen::MatrixXd* targets);

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Seeded split; ByTrial keeps every sequence of a trial on one side.
DataSplit split_dataset(const std::vector<Sequence>& data, const LstmConfig& config,
                        std::uint64_t seed);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<double> output_accuracy;
  Eigen::MatrixXd predictions;
};

/// Eval-mode loss and 0.5-threshold accuracy over `indices`.
EvalResult evaluate(const LstmModel& model, const std::vector<Sequence>& data,
                    std::span<const std::size_t> indices);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::vector<double> val_output_accuracy;
  std::string checkpoint;
};

struct TrainReport {
  SplitMode split = SplitMode::ByTrial;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  double initial_train_loss = 0.0;
  double initial_val_loss = 0.0;
  std::vector<EpochRecord> epochs;
};

std::string epoch_to_json(const EpochRecord& record);
/// One JSON object per line, one line per epoch.
std::string report_to_jsonl(const TrainReport& report);

struct TrainOptions {
  std::uint64_t seed = 1;
  /// When non-empty, checkpoints are written here every checkpoint_every epochs.
  std::filesystem::path checkpoint_dir;
  /// Continue from this checkpoint instead of a fresh initialization.
  std::optional<std::filesystem::path> resume_from;
};

struct TrainResult {
  LstmModel model;
  RmspropState optimizer;
  TrainReport report;
  DataSplit split;
};

/// Scaler fit on the training split, mini-batch RMSprop on MSE, full BPTT.
/// Throws ConfigError on an empty split, TrainingError on numerical failure.
TrainResult train(const std::vector<Sequence>& data, const LstmConfig& config,
                  const TrainOptions& options);

/// Applies the model's scaler to a copy of the sequences.
std::vector<Sequence> scale_sequences(const LstmModel& model, const std::vector<Sequence>& data);

// ---------------------------------------------------------------------------
// Checkpoints

struct Checkpoint {
  LstmModel model;
  RmspropState optimizer;
  std::size_t epoch = 0;
  std::uint64_t seed = 0;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// `lstm.* = value` lines describing the architecture and training knobs.
std::string lstm_config_string(const LstmConfig& config);

}  // namespace eegemo

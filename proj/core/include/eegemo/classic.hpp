#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace eegemo {

/// Row-major dense matrix used by the classic classifiers.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data).subspan(i * cols, cols);
  }
  std::span<double> row(std::size_t i) { return std::span<double>(data).subspan(i * cols, cols); }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  /// Rows picked by index, in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;
};

// ---------------------------------------------------------------------------
// Standard scaler

struct ScalerState {
  std::vector<double> mean;
  /// Population standard deviation; 0 marks a constant column.
  std::vector<double> std;
};

/// Throws SizeError on an empty matrix.
ScalerState scaler_fit(const Matrix& x);
/// (x - mean) / std per column; constant columns map to 0. Throws ShapeError
/// on a column-count mismatch.
Matrix scaler_apply(const ScalerState& state, const Matrix& x);
/// x * std + mean.
Matrix scaler_invert(const ScalerState& state, const Matrix& z);

// ---------------------------------------------------------------------------
// K nearest neighbours

/// Euclidean distance, majority vote. Distance ties go to the lower training
/// row, vote ties to the smaller label. Throws ConfigError unless
/// 1 <= k <= n_train.
std::vector<int> knn_predict(const Matrix& train_x, std::span<const int> train_y,
                             const Matrix& query_x, std::size_t k);

// ---------------------------------------------------------------------------
// Linear soft-margin SVM (primal)

struct SvmOptions {
  double c = 1.0;
  std::size_t epochs = 100;
  /// Examples per subgradient step; 0 means the whole training set.
  std::size_t batch_size = 0;
  std::uint64_t seed = 1;
};

struct LinearSvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double c = 1.0;
  /// Regularized objective after each epoch.
  std::vector<double> objective_history;

  double decision(std::span<const double> x) const;
};

/// Regularized hinge objective: lambda/2 (|w|^2 + b^2) + mean hinge, with
/// lambda = 1 / (c n).
double svm_objective(const LinearSvmModel& model, const Matrix& x, std::span<const int> y);

/// Pegasos-style subgradient descent with step 1 / (lambda t). Labels must be
/// -1 or +1 with both classes present (TrainingError otherwise). The bias is
/// the weight of an implicit constant feature and shares the regularizer.
LinearSvmModel svm_train(const Matrix& x, std::span<const int> y, const SvmOptions& options);
/// sign(w.x + b) as -1/+1 (0 maps to +1).
std::vector<int> svm_predict(const LinearSvmModel& model, const Matrix& x);

/// One-vs-rest wrapper for arbitrary integer labels.
struct MulticlassSvm {
  std::vector<int> classes;
  std::vector<LinearSvmModel> models;
};
MulticlassSvm svm_train_multiclass(const Matrix& x, std::span<const int> y,
                                   const SvmOptions& options);
std::vector<int> svm_predict_multiclass(const MulticlassSvm& model, const Matrix& x);

// ---------------------------------------------------------------------------
// Evaluation

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n = 0;
};

enum class Averaging {
  /// Label 1 is the positive class.
  Binary,
  /// Unweighted mean over the classes in `classes`.
  Macro,
};

double f1_score(double precision, double recall);

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted,
                        Averaging averaging, std::span<const int> classes = {});

struct KnnSpec {
  std::size_t k = 5;
};

/// Binary labels 0/1 are mapped to -1/+1 internally; other label sets use
/// one-vs-rest.
struct SvmSpec {
  SvmOptions options;
};

/// Arbitrary fit-then-predict callable (train_x, train_y, test_x) -> labels.
using CustomClassifier =
    std::function<std::vector<int>(const Matrix&, std::span<const int>, const Matrix&)>;

using ClassifierSpec = std::variant<KnnSpec, SvmSpec, CustomClassifier>;

std::vector<int> fit_predict(const ClassifierSpec& spec, const Matrix& train_x,
                             std::span<const int> train_y, const Matrix& test_x);

struct CrossValidationOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  /// Fit a standard scaler on each training split and apply it to both sides.
  bool standardize = true;
  Averaging averaging = Averaging::Binary;
};

struct MetricsReport {
  Metrics mean;
  std::vector<Metrics> folds;
  std::vector<std::string> warnings;
};

/// Seeded shuffle, then contiguous folds whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> make_folds(std::size_t n_rows, std::size_t folds,
                                                 std::uint64_t seed);

MetricsReport cross_validate(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec,
                             const CrossValidationOptions& options);

/// {"accuracy":..,"precision":..,"recall":..,"f1":..,"folds":[...],"warnings":[...]}
std::string metrics_to_json(const MetricsReport& report);

}  // namespace eegemo

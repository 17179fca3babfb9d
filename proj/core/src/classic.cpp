#include "eegemo/classic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "eegemo/config.hpp"
#include "eegemo/errors.hpp"

namespace eegemo {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw ShapeError("matrix data does not match its dimensions");
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

ScalerState scaler_fit(const Matrix& x) {
  if (x.rows == 0 || x.cols == 0) throw SizeError("cannot fit a scaler on an empty matrix");
  ScalerState s;
  s.mean.assign(x.cols, 0.0);
  s.std.assign(x.cols, 0.0);
  const double n = static_cast<double>(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) s.mean[c] += x(r, c);
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double d = x(r, c) - s.mean[c];
      s.std[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < x.cols; ++c) {
    s.std[c] = std::sqrt(s.std[c] / n);
    // Round-off in a constant column leaves a tiny nonzero spread.
    if (s.std[c] <= 1e-12 * std::max(1.0, std::abs(s.mean[c]))) s.std[c] = 0.0;
  }
  return s;
}

Matrix scaler_apply(const ScalerState& state, const Matrix& x) {
  if (x.cols != state.mean.size()) {
    throw ShapeError("scaler fitted on " + std::to_string(state.mean.size()) +
                     " columns applied to " + std::to_string(x.cols));
  }
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      out(r, c) = state.std[c] > 0.0 ? (x(r, c) - state.mean[c]) / state.std[c] : 0.0;
    }
  }
  return out;
}

Matrix scaler_invert(const ScalerState& state, const Matrix& z) {
  if (z.cols != state.mean.size()) throw ShapeError("scaler column-count mismatch");
  Matrix out = z;
  for (std::size_t r = 0; r < z.rows; ++r) {
    for (std::size_t c = 0; c < z.cols; ++c) out(r, c) = z(r, c) * state.std[c] + state.mean[c];
  }
  return out;
}

std::vector<int> knn_predict(const Matrix& train_x, std::span<const int> train_y,
                             const Matrix& query_x, std::size_t k) {
  if (train_x.rows != train_y.size()) throw ShapeError("training labels do not match rows");
  if (k < 1 || k > train_x.rows) {
    throw ConfigError("k = " + std::to_string(k) + " must lie in [1, " +
                      std::to_string(train_x.rows) + "]");
  }
  if (query_x.cols != train_x.cols) throw ShapeError("query and training feature counts differ");

  std::vector<std::pair<double, std::size_t>> dist(train_x.rows);
  std::vector<int> out(query_x.rows);
  std::map<int, std::size_t> votes;
  for (std::size_t q = 0; q < query_x.rows; ++q) {
    const auto qx = query_x.row(q);
    for (std::size_t i = 0; i < train_x.rows; ++i) {
      const auto tx = train_x.row(i);
      double d = 0.0;
      for (std::size_t c = 0; c < qx.size(); ++c) {
        const double diff = qx[c] - tx[c];
        d += diff * diff;
      }
      dist[i] = {d, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    votes.clear();
    for (std::size_t j = 0; j < k; ++j) ++votes[train_y[dist[j].second]];
    // std::map iterates labels ascending, so the first maximum is the smallest label.
    int best = votes.begin()->first;
    std::size_t best_count = 0;
    for (const auto& [label, count] : votes) {
      if (count > best_count) {
        best = label;
        best_count = count;
      }
    }
    out[q] = best;
  }
  return out;
}

double LinearSvmModel::decision(std::span<const double> x) const {
  double s = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x[i];
  return s;
}

double svm_objective(const LinearSvmModel& model, const Matrix& x, std::span<const int> y) {
  const double n = static_cast<double>(x.rows);
  const double lambda = 1.0 / (model.c * n);
  double norm2 = model.bias * model.bias;
  for (double w : model.weights) norm2 += w * w;
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    hinge += std::max(0.0, 1.0 - static_cast<double>(y[i]) * model.decision(x.row(i)));
  }
  return 0.5 * lambda * norm2 + hinge / n;
}

LinearSvmModel svm_train(const Matrix& x, std::span<const int> y, const SvmOptions& options) {
  if (x.rows != y.size()) throw ShapeError("SVM labels do not match rows");
  if (x.rows == 0) throw TrainingError("SVM needs at least one example");
  if (!(options.c > 0.0)) throw ConfigError("SVM c must be > 0");
  bool has_pos = false;
  bool has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == -1) has_neg = true;
    else throw TrainingError("SVM labels must be -1 or +1");
  }
  if (!has_pos || !has_neg) throw TrainingError("SVM training data contains a single class");
  for (double v : x.data) {
    if (!std::isfinite(v)) throw TrainingError("SVM features must be finite");
  }

  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  const double lambda = 1.0 / (options.c * static_cast<double>(n));
  const std::size_t batch = (options.batch_size == 0 || options.batch_size > n) ? n : options.batch_size;

  LinearSvmModel model;
  model.weights.assign(d, 0.0);
  model.c = options.c;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(options.seed, seed_stream::kSvmBatches));
  std::vector<double> step(d);
  std::size_t t = 0;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      std::fill(step.begin(), step.end(), 0.0);
      double step_b = 0.0;
      for (std::size_t j = start; j < end; ++j) {
        const std::size_t i = order[j];
        const double yi = static_cast<double>(y[i]);
        if (yi * model.decision(x.row(i)) < 1.0) {
          const auto xi = x.row(i);
          for (std::size_t c = 0; c < d; ++c) step[c] += yi * xi[c];
          step_b += yi;
        }
      }
      const double shrink = 1.0 - eta * lambda;
      const double scale = eta / static_cast<double>(end - start);
      double norm2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        model.weights[c] = shrink * model.weights[c] + scale * step[c];
        norm2 += model.weights[c] * model.weights[c];
      }
      model.bias = shrink * model.bias + scale * step_b;
      norm2 += model.bias * model.bias;
      // The optimum lies inside the ball of radius 1/sqrt(lambda).
      const double radius = 1.0 / std::sqrt(lambda);
      if (norm2 > radius * radius) {
        const double f = radius / std::sqrt(norm2);
        for (double& w : model.weights) w *= f;
        model.bias *= f;
      }
    }
    model.objective_history.push_back(svm_objective(model, x, y));
  }
  return model;
}

std::vector<int> svm_predict(const LinearSvmModel& model, const Matrix& x) {
  if (x.cols != model.weights.size()) throw ShapeError("SVM feature count mismatch");
  std::vector<int> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = model.decision(x.row(i)) >= 0.0 ? 1 : -1;
  return out;
}

MulticlassSvm svm_train_multiclass(const Matrix& x, std::span<const int> y,
                                   const SvmOptions& options) {
  std::set<int> classes(y.begin(), y.end());
  if (classes.size() < 2) throw TrainingError("SVM training data contains a single class");
  MulticlassSvm out;
  out.classes.assign(classes.begin(), classes.end());
  std::vector<int> binary(y.size());
  for (int cls : out.classes) {
    for (std::size_t i = 0; i < y.size(); ++i) binary[i] = y[i] == cls ? 1 : -1;
    out.models.push_back(svm_train(x, binary, options));
  }
  return out;
}

std::vector<int> svm_predict_multiclass(const MulticlassSvm& model, const Matrix& x) {
  std::vector<int> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < model.models.size(); ++m) {
      const double s = model.models[m].decision(x.row(i));
      if (s > best) {
        best = s;
        out[i] = model.classes[m];
      }
    }
  }
  return out;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

namespace {

Metrics one_vs_rest(std::span<const int> truth, std::span<const int> predicted, int positive) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == positive;
    const bool p = predicted[i] == positive;
    if (t && p) ++tp;
    else if (p) ++fp;
    else if (t) ++fn;
  }
  Metrics m;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

}  // namespace

Metrics compute_metrics(std::span<const int> truth, std::span<const int> predicted,
                        Averaging averaging, std::span<const int> classes) {
  if (truth.size() != predicted.size()) throw ShapeError("truth and predictions differ in length");
  Metrics out;
  out.n = truth.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i];
  out.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());

  if (averaging == Averaging::Binary) {
    const Metrics m = one_vs_rest(truth, predicted, 1);
    out.precision = m.precision;
    out.recall = m.recall;
    out.f1 = m.f1;
    return out;
  }
  std::set<int> cls(classes.begin(), classes.end());
  if (cls.empty()) {
    cls.insert(truth.begin(), truth.end());
    cls.insert(predicted.begin(), predicted.end());
  }
  for (int c : cls) {
    const Metrics m = one_vs_rest(truth, predicted, c);
    out.precision += m.precision;
    out.recall += m.recall;
    out.f1 += m.f1;
  }
  if (!cls.empty()) {
    const double k = static_cast<double>(cls.size());
    out.precision /= k;
    out.recall /= k;
    out.f1 /= k;
  }
  return out;
}

std::vector<int> fit_predict(const ClassifierSpec& spec, const Matrix& train_x,
                             std::span<const int> train_y, const Matrix& test_x) {
  if (const auto* knn = std::get_if<KnnSpec>(&spec)) {
    return knn_predict(train_x, train_y, test_x, knn->k);
  }
  if (const auto* svm = std::get_if<SvmSpec>(&spec)) {
    std::set<int> classes(train_y.begin(), train_y.end());
    const bool binary01 = std::all_of(classes.begin(), classes.end(), [](int c) { return c == 0 || c == 1; });
    if (binary01 && classes.size() == 2) {
      std::vector<int> signed_y(train_y.size());
      for (std::size_t i = 0; i < train_y.size(); ++i) signed_y[i] = train_y[i] == 1 ? 1 : -1;
      auto pred = svm_predict(svm_train(train_x, signed_y, svm->options), test_x);
      for (int& p : pred) p = p == 1 ? 1 : 0;
      return pred;
    }
    return svm_predict_multiclass(svm_train_multiclass(train_x, train_y, svm->options), test_x);
  }
  return std::get<CustomClassifier>(spec)(train_x, train_y, test_x);
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n_rows, std::size_t folds,
                                                 std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (n_rows < folds) {
    throw ConfigError("cannot split " + std::to_string(n_rows) + " rows into " +
                      std::to_string(folds) + " folds");
  }
  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, seed_stream::kFolds));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n_rows / folds + (f < n_rows % folds ? 1 : 0);
    out[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                  order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return out;
}

MetricsReport cross_validate(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec,
                             const CrossValidationOptions& options) {
  if (x.rows != y.size()) throw ShapeError("labels do not match rows");
  const auto folds = make_folds(x.rows, options.folds, options.seed);
  std::set<int> all_classes(y.begin(), y.end());
  const std::vector<int> classes(all_classes.begin(), all_classes.end());

  MetricsReport report;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train_idx;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::vector<std::size_t> test_idx = folds[f];
    std::sort(test_idx.begin(), test_idx.end());

    Matrix train_x = x.select_rows(train_idx);
    Matrix test_x = x.select_rows(test_idx);
    std::vector<int> train_y, test_y;
    for (auto i : train_idx) train_y.push_back(y[i]);
    for (auto i : test_idx) test_y.push_back(y[i]);

    std::set<int> test_classes(test_y.begin(), test_y.end());
    if (test_classes.size() < 2) {
      report.warnings.push_back("fold " + std::to_string(f) +
                                ": held-out split contains a single class");
    }
    if (options.standardize) {
      const ScalerState s = scaler_fit(train_x);
      train_x = scaler_apply(s, train_x);
      test_x = scaler_apply(s, test_x);
    }
    const auto pred = fit_predict(spec, train_x, train_y, test_x);
    report.folds.push_back(compute_metrics(test_y, pred, options.averaging, classes));
  }

  const double k = static_cast<double>(report.folds.size());
  for (const auto& m : report.folds) {
    report.mean.accuracy += m.accuracy / k;
    report.mean.precision += m.precision / k;
    report.mean.recall += m.recall / k;
    report.mean.f1 += m.f1 / k;
    report.mean.n += m.n;
  }
  return report;
}

std::string metrics_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.mean.accuracy;
  j["precision"] = report.mean.precision;
  j["recall"] = report.mean.recall;
  j["f1"] = report.mean.f1;
  j["n"] = report.mean.n;
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (const auto& m : report.folds) {
    folds.push_back({{"accuracy", m.accuracy},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"f1", m.f1},
                     {"n", m.n}});
  }
  j["folds"] = std::move(folds);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

}  // namespace eegemo

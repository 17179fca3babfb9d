#include "eegemo/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "byteio.hpp"
#include "eegemo/errors.hpp"
#include "eegemo/text.hpp"

namespace eegemo {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return derive_seed(derive_seed(seed, stream), index);
}

MatrixXd sigmoid_m(const MatrixXd& a) {
  return a.unaryExpr([](double v) { return sigmoid(v); });
}

void require_shape(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

MatrixXd dropout_mask(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double rate) {
  if (rate <= 0.0) return MatrixXd::Ones(rows, cols);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng) >= rate ? keep_scale : 0.0;
  }
  return m;
}

MatrixXd batch_norm_forward(const BatchNormParams& p, const BatchNormRunning& running,
                            const MatrixXd& x, Mode mode, double eps,
                            ForwardCache::BatchNormCache& cache) {
  if (mode == Mode::Train) {
    const double n = static_cast<double>(x.cols());
    cache.mean = x.rowwise().sum() / n;
    const MatrixXd centered = x.colwise() - cache.mean;
    cache.var = centered.array().square().rowwise().sum() / n;
  } else {
    cache.mean = running.mean;
    cache.var = running.var;
  }
  cache.inv_std = (cache.var.array() + eps).rsqrt();
  cache.x_hat = (x.colwise() - cache.mean).array().colwise() * cache.inv_std.array();
  return (cache.x_hat.array().colwise() * p.gamma.array()).colwise() + p.beta.array();
}

MatrixXd batch_norm_backward(const BatchNormParams& p, const ForwardCache::BatchNormCache& cache,
                             Mode mode, const MatrixXd& dy, BatchNormParams& grads) {
  grads.gamma += (dy.array() * cache.x_hat.array()).rowwise().sum().matrix();
  grads.beta += dy.rowwise().sum();
  const MatrixXd dx_hat = dy.array().colwise() * p.gamma.array();
  if (mode == Mode::Eval) return dx_hat.array().colwise() * cache.inv_std.array();
  const double n = static_cast<double>(dy.cols());
  const VectorXd sum_dx_hat = dx_hat.rowwise().sum();
  const VectorXd sum_dx_hat_xhat = (dx_hat.array() * cache.x_hat.array()).rowwise().sum();
  MatrixXd dx = (n * dx_hat.array()).matrix();
  dx.colwise() -= sum_dx_hat;
  dx -= (cache.x_hat.array().colwise() * sum_dx_hat_xhat.array()).matrix();
  return (dx.array().colwise() * (cache.inv_std.array() / n)).matrix();
}

MatrixXd concat_columns(const std::vector<MatrixXd>& blocks) {
  const Eigen::Index rows = blocks.front().rows();
  const Eigen::Index cols = blocks.front().cols();
  MatrixXd out(rows, cols * static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    out.middleCols(static_cast<Eigen::Index>(t) * cols, cols) = blocks[t];
  }
  return out;
}

void add_into(LstmLayerParams& dst, const LstmLayerParams& src) {
  dst.w += src.w;
  dst.u += src.u;
  dst.b += src.b;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LstmLayerParams LstmLayerParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
  LstmLayerParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  const auto i = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(hidden_dim);
  p.w = MatrixXd::Zero(4 * h, i);
  p.u = MatrixXd::Zero(4 * h, h);
  p.b = VectorXd::Zero(4 * h);
  return p;
}

CellCache lstm_cell_forward_cached(const LstmLayerParams& p, const MatrixXd& x,
                                   const MatrixXd& h_prev, const MatrixXd& c_prev) {
  const auto h = static_cast<Eigen::Index>(p.hidden_dim);
  const Eigen::Index batch = x.cols();
  require_shape(x, static_cast<Eigen::Index>(p.input_dim), batch, "LSTM input");
  require_shape(h_prev, h, batch, "LSTM h_prev");
  require_shape(c_prev, h, batch, "LSTM c_prev");
  require_shape(p.w, 4 * h, static_cast<Eigen::Index>(p.input_dim), "LSTM W");
  require_shape(p.u, 4 * h, h, "LSTM U");
  if (p.b.size() != 4 * h) throw ShapeError("LSTM bias has the wrong length");

  MatrixXd a = p.w * x + p.u * h_prev;
  a.colwise() += p.b;

  CellCache cache;
  cache.x = x;
  cache.h_prev = h_prev;
  cache.c_prev = c_prev;
  cache.i = sigmoid_m(a.topRows(h));
  cache.f = sigmoid_m(a.middleRows(h, h));
  cache.o = sigmoid_m(a.middleRows(2 * h, h));
  cache.g = a.bottomRows(h).array().tanh();
  cache.c = cache.f.cwiseProduct(c_prev) + cache.i.cwiseProduct(cache.g);
  cache.tanh_c = cache.c.array().tanh();
  cache.h = cache.o.cwiseProduct(cache.tanh_c);
  return cache;
}

CellState lstm_cell_forward(const LstmLayerParams& p, const MatrixXd& x, const MatrixXd& h_prev,
                            const MatrixXd& c_prev) {
  CellCache cache = lstm_cell_forward_cached(p, x, h_prev, c_prev);
  return {std::move(cache.h), std::move(cache.c)};
}

CellGrads lstm_cell_backward(const LstmLayerParams& p, const CellCache& cache, const MatrixXd& dh,
                             const MatrixXd& dc) {
  const auto h = static_cast<Eigen::Index>(p.hidden_dim);
  require_shape(dh, h, cache.h.cols(), "dh");
  require_shape(dc, h, cache.h.cols(), "dc");

  const auto o = cache.o.array();
  const auto i = cache.i.array();
  const auto f = cache.f.array();
  const auto g = cache.g.array();
  const auto tc = cache.tanh_c.array();

  const Eigen::ArrayXXd dc_total = dc.array() + dh.array() * o * (1.0 - tc.square());
  MatrixXd da(4 * h, cache.h.cols());
  da.topRows(h) = (dc_total * g * i * (1.0 - i)).matrix();
  da.middleRows(h, h) = (dc_total * cache.c_prev.array() * f * (1.0 - f)).matrix();
  da.middleRows(2 * h, h) = (dh.array() * tc * o * (1.0 - o)).matrix();
  da.bottomRows(h) = (dc_total * i * (1.0 - g.square())).matrix();

  CellGrads out;
  out.params.input_dim = p.input_dim;
  out.params.hidden_dim = p.hidden_dim;
  out.params.w = da * cache.x.transpose();
  out.params.u = da * cache.h_prev.transpose();
  out.params.b = da.rowwise().sum();
  out.dx = p.w.transpose() * da;
  out.dh_prev = p.u.transpose() * da;
  out.dc_prev = (dc_total * f).matrix();
  return out;
}

ModelParameters ModelParameters::zeros_like() const {
  ModelParameters z;
  for (const auto& l : lstm) z.lstm.push_back(LstmLayerParams::zeros(l.input_dim, l.hidden_dim));
  for (const auto& b : bn) {
    z.bn.push_back({VectorXd::Zero(b.gamma.size()), VectorXd::Zero(b.beta.size())});
  }
  z.head_hidden = {MatrixXd::Zero(head_hidden.w.rows(), head_hidden.w.cols()),
                   VectorXd::Zero(head_hidden.b.size())};
  z.head_out = {MatrixXd::Zero(head_out.w.rows(), head_out.w.cols()),
                VectorXd::Zero(head_out.b.size())};
  return z;
}

std::vector<TensorView> tensor_views(ModelParameters& params) {
  std::vector<TensorView> out;
  auto add_m = [&](std::string name, MatrixXd& m) {
    out.push_back({std::move(name),
                   {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                   m.data(),
                   static_cast<std::size_t>(m.size())});
  };
  auto add_v = [&](std::string name, VectorXd& v) {
    out.push_back({std::move(name), {static_cast<std::size_t>(v.size())}, v.data(),
                   static_cast<std::size_t>(v.size())});
  };
  for (std::size_t l = 0; l < params.lstm.size(); ++l) {
    const std::string p = "lstm" + std::to_string(l) + ".";
    add_m(p + "w", params.lstm[l].w);
    add_m(p + "u", params.lstm[l].u);
    add_v(p + "b", params.lstm[l].b);
  }
  for (std::size_t l = 0; l < params.bn.size(); ++l) {
    const std::string p = "bn" + std::to_string(l) + ".";
    add_v(p + "gamma", params.bn[l].gamma);
    add_v(p + "beta", params.bn[l].beta);
  }
  add_m("head.hidden.w", params.head_hidden.w);
  add_v("head.hidden.b", params.head_hidden.b);
  add_m("head.out.w", params.head_out.w);
  add_v("head.out.b", params.head_out.b);
  return out;
}

LstmModel init_model(const LstmConfig& config, std::size_t input_dim, std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("model input dimension must be >= 1");
  if (config.hidden_sizes.empty()) throw ConfigError("model needs at least one LSTM layer");
  if (config.dropout.size() != config.hidden_sizes.size()) {
    throw ConfigError("one dropout rate per LSTM layer is required");
  }
  if (config.head_hidden == 0 || config.n_outputs == 0) {
    throw ConfigError("head sizes must be >= 1");
  }

  LstmModel model;
  model.config = config;
  model.input_dim = input_dim;
  std::mt19937_64 rng(seed);
  auto fill_uniform = [&](MatrixXd& m, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
    }
  };

  std::size_t in = input_dim;
  for (std::size_t hidden : config.hidden_sizes) {
    auto layer = LstmLayerParams::zeros(in, hidden);
    fill_uniform(layer.w, in);
    fill_uniform(layer.u, hidden);
    model.params.lstm.push_back(std::move(layer));
    const auto h = static_cast<Eigen::Index>(hidden);
    model.params.bn.push_back({VectorXd::Ones(h), VectorXd::Zero(h)});
    model.running.push_back({VectorXd::Zero(h), VectorXd::Ones(h)});
    in = hidden;
  }
  const auto top = static_cast<Eigen::Index>(config.hidden_sizes.back());
  const auto head = static_cast<Eigen::Index>(config.head_hidden);
  const auto outs = static_cast<Eigen::Index>(config.n_outputs);
  model.params.head_hidden = {MatrixXd(head, top), VectorXd::Zero(head)};
  fill_uniform(model.params.head_hidden.w, static_cast<std::size_t>(top));
  model.params.head_out = {MatrixXd(outs, head), VectorXd::Zero(outs)};
  fill_uniform(model.params.head_out.w, config.head_hidden);
  model.scaler.mean.assign(input_dim, 0.0);
  model.scaler.std.assign(input_dim, 1.0);
  return model;
}

ForwardCache forward(const LstmModel& model, const SequenceBatch& batch, Mode mode,
                     std::uint64_t mask_seed) {
  if (batch.empty()) throw ShapeError("empty sequence batch");
  const Eigen::Index b = batch.front().cols();
  if (b == 0) throw ShapeError("batch has no samples");
  for (const auto& step : batch) {
    require_shape(step, static_cast<Eigen::Index>(model.input_dim), b, "input step");
  }
  const LstmConfig& cfg = model.config;
  const std::size_t n_layers = model.params.lstm.size();
  const std::size_t steps = batch.size();

  ForwardCache cache;
  cache.mode = mode;
  cache.batch = static_cast<std::size_t>(b);
  cache.layers.resize(n_layers);
  std::mt19937_64 rng(mask_seed);

  std::vector<MatrixXd> inputs = batch;
  MatrixXd top;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const LstmLayerParams& p = model.params.lstm[l];
    const auto hidden = static_cast<Eigen::Index>(p.hidden_dim);
    auto& layer = cache.layers[l];
    MatrixXd h = MatrixXd::Zero(hidden, b);
    MatrixXd c = MatrixXd::Zero(hidden, b);
    layer.steps.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      layer.steps.push_back(lstm_cell_forward_cached(p, inputs[t], h, c));
      h = layer.steps.back().h;
      c = layer.steps.back().c;
    }

    const bool last = l + 1 == n_layers;
    std::vector<MatrixXd> dropped;
    if (last) {
      dropped.push_back(layer.steps.back().h);
    } else {
      for (const auto& s : layer.steps) dropped.push_back(s.h);
    }
    if (mode == Mode::Train) {
      for (auto& d : dropped) {
        layer.dropout_masks.push_back(dropout_mask(rng, hidden, b, cfg.dropout[l]));
        d = d.cwiseProduct(layer.dropout_masks.back());
      }
    }
    const MatrixXd normalized = batch_norm_forward(model.params.bn[l], model.running[l],
                                                   concat_columns(dropped), mode,
                                                   cfg.bn_epsilon, layer.bn);
    if (last) {
      top = normalized;
    } else {
      for (std::size_t t = 0; t < steps; ++t) {
        inputs[t] = normalized.middleCols(static_cast<Eigen::Index>(t) * b, b);
      }
    }
  }

  cache.head_in = top;
  if (mode == Mode::Train) {
    cache.head_mask = dropout_mask(rng, top.rows(), b, cfg.head_dropout);
    cache.head_in = cache.head_in.cwiseProduct(cache.head_mask);
  }
  cache.z1 = model.params.head_hidden.w * cache.head_in;
  cache.z1.colwise() += model.params.head_hidden.b;
  cache.r = cache.z1.cwiseMax(0.0);
  cache.z2 = model.params.head_out.w * cache.r;
  cache.z2.colwise() += model.params.head_out.b;
  cache.predictions = sigmoid_m(cache.z2);
  return cache;
}

ModelParameters backward(const LstmModel& model, const ForwardCache& cache,
                         const MatrixXd& d_predictions) {
  require_shape(d_predictions, cache.predictions.rows(), cache.predictions.cols(),
                "prediction gradient");
  ModelParameters grads = model.params.zeros_like();
  const auto b = static_cast<Eigen::Index>(cache.batch);
  const std::size_t n_layers = model.params.lstm.size();

  const MatrixXd& p = cache.predictions;
  const MatrixXd dz2 = (d_predictions.array() * p.array() * (1.0 - p.array())).matrix();
  grads.head_out.w = dz2 * cache.r.transpose();
  grads.head_out.b = dz2.rowwise().sum();
  const MatrixXd dr = model.params.head_out.w.transpose() * dz2;
  const MatrixXd dz1 = (dr.array() * (cache.z1.array() > 0.0).cast<double>()).matrix();
  grads.head_hidden.w = dz1 * cache.head_in.transpose();
  grads.head_hidden.b = dz1.rowwise().sum();
  MatrixXd d_out = model.params.head_hidden.w.transpose() * dz1;
  if (cache.mode == Mode::Train) d_out = d_out.cwiseProduct(cache.head_mask);

  // d_out holds dL/d(batch-norm output) of the current layer.
  for (std::size_t l = n_layers; l-- > 0;) {
    const auto& layer = cache.layers[l];
    const LstmLayerParams& params = model.params.lstm[l];
    const auto hidden = static_cast<Eigen::Index>(params.hidden_dim);
    const std::size_t steps = layer.steps.size();
    const bool last = l + 1 == n_layers;

    const MatrixXd d_dropped =
        batch_norm_backward(model.params.bn[l], layer.bn, cache.mode, d_out, grads.bn[l]);

    std::vector<MatrixXd> dh_seq(steps, MatrixXd::Zero(hidden, b));
    if (last) {
      dh_seq.back() = d_dropped;
      if (cache.mode == Mode::Train) dh_seq.back() = dh_seq.back().cwiseProduct(layer.dropout_masks[0]);
    } else {
      for (std::size_t t = 0; t < steps; ++t) {
        dh_seq[t] = d_dropped.middleCols(static_cast<Eigen::Index>(t) * b, b);
        if (cache.mode == Mode::Train) dh_seq[t] = dh_seq[t].cwiseProduct(layer.dropout_masks[t]);
      }
    }

    MatrixXd dh_next = MatrixXd::Zero(hidden, b);
    MatrixXd dc_next = MatrixXd::Zero(hidden, b);
    std::vector<MatrixXd> dx_seq(steps);
    for (std::size_t t = steps; t-- > 0;) {
      CellGrads g = lstm_cell_backward(params, layer.steps[t], dh_seq[t] + dh_next, dc_next);
      add_into(grads.lstm[l], g.params);
      dx_seq[t] = std::move(g.dx);
      dh_next = std::move(g.dh_prev);
      dc_next = std::move(g.dc_prev);
    }
    if (l > 0) d_out = concat_columns(dx_seq);
  }
  return grads;
}

void update_running_stats(LstmModel& model, const ForwardCache& cache) {
  if (cache.mode != Mode::Train) return;
  const double m = model.config.bn_momentum;
  for (std::size_t l = 0; l < model.running.size(); ++l) {
    auto& r = model.running[l];
    r.mean = m * r.mean + (1.0 - m) * cache.layers[l].bn.mean;
    r.var = m * r.var + (1.0 - m) * cache.layers[l].bn.var;
  }
}

double mse_loss(const MatrixXd& pred, const MatrixXd& target) {
  require_shape(target, pred.rows(), pred.cols(), "MSE target");
  if (pred.size() == 0) throw ShapeError("MSE of an empty matrix");
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

MatrixXd mse_grad(const MatrixXd& pred, const MatrixXd& target) {
  require_shape(target, pred.rows(), pred.cols(), "MSE target");
  return 2.0 * (pred - target) / static_cast<double>(pred.size());
}

RmspropState make_rmsprop(const LstmConfig& config, const ModelParameters& params) {
  RmspropState s;
  s.learning_rate = config.learning_rate;
  s.rho = config.rho;
  s.epsilon = config.epsilon;
  s.momentum = config.momentum;
  ModelParameters copy = params;
  for (const auto& v : tensor_views(copy)) {
    s.mean_square.emplace_back(v.size, 0.0);
    s.velocity.emplace_back(v.size, 0.0);
  }
  return s;
}

void rmsprop_step(RmspropState& state, std::size_t tensor_index, std::span<double> param,
                  std::span<const double> grad) {
  if (tensor_index >= state.mean_square.size()) throw ShapeError("optimizer has no such tensor");
  auto& avg = state.mean_square[tensor_index];
  auto& vel = state.velocity[tensor_index];
  if (param.size() != avg.size() || grad.size() != avg.size()) {
    throw ShapeError("optimizer state and parameter sizes differ");
  }
  for (std::size_t k = 0; k < param.size(); ++k) {
    avg[k] = state.rho * avg[k] + (1.0 - state.rho) * grad[k] * grad[k];
    vel[k] = state.momentum * vel[k] +
             state.learning_rate * grad[k] / (std::sqrt(avg[k]) + state.epsilon);
    param[k] -= vel[k];
  }
}

void rmsprop_step(RmspropState& state, ModelParameters& params, ModelParameters& grads) {
  auto pv = tensor_views(params);
  auto gv = tensor_views(grads);
  if (pv.size() != gv.size() || pv.size() != state.mean_square.size()) {
    throw ShapeError("parameter, gradient and optimizer tensor counts differ");
  }
  for (std::size_t t = 0; t < pv.size(); ++t) {
    if (pv[t].size != gv[t].size) throw ShapeError("gradient shape mismatch for " + pv[t].name);
    rmsprop_step(state, t, {pv[t].data, pv[t].size}, {gv[t].data, gv[t].size});
  }
}

LabelLookup make_label_lookup(std::uint32_t subject, const LabelSet& labels) {
  LabelLookup out;
  for (std::size_t t = 0; t < labels.size(); ++t) out[{subject, t}] = labels.trials[t];
  return out;
}

std::vector<Sequence> build_sequences(const FeatureMatrix& features, const LabelLookup& labels,
                                      std::size_t seq_len, std::size_t n_outputs) {
  if (seq_len == 0) throw ConfigError("sequence length must be >= 1");
  if (n_outputs == 0 || n_outputs > 2) {
    throw ConfigError("targets are (valence, arousal); n_outputs must be 1 or 2");
  }
  std::map<std::pair<std::uint32_t, std::size_t>, std::vector<std::pair<long long, std::size_t>>>
      by_trial;
  for (std::size_t r = 0; r < features.n_rows(); ++r) {
    const auto& p = features.provenance(r);
    by_trial[{p.subject, p.trial}].emplace_back(p.window, r);
  }
  const auto dim = static_cast<Eigen::Index>(features.n_cols());
  std::vector<Sequence> out;
  for (auto& [key, rows] : by_trial) {
    auto label = labels.find(key);
    if (label == labels.end()) {
      throw ValidationError("no label for subject " + std::to_string(key.first) + " trial " +
                            std::to_string(key.second));
    }
    std::sort(rows.begin(), rows.end());
    for (std::size_t start = 0; start + seq_len <= rows.size(); start += seq_len) {
      Sequence s;
      s.subject = key.first;
      s.trial = key.second;
      s.first_window = static_cast<std::size_t>(std::max(0LL, rows[start].first));
      s.x.resize(dim, static_cast<Eigen::Index>(seq_len));
      for (std::size_t t = 0; t < seq_len; ++t) {
        const auto row = features.row(rows[start + t].second);
        for (Eigen::Index d = 0; d < dim; ++d) s.x(d, static_cast<Eigen::Index>(t)) = row[d];
      }
      s.target.resize(static_cast<Eigen::Index>(n_outputs));
      s.target(0) = label->second.valence_positive ? 1.0 : 0.0;
      if (n_outputs > 1) s.target(1) = label->second.arousal_positive ? 1.0 : 0.0;
      out.push_back(std::move(s));
    }
  }
  return out;
}

SequenceBatch make_batch(const std::vector<Sequence>& data, std::span<const std::size_t> indices,
                         MatrixXd* targets) {
  if (indices.empty()) throw ShapeError("empty batch");
  const Sequence& first = data.at(indices.front());
  const Eigen::Index dim = first.x.rows();
  const Eigen::Index steps = first.x.cols();
  const auto b = static_cast<Eigen::Index>(indices.size());
  SequenceBatch batch(static_cast<std::size_t>(steps), MatrixXd(dim, b));
  if (targets) targets->resize(first.target.size(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const Sequence& s = data.at(indices[static_cast<std::size_t>(j)]);
    require_shape(s.x, dim, steps, "sequence");
    for (Eigen::Index t = 0; t < steps; ++t) batch[static_cast<std::size_t>(t)].col(j) = s.x.col(t);
    if (targets) targets->col(j) = s.target;
  }
  return batch;
}

DataSplit split_dataset(const std::vector<Sequence>& data, const LstmConfig& config,
                        std::uint64_t seed) {
  DataSplit split;
  std::mt19937_64 rng(stream_seed(seed, seed_stream::kLstmSplit));
  if (config.split == SplitMode::ByWindow) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(config.train_fraction * static_cast<double>(order.size())));
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, order.size())));
    split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(split.train.size()), order.end());
  } else {
    std::set<std::pair<std::uint32_t, std::size_t>> keys;
    for (const auto& s : data) keys.insert({s.subject, s.trial});
    std::vector<std::pair<std::uint32_t, std::size_t>> order(keys.begin(), keys.end());
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(config.train_fraction * static_cast<double>(order.size())));
    std::set<std::pair<std::uint32_t, std::size_t>> train_keys(
        order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, order.size())));
    for (std::size_t i = 0; i < data.size(); ++i) {
      (train_keys.count({data[i].subject, data[i].trial}) ? split.train : split.validation).push_back(i);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

std::vector<Sequence> scale_sequences(const LstmModel& model, const std::vector<Sequence>& data) {
  std::vector<Sequence> out = data;
  const auto& sc = model.scaler;
  for (auto& s : out) {
    if (static_cast<std::size_t>(s.x.rows()) != sc.mean.size()) {
      throw ShapeError("sequence feature count does not match the model scaler");
    }
    for (Eigen::Index t = 0; t < s.x.cols(); ++t) {
      for (Eigen::Index d = 0; d < s.x.rows(); ++d) {
        const auto k = static_cast<std::size_t>(d);
        s.x(d, t) = sc.std[k] > 0.0 ? (s.x(d, t) - sc.mean[k]) / sc.std[k] : 0.0;
      }
    }
  }
  return out;
}

namespace {

constexpr std::size_t kEvalBatch = 256;

EvalResult evaluate_scaled(const LstmModel& model, const std::vector<Sequence>& data,
                           std::span<const std::size_t> indices) {
  EvalResult out;
  const auto n_out = static_cast<Eigen::Index>(model.config.n_outputs);
  out.predictions.resize(n_out, static_cast<Eigen::Index>(indices.size()));
  out.output_accuracy.assign(model.config.n_outputs, 0.0);
  if (indices.empty()) return out;
  double sq_err = 0.0;
  std::vector<std::size_t> correct(model.config.n_outputs, 0);
  for (std::size_t start = 0; start < indices.size(); start += kEvalBatch) {
    const std::size_t end = std::min(indices.size(), start + kEvalBatch);
    MatrixXd targets;
    const auto batch = make_batch(data, indices.subspan(start, end - start), &targets);
    const ForwardCache fc = forward(model, batch, Mode::Eval);
    sq_err += (fc.predictions - targets).squaredNorm();
    for (Eigen::Index j = 0; j < targets.cols(); ++j) {
      for (Eigen::Index k = 0; k < n_out; ++k) {
        const bool predicted = fc.predictions(k, j) >= 0.5;
        if (predicted == (targets(k, j) >= 0.5)) ++correct[static_cast<std::size_t>(k)];
      }
    }
    out.predictions.middleCols(static_cast<Eigen::Index>(start), targets.cols()) = fc.predictions;
  }
  const double n = static_cast<double>(indices.size());
  out.loss = sq_err / (n * static_cast<double>(n_out));
  double total = 0.0;
  for (std::size_t k = 0; k < correct.size(); ++k) {
    out.output_accuracy[k] = static_cast<double>(correct[k]) / n;
    total += out.output_accuracy[k];
  }
  out.accuracy = total / static_cast<double>(correct.size());
  return out;
}

ScalerState fit_sequence_scaler(const std::vector<Sequence>& data,
                                std::span<const std::size_t> indices) {
  const auto dim = static_cast<std::size_t>(data.at(indices.front()).x.rows());
  std::size_t rows = 0;
  for (auto i : indices) rows += static_cast<std::size_t>(data[i].x.cols());
  Matrix m(rows, dim);
  std::size_t r = 0;
  for (auto i : indices) {
    const auto& x = data[i].x;
    for (Eigen::Index t = 0; t < x.cols(); ++t, ++r) {
      for (std::size_t d = 0; d < dim; ++d) m(r, d) = x(static_cast<Eigen::Index>(d), t);
    }
  }
  return scaler_fit(m);
}

std::string checkpoint_name(std::size_t epoch) {
  std::string digits = std::to_string(epoch);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "epoch_" + digits + ".ckpt";
}

}  // namespace

EvalResult evaluate(const LstmModel& model, const std::vector<Sequence>& data,
                    std::span<const std::size_t> indices) {
  return evaluate_scaled(model, scale_sequences(model, data), indices);
}

std::string epoch_to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["train_accuracy"] = r.train_accuracy;
  j["val_loss"] = r.val_loss;
  j["val_accuracy"] = r.val_accuracy;
  j["val_output_accuracy"] = r.val_output_accuracy;
  j["checkpoint"] = r.checkpoint.empty() ? nlohmann::ordered_json(nullptr)
                                         : nlohmann::ordered_json(r.checkpoint);
  return j.dump();
}

std::string report_to_jsonl(const TrainReport& report) {
  std::string out;
  for (const auto& e : report.epochs) out += epoch_to_json(e) + "\n";
  return out;
}

TrainResult train(const std::vector<Sequence>& data, const LstmConfig& config,
                  const TrainOptions& options) {
  if (data.empty()) throw ConfigError("no training sequences (trials shorter than one sequence?)");
  const auto input_dim = static_cast<std::size_t>(data.front().x.rows());

  TrainResult result;
  std::size_t start_epoch = 0;
  if (options.resume_from) {
    Checkpoint ck = load_checkpoint(*options.resume_from);
    if (ck.model.input_dim != input_dim) {
      throw ConfigError("checkpoint input dimension does not match the features");
    }
    if (ck.seed != options.seed) {
      throw ConfigError("checkpoint was trained with seed " + std::to_string(ck.seed) +
                        ", resume requested seed " + std::to_string(options.seed));
    }
    result.model = std::move(ck.model);
    result.model.config.epochs = config.epochs;
    result.optimizer = std::move(ck.optimizer);
    start_epoch = ck.epoch;
  } else {
    result.model = init_model(config, input_dim, stream_seed(options.seed, seed_stream::kLstmInit));
  }
  const LstmConfig& cfg = result.model.config;

  result.split = split_dataset(data, cfg, options.seed);
  if (result.split.train.empty() || result.split.validation.empty()) {
    throw ConfigError("train/validation split left one side empty (" +
                      std::to_string(result.split.train.size()) + "/" +
                      std::to_string(result.split.validation.size()) + " sequences)");
  }
  if (!options.resume_from) {
    result.model.scaler = fit_sequence_scaler(data, result.split.train);
    result.optimizer = make_rmsprop(cfg, result.model.params);
  }
  const std::vector<Sequence> scaled = scale_sequences(result.model, data);

  TrainReport& report = result.report;
  report.split = cfg.split;
  report.n_train = result.split.train.size();
  report.n_validation = result.split.validation.size();
  report.initial_train_loss = evaluate_scaled(result.model, scaled, result.split.train).loss;
  report.initial_val_loss = evaluate_scaled(result.model, scaled, result.split.validation).loss;

  std::vector<std::size_t> order = result.split.train;
  for (std::size_t epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    order = result.split.train;
    std::mt19937_64 rng(stream_seed(options.seed, seed_stream::kLstmShuffle, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      MatrixXd targets;
      const auto batch =
          make_batch(scaled, std::span<const std::size_t>(order).subspan(start, end - start), &targets);
      const ForwardCache fc =
          forward(result.model, batch, Mode::Train, derive_seed(stream_seed(options.seed, seed_stream::kLstmDropout, epoch), batch_index));
      const double loss = mse_loss(fc.predictions, targets);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      }
      ModelParameters grads = backward(result.model, fc, mse_grad(fc.predictions, targets));
      rmsprop_step(result.optimizer, result.model.params, grads);
      update_running_stats(result.model, fc);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const EvalResult tr = evaluate_scaled(result.model, scaled, result.split.train);
    const EvalResult va = evaluate_scaled(result.model, scaled, result.split.validation);
    if (!std::isfinite(tr.loss) || !std::isfinite(va.loss)) {
      throw TrainingError("non-finite evaluation loss at epoch " + std::to_string(epoch));
    }
    rec.train_loss = tr.loss;
    rec.train_accuracy = tr.accuracy;
    rec.val_loss = va.loss;
    rec.val_accuracy = va.accuracy;
    rec.val_output_accuracy = va.output_accuracy;
    if (!options.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        epoch % cfg.checkpoint_every == 0) {
      std::filesystem::create_directories(options.checkpoint_dir);
      const auto path = options.checkpoint_dir / checkpoint_name(epoch);
      save_checkpoint({result.model, result.optimizer, epoch, options.seed}, path);
      rec.checkpoint = path.filename().string();
    }
    report.epochs.push_back(std::move(rec));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// "LSTM", version u32, config digest u64 (FNV-1a of the config text), config
// text (u32 length + bytes), seed u64, epoch u32, input_dim u32, then two
// tensor groups (model, optimizer), each a u32 count followed by tensors of
// (u32 name length, name, u32 rank, u64 dims..., f64 values).

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

void put_tensor(std::string& out, std::string_view name, const std::vector<std::size_t>& shape,
                std::span<const double> values) {
  detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
  out.append(name);
  detail::put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) detail::put_u64(out, d);
  for (double v : values) detail::put_f64(out, v);
}

NamedTensor get_tensor(detail::ByteReader& in) {
  NamedTensor t;
  t.name = std::string(in.bytes(in.u32()));
  const std::uint32_t rank = in.u32();
  if (rank > 8) throw CorruptionError("tensor '" + t.name + "' has implausible rank");
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.shape.push_back(static_cast<std::size_t>(in.u64()));
    count *= t.shape.back();
  }
  if (count > (std::size_t{1} << 32)) throw CorruptionError("tensor '" + t.name + "' is too large");
  t.values.resize(count);
  for (auto& v : t.values) v = in.f64();
  return t;
}

// Non-trainable tensors stored next to the parameters.
std::vector<TensorView> state_views(LstmModel& model) {
  std::vector<TensorView> out = tensor_views(model.params);
  for (std::size_t l = 0; l < model.running.size(); ++l) {
    auto& r = model.running[l];
    const std::string p = "bn" + std::to_string(l) + ".";
    out.push_back({p + "running_mean", {static_cast<std::size_t>(r.mean.size())}, r.mean.data(),
                   static_cast<std::size_t>(r.mean.size())});
    out.push_back({p + "running_var", {static_cast<std::size_t>(r.var.size())}, r.var.data(),
                   static_cast<std::size_t>(r.var.size())});
  }
  out.push_back({"scaler.mean", {model.scaler.mean.size()}, model.scaler.mean.data(),
                 model.scaler.mean.size()});
  out.push_back({"scaler.std", {model.scaler.std.size()}, model.scaler.std.data(),
                 model.scaler.std.size()});
  return out;
}

void fill_from(const std::vector<NamedTensor>& tensors, const std::vector<TensorView>& views,
               const char* group) {
  if (tensors.size() != views.size()) {
    throw CorruptionError(std::string(group) + " tensor count " + std::to_string(tensors.size()) +
                          " does not match the architecture (" + std::to_string(views.size()) + ")");
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    if (tensors[i].name != views[i].name || tensors[i].shape != views[i].shape) {
      throw CorruptionError("checkpoint tensor '" + tensors[i].name + "' does not match expected '" +
                            views[i].name + "'");
    }
    std::copy(tensors[i].values.begin(), tensors[i].values.end(), views[i].data);
  }
}

}  // namespace

std::string lstm_config_string(const LstmConfig& config) {
  PipelineConfig pc;
  pc.lstm = config;
  std::string out;
  for (auto line : split_lines(canonical_string(pc))) {
    if (line.starts_with("lstm.")) {
      out.append(line);
      out += '\n';
    }
  }
  return out;
}

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  Checkpoint copy = checkpoint;
  const std::string cfg = lstm_config_string(copy.model.config);
  std::string out = "LSTM";
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u64(out, fnv1a64(cfg));
  detail::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  detail::put_u64(out, copy.seed);
  detail::put_u32(out, static_cast<std::uint32_t>(copy.epoch));
  detail::put_u32(out, static_cast<std::uint32_t>(copy.model.input_dim));

  const auto views = state_views(copy.model);
  detail::put_u32(out, static_cast<std::uint32_t>(views.size()));
  for (const auto& v : views) put_tensor(out, v.name, v.shape, {v.data, v.size});

  const auto param_views = tensor_views(copy.model.params);
  const auto& opt = copy.optimizer;
  if (opt.mean_square.size() != param_views.size() || opt.velocity.size() != param_views.size()) {
    throw ShapeError("optimizer state does not match the model");
  }
  detail::put_u32(out, static_cast<std::uint32_t>(2 * param_views.size()));
  for (std::size_t i = 0; i < param_views.size(); ++i) {
    put_tensor(out, "opt.mean_square." + param_views[i].name, param_views[i].shape,
               opt.mean_square[i]);
  }
  for (std::size_t i = 0; i < param_views.size(); ++i) {
    put_tensor(out, "opt.velocity." + param_views[i].name, param_views[i].shape, opt.velocity[i]);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "LSTM") {
    throw FormatError("bad checkpoint magic (expected LSTM)");
  }
  detail::ByteReader in(bytes.substr(4));
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t digest = in.u64();
  const std::string cfg_text(in.bytes(in.u32()));
  if (fnv1a64(cfg_text) != digest) throw CorruptionError("checkpoint config digest mismatch");
  const LstmConfig config = parse_config(cfg_text).lstm;

  Checkpoint ck;
  ck.seed = in.u64();
  ck.epoch = in.u32();
  const std::uint32_t input_dim = in.u32();
  ck.model = init_model(config, input_dim, 0);

  std::vector<NamedTensor> model_tensors(in.u32());
  for (auto& t : model_tensors) t = get_tensor(in);
  fill_from(model_tensors, state_views(ck.model), "model");

  ck.optimizer = make_rmsprop(config, ck.model.params);
  std::vector<NamedTensor> opt_tensors(in.u32());
  for (auto& t : opt_tensors) t = get_tensor(in);
  const auto param_views = tensor_views(ck.model.params);
  if (opt_tensors.size() != 2 * param_views.size()) {
    throw CorruptionError("optimizer tensor count does not match the architecture");
  }
  for (std::size_t i = 0; i < param_views.size(); ++i) {
    const auto& ms = opt_tensors[i];
    const auto& vel = opt_tensors[param_views.size() + i];
    if (ms.name != "opt.mean_square." + param_views[i].name || ms.shape != param_views[i].shape ||
        vel.name != "opt.velocity." + param_views[i].name || vel.shape != param_views[i].shape) {
      throw CorruptionError("optimizer tensor mismatch at '" + param_views[i].name + "'");
    }
    ck.optimizer.mean_square[i] = ms.values;
    ck.optimizer.velocity[i] = vel.values;
  }
  if (!in.at_end()) throw CorruptionError("trailing bytes after checkpoint payload");
  return ck;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_text_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_text_file(path));
}

}  // namespace eegemo

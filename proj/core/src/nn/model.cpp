/*
 * Copyright 2026 The fscl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fscl/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fscl/error.hpp"
#include "fscl/hash.hpp"

namespace fscl::nn {
namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;

constexpr double kProbClamp = 1e-7;

ArrayXXd sigmoid(const ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

std::string tensor_name(std::string_view layer, std::string_view name) {
  std::string out(layer);
  out += '/';
  out += name;
  return out;
}

void add_gru_layer(ParamSet& p, std::string_view layer, std::uint32_t input, std::uint32_t hidden) {
  // Lexicographic within the layer: U_* < W_* < b_*.
  for (const char* gate : {"U_h", "U_r", "U_z"})
    p.add(tensor_name(layer, gate), {hidden, hidden}, ParamKind::Weight);
  for (const char* gate : {"W_h", "W_r", "W_z"})
    p.add(tensor_name(layer, gate), {hidden, input}, ParamKind::Weight);
  for (const char* gate : {"b_h", "b_r", "b_z"})
    p.add(tensor_name(layer, gate), {hidden}, ParamKind::Bias);
}

void xavier_uniform(Tensor& t, Rng& rng) {
  const double fan_out = static_cast<double>(t.rows());
  const double fan_in = static_cast<double>(t.cols());
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.values) v = dist(rng);
}

void orthogonal(Tensor& t, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  MatrixXd a(static_cast<Index>(t.rows()), static_cast<Index>(t.cols()));
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) a(i, j) = dist(rng);
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
  const MatrixXd r = qr.matrixQR();
  for (Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  as_matrix(t) = q;
}

void gru_forward(const MatrixXd& x, std::size_t steps, std::size_t batch, const GruWeights& w,
                 GruCache& cache) {
  const Index b = static_cast<Index>(batch);
  const Index h = w.U_z.rows();
  const Index rows = static_cast<Index>(steps) * b;

  MatrixXd gz = x * w.W_z.transpose();
  MatrixXd gr = x * w.W_r.transpose();
  MatrixXd gh = x * w.W_h.transpose();
  gz.rowwise() += w.b_z.transpose();
  gr.rowwise() += w.b_r.transpose();
  gh.rowwise() += w.b_h.transpose();

  cache.states = MatrixXd::Zero(rows + b, h);
  cache.z.resize(rows, h);
  cache.r.resize(rows, h);
  cache.n.resize(rows, h);

  for (Index t = 0; t < static_cast<Index>(steps); ++t) {
    const MatrixXd hp = cache.states.middleRows(t * b, b);
    const ArrayXXd z = sigmoid((gz.middleRows(t * b, b) + hp * w.U_z.transpose()).array());
    const ArrayXXd r = sigmoid((gr.middleRows(t * b, b) + hp * w.U_r.transpose()).array());
    const MatrixXd q = (r * hp.array()).matrix();
    const ArrayXXd n = (gh.middleRows(t * b, b) + q * w.U_h.transpose()).array().tanh();
    cache.states.middleRows((t + 1) * b, b) = ((1.0 - z) * hp.array() + z * n).matrix();
    cache.z.middleRows(t * b, b) = z.matrix();
    cache.r.middleRows(t * b, b) = r.matrix();
    cache.n.middleRows(t * b, b) = n.matrix();
  }
}

// Backpropagates through one GRU layer. `d_states` is (steps * B) x H: the
// loss gradient w.r.t. each emitted hidden state. Returns the gradient w.r.t.
// the layer input when `need_input_grad` is set.
MatrixXd gru_backward(const MatrixXd& x, const MatrixXd& d_states, std::size_t steps,
                      std::size_t batch, const GruWeights& w, const GruCache& cache,
                      ParamSet& grads, std::string_view layer, bool need_input_grad) {
  const Index b = static_cast<Index>(batch);
  const Index h = w.U_z.rows();
  const Index rows = static_cast<Index>(steps) * b;

  MatrixXd daz(rows, h), dar(rows, h), dah(rows, h);
  MatrixXd duz = MatrixXd::Zero(h, h), dur = MatrixXd::Zero(h, h), duh = MatrixXd::Zero(h, h);
  MatrixXd dh_next = MatrixXd::Zero(b, h);

  for (Index t = static_cast<Index>(steps) - 1; t >= 0; --t) {
    const MatrixXd hp = cache.states.middleRows(t * b, b);
    const ArrayXXd z = cache.z.middleRows(t * b, b).array();
    const ArrayXXd r = cache.r.middleRows(t * b, b).array();
    const ArrayXXd n = cache.n.middleRows(t * b, b).array();

    const ArrayXXd dh = (d_states.middleRows(t * b, b) + dh_next).array();
    MatrixXd dhp = (dh * (1.0 - z)).matrix();

    const MatrixXd dah_t = (dh * z * (1.0 - n.square())).matrix();
    const MatrixXd q = (r * hp.array()).matrix();
    duh.noalias() += dah_t.transpose() * q;
    const MatrixXd dq = dah_t * w.U_h;
    dhp.array() += dq.array() * r;

    const MatrixXd dar_t = (dq.array() * hp.array() * r * (1.0 - r)).matrix();
    dur.noalias() += dar_t.transpose() * hp;
    dhp.noalias() += dar_t * w.U_r;

    const MatrixXd daz_t = (dh * (n - hp.array()) * z * (1.0 - z)).matrix();
    duz.noalias() += daz_t.transpose() * hp;
    dhp.noalias() += daz_t * w.U_z;

    daz.middleRows(t * b, b) = daz_t;
    dar.middleRows(t * b, b) = dar_t;
    dah.middleRows(t * b, b) = dah_t;
    dh_next = std::move(dhp);
  }

  as_matrix(grads.get(tensor_name(layer, "U_z"))) = duz;
  as_matrix(grads.get(tensor_name(layer, "U_r"))) = dur;
  as_matrix(grads.get(tensor_name(layer, "U_h"))) = duh;
  as_matrix(grads.get(tensor_name(layer, "W_z"))) = daz.transpose() * x;
  as_matrix(grads.get(tensor_name(layer, "W_r"))) = dar.transpose() * x;
  as_matrix(grads.get(tensor_name(layer, "W_h"))) = dah.transpose() * x;
  as_vector(grads.get(tensor_name(layer, "b_z"))) = daz.colwise().sum().transpose();
  as_vector(grads.get(tensor_name(layer, "b_r"))) = dar.colwise().sum().transpose();
  as_vector(grads.get(tensor_name(layer, "b_h"))) = dah.colwise().sum().transpose();

  if (!need_input_grad) return {};
  MatrixXd dx = daz * w.W_z;
  dx.noalias() += dar * w.W_r;
  dx.noalias() += dah * w.W_h;
  return dx;
}

}  // namespace

void ModelConfig::validate() const {
  IssueList issues;
  issues.check(input_dim >= 1, "model.input_dim must be >= 1");
  issues.check(gru1_units >= 1, "model.gru1_units must be >= 1");
  issues.check(gru2_units >= 1, "model.gru2_units must be >= 1");
  issues.check(dense_hidden >= 1, "model.dense_hidden must be >= 1");
  issues.check(dropout_rate >= 0.0 && dropout_rate < 1.0, "model.dropout_rate must be in [0, 1)");
  issues.check(bn_momentum >= 0.0 && bn_momentum <= 1.0, "model.bn_momentum must be in [0, 1]");
  issues.check(bn_epsilon > 0.0, "model.bn_epsilon must be > 0");
  issues.check(learning_rate > 0.0, "model.learning_rate must be > 0");
  issues.check(weight_decay >= 0.0, "model.weight_decay must be >= 0");
  issues.check(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "model.adam_beta1 must be in [0, 1)");
  issues.check(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "model.adam_beta2 must be in [0, 1)");
  issues.check(adam_epsilon > 0.0, "model.adam_epsilon must be > 0");
  issues.check(batch_size >= 2, "model.batch_size must be >= 2");
  issues.throw_if_any();
}

std::uint64_t ModelConfig::architecture_hash() const noexcept {
  const std::string key = "fscl-gru2/" + std::to_string(input_dim) + "/" +
                          std::to_string(gru1_units) + "/" + std::to_string(gru2_units) + "/" +
                          std::to_string(dense_hidden);
  return fnv1a64(key);
}

ParamSet make_param_layout(const ModelConfig& config) {
  const auto in = static_cast<std::uint32_t>(config.input_dim);
  const auto h1 = static_cast<std::uint32_t>(config.gru1_units);
  const auto h2 = static_cast<std::uint32_t>(config.gru2_units);
  const auto d = static_cast<std::uint32_t>(config.dense_hidden);
  ParamSet p;
  add_gru_layer(p, "gru1", in, h1);
  add_gru_layer(p, "gru2", h1, h2);
  p.add("bn/beta", {h2}, ParamKind::Norm);
  p.add("bn/gamma", {h2}, ParamKind::Norm);
  p.add("bn/running_mean", {h2}, ParamKind::Buffer);
  p.add("bn/running_var", {h2}, ParamKind::Buffer);
  p.add("dense1/bias", {d}, ParamKind::Bias);
  p.add("dense1/weight", {d, h2}, ParamKind::Weight);
  p.add("dense2/bias", {1}, ParamKind::Bias);
  p.add("dense2/weight", {1, d}, ParamKind::Weight);
  return p;
}

ParamSet init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParamSet p = make_param_layout(config);
  Rng rng(seed);
  for (auto& t : p) {
    const std::string_view name = t.name;
    const auto leaf = name.substr(name.find('/') + 1);
    if (leaf.starts_with("U_")) {
      orthogonal(t, rng);
    } else if (leaf.starts_with("W_") || leaf == "weight") {
      xavier_uniform(t, rng);
    } else if (leaf == "gamma" || leaf == "running_var") {
      std::fill(t.values.begin(), t.values.end(), 1.0);
    }
  }
  return p;
}

GruWeights gru_weights(const ParamSet& params, std::string_view layer) {
  auto m = [&](const char* n) { return as_matrix(params.get(tensor_name(layer, n))); };
  auto v = [&](const char* n) { return as_vector(params.get(tensor_name(layer, n))); };
  return GruWeights{m("W_z"), m("W_r"), m("W_h"), m("U_z"), m("U_r"),
                    m("U_h"), v("b_z"), v("b_r"), v("b_h")};
}

Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GruWeights& w) {
  if (x.size() != w.W_z.cols() || h_prev.size() != w.U_z.rows())
    throw ShapeError("gru_cell_forward: input or state size does not match layer weights");
  const Eigen::ArrayXd z =
      (1.0 + (-(w.W_z * x + w.U_z * h_prev + w.b_z)).array().exp()).inverse();
  const Eigen::ArrayXd r =
      (1.0 + (-(w.W_r * x + w.U_r * h_prev + w.b_r)).array().exp()).inverse();
  const Eigen::VectorXd q = (r * h_prev.array()).matrix();
  const Eigen::ArrayXd n = (w.W_h * x + w.U_h * q + w.b_h).array().tanh();
  return ((1.0 - z) * h_prev.array() + z * n).matrix();
}

Batch make_batch(const WindowDataset& data, std::span<const std::size_t> indices) {
  Batch batch;
  batch.batch_size = indices.size();
  batch.steps = data.width;
  const Index b = static_cast<Index>(indices.size());
  batch.inputs = MatrixXd::Zero(static_cast<Index>(data.width) * b, static_cast<Index>(data.dim));
  batch.labels.resize(b);
  for (Index i = 0; i < b; ++i) {
    const Sample& s = data.samples.at(indices[static_cast<std::size_t>(i)]);
    for (std::size_t t = 0; t < data.width; ++t) {
      if (s.features.column[t] >= 0)
        batch.inputs(static_cast<Index>(t) * b + i, s.features.column[t]) = s.features.value[t];
    }
    batch.labels(i) = static_cast<double>(s.label);
  }
  return batch;
}

ForwardResult forward(const Batch& batch, const ParamSet& params, const ModelConfig& config,
                      const ForwardOptions& options) {
  const Index b = static_cast<Index>(batch.batch_size);
  if (b == 0) throw ShapeError("forward: empty batch");
  if (batch.inputs.rows() != static_cast<Index>(batch.steps) * b ||
      batch.inputs.cols() != static_cast<Index>(config.input_dim))
    throw ShapeError("forward: batch is " + std::to_string(batch.inputs.rows()) + "x" +
                     std::to_string(batch.inputs.cols()) + ", model expects input_dim " +
                     std::to_string(config.input_dim));
  const bool train = options.mode == Mode::Train;
  if (train && b < 2)
    throw Error("forward: Train mode needs a batch of at least 2 samples for batch norm");

  ForwardResult out;
  ForwardCache& c = out.cache;
  c.batch = &batch;
  c.mode = options.mode;

  const GruWeights w1 = gru_weights(params, "gru1");
  const GruWeights w2 = gru_weights(params, "gru2");
  if (w1.W_z.cols() != batch.inputs.cols())
    throw ShapeError("forward: parameter input dimension does not match batch");

  gru_forward(batch.inputs, batch.steps, batch.batch_size, w1, c.gru1);
  const MatrixXd h1_seq = c.gru1.states.bottomRows(static_cast<Index>(batch.steps) * b);
  gru_forward(h1_seq, batch.steps, batch.batch_size, w2, c.gru2);
  c.bn_in = c.gru2.states.bottomRows(b);

  const auto gamma = as_vector(params.get("bn/gamma"));
  const auto beta = as_vector(params.get("bn/beta"));
  if (train) {
    c.bn_mean = c.bn_in.colwise().mean();
    c.bn_var = (c.bn_in.rowwise() - c.bn_mean).array().square().colwise().mean();
  } else {
    c.bn_mean = as_vector(params.get("bn/running_mean")).transpose();
    c.bn_var = as_vector(params.get("bn/running_var")).transpose();
  }
  c.bn_inv_std = (c.bn_var.array() + config.bn_epsilon).rsqrt().matrix();
  c.bn_hat = ((c.bn_in.rowwise() - c.bn_mean).array().rowwise() * c.bn_inv_std.array()).matrix();
  c.bn_out = ((c.bn_hat.array().rowwise() * gamma.transpose().array()).rowwise() +
              beta.transpose().array())
                 .matrix();

  const Index h2 = c.bn_out.cols();
  if (options.dropout_mask != nullptr) {
    if (options.dropout_mask->rows() != b || options.dropout_mask->cols() != h2)
      throw ShapeError("forward: dropout mask shape mismatch");
    c.mask = *options.dropout_mask;
  } else if (train && config.dropout_rate > 0.0) {
    if (options.rng == nullptr) throw Error("forward: Train mode with dropout requires an rng");
    std::bernoulli_distribution keep(1.0 - config.dropout_rate);
    const double scale = 1.0 / (1.0 - config.dropout_rate);
    c.mask.resize(b, h2);
    for (Index j = 0; j < h2; ++j)
      for (Index i = 0; i < b; ++i) c.mask(i, j) = keep(*options.rng) ? scale : 0.0;
  } else {
    c.mask = MatrixXd::Ones(b, h2);
  }
  c.dropped = c.bn_out.cwiseProduct(c.mask);

  const auto w_d1 = as_matrix(params.get("dense1/weight"));
  const auto b_d1 = as_vector(params.get("dense1/bias"));
  c.dense1_out = ((c.dropped * w_d1.transpose()).rowwise() + b_d1.transpose()).array().tanh();

  const auto w_d2 = as_matrix(params.get("dense2/weight"));
  const double b_d2 = params.get("dense2/bias").values[0];
  const Eigen::VectorXd logits = (c.dense1_out * w_d2.transpose()).col(0).array() + b_d2;
  // Keep probabilities strictly inside (0, 1) even for saturated logits.
  constexpr double kEdge = 1e-15;
  c.probs = (1.0 / (1.0 + (-logits.array()).exp())).cwiseMax(kEdge).cwiseMin(1.0 - kEdge);
  out.probs = c.probs;
  return out;
}

double bce_loss(std::span<const double> probs, std::span<const double> labels) {
  if (probs.size() != labels.size())
    throw ShapeError("bce_loss: " + std::to_string(probs.size()) + " probabilities vs " +
                     std::to_string(labels.size()) + " labels");
  if (probs.empty()) throw ShapeError("bce_loss: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    total -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

double bce_loss(const Eigen::VectorXd& probs, const Eigen::VectorXd& labels) {
  return bce_loss(std::span<const double>(probs.data(), static_cast<std::size_t>(probs.size())),
                  std::span<const double>(labels.data(), static_cast<std::size_t>(labels.size())));
}

ParamSet backward(const ForwardCache& c, const ParamSet& params, const ModelConfig& config,
                  const Eigen::VectorXd& labels) {
  if (c.batch == nullptr || c.mode != Mode::Train)
    throw Error("backward: requires a cache from a Train-mode forward pass");
  const Index b = static_cast<Index>(c.batch->batch_size);
  if (labels.size() != b) throw ShapeError("backward: label count does not match cache batch");
  (void)config;

  ParamSet grads = params.zeros_like();

  // Sigmoid + BCE; clamped probabilities have zero slope.
  Eigen::VectorXd d_logit(b);
  for (Index i = 0; i < b; ++i) {
    const double p = c.probs(i);
    d_logit(i) = (p < kProbClamp || p > 1.0 - kProbClamp)
                     ? 0.0
                     : (p - labels(i)) / static_cast<double>(b);
  }

  const auto w_d2 = as_matrix(params.get("dense2/weight"));
  as_matrix(grads.get("dense2/weight")) = d_logit.transpose() * c.dense1_out;
  grads.get("dense2/bias").values[0] = d_logit.sum();

  const MatrixXd d_a1 =
      ((d_logit * w_d2).array() * (1.0 - c.dense1_out.array().square())).matrix();
  const auto w_d1 = as_matrix(params.get("dense1/weight"));
  as_matrix(grads.get("dense1/weight")) = d_a1.transpose() * c.dropped;
  as_vector(grads.get("dense1/bias")) = d_a1.colwise().sum().transpose();

  const MatrixXd d_bn_out = (d_a1 * w_d1).cwiseProduct(c.mask);
  const auto gamma = as_vector(params.get("bn/gamma"));
  as_vector(grads.get("bn/gamma")) = d_bn_out.cwiseProduct(c.bn_hat).colwise().sum().transpose();
  as_vector(grads.get("bn/beta")) = d_bn_out.colwise().sum().transpose();

  const MatrixXd d_hat = (d_bn_out.array().rowwise() * gamma.transpose().array()).matrix();
  const Eigen::RowVectorXd sum_d_hat = d_hat.colwise().sum();
  const Eigen::RowVectorXd sum_d_hat_x = d_hat.cwiseProduct(c.bn_hat).colwise().sum();
  const double inv_b = 1.0 / static_cast<double>(b);
  MatrixXd d_bn_in =
      ((d_hat * static_cast<double>(b)).rowwise() - sum_d_hat).array() -
      (c.bn_hat.array().rowwise() * sum_d_hat_x.array());
  d_bn_in = (d_bn_in.array().rowwise() * (c.bn_inv_std.array() * inv_b)).matrix();

  const std::size_t steps = c.batch->steps;
  const Index rows = static_cast<Index>(steps) * b;
  const GruWeights w1 = gru_weights(params, "gru1");
  const GruWeights w2 = gru_weights(params, "gru2");

  MatrixXd d_h2_seq = MatrixXd::Zero(rows, d_bn_in.cols());
  d_h2_seq.bottomRows(b) = d_bn_in;
  const MatrixXd h1_seq = c.gru1.states.bottomRows(rows);
  const MatrixXd d_h1_seq =
      gru_backward(h1_seq, d_h2_seq, steps, c.batch->batch_size, w2, c.gru2, grads, "gru2", true);
  gru_backward(c.batch->inputs, d_h1_seq, steps, c.batch->batch_size, w1, c.gru1, grads, "gru1",
               false);
  return grads;
}

void update_batchnorm_stats(ParamSet& params, const ForwardCache& cache, double momentum) {
  if (cache.mode != Mode::Train) return;
  auto mean = as_vector(params.get("bn/running_mean"));
  auto var = as_vector(params.get("bn/running_var"));
  mean = momentum * mean + (1.0 - momentum) * cache.bn_mean.transpose();
  var = momentum * var + (1.0 - momentum) * cache.bn_var.transpose();
}

Eigen::VectorXd predict(const WindowDataset& data, const ParamSet& params,
                        const ModelConfig& config, std::size_t chunk) {
  Eigen::VectorXd out(static_cast<Index>(data.size()));
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t end = std::min(data.size(), start + chunk);
    idx.resize(end - start);
    for (std::size_t i = start; i < end; ++i) idx[i - start] = i;
    const Batch batch = make_batch(data, idx);
    const ForwardResult r = forward(batch, params, config, ForwardOptions{Mode::Eval});
    out.segment(static_cast<Index>(start), static_cast<Index>(end - start)) = r.probs;
  }
  return out;
}

}  // namespace fscl::nn

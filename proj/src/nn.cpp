#include "wifiloc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wifiloc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

namespace nn {

std::vector<TensorView> trainable_tensors(Params& p) {
  std::vector<TensorView> out;
  auto add = [&out](const std::string& name, double* data, size_t size) {
    out.push_back({name, data, size});
  };
  auto add_bn = [&](const std::string& name, BatchNorm& bn) {
    add(name + ".gamma", bn.gamma.data(), static_cast<size_t>(bn.gamma.size()));
    add(name + ".beta", bn.beta.data(), static_cast<size_t>(bn.beta.size()));
  };
  auto add_dense = [&](const std::string& name, Dense& d) {
    add(name + ".w", d.w.data(), static_cast<size_t>(d.w.size()));
    add(name + ".b", d.b.data(), static_cast<size_t>(d.b.size()));
  };
  auto add_lstm = [&](const std::string& name, Lstm& l) {
    add(name + ".w_input", l.w_input.data(), static_cast<size_t>(l.w_input.size()));
    add(name + ".w_recurrent", l.w_recurrent.data(),
        static_cast<size_t>(l.w_recurrent.size()));
    add(name + ".bias", l.bias.data(), static_cast<size_t>(l.bias.size()));
  };
  add_bn("bn1", p.bn1);
  add_dense("dn1", p.dn1);
  add_bn("bn2", p.bn2);
  add_dense("dn2", p.dn2);
  add_bn("bn3", p.bn3);
  add_lstm("lstm1", p.lstm1);
  add_bn("bn4", p.bn4);
  add_lstm("lstm2", p.lstm2);
  add_bn("bn5", p.bn5);
  add_lstm("lstm3", p.lstm3);
  add_bn("bn6", p.bn6);
  add_dense("xy", p.xy);
  return out;
}

namespace {

MatrixXd glorot(Index rows, Index cols, Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  MatrixXd m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-limit, limit);
  return m;
}

Dense make_dense(Index in, Index out, Rng& rng) {
  return {glorot(out, in, in, out, rng), VectorXd::Zero(out)};
}

BatchNorm make_bn(Index channels) {
  return {VectorXd::Ones(channels), VectorXd::Zero(channels), VectorXd::Zero(channels),
          VectorXd::Ones(channels)};
}

Lstm make_lstm(Index in, Index hidden, Rng& rng) {
  Lstm l;
  l.w_input = glorot(4 * hidden, in, in, 4 * hidden, rng);
  l.w_recurrent = glorot(4 * hidden, hidden, hidden, 4 * hidden, rng);
  l.bias = VectorXd::Zero(4 * hidden);
  l.bias.segment(hidden, hidden).setOnes();  // unit forget-gate bias
  return l;
}

// ---------------------------------------------------------------------------
// Layer forward/backward. All caches hold what the matching backward needs.

struct BnCache {
  MatrixXd xhat;
  RowVectorXd inv_std;
};

MatrixXd bn_forward_train(const BatchNorm& bn, const MatrixXd& x, BnCache& cache,
                          BatchNorm* stats_sink) {
  const double batch = static_cast<double>(x.rows());
  const RowVectorXd mean = x.colwise().mean();
  const MatrixXd centered = x.rowwise() - mean;
  const RowVectorXd var = centered.array().square().colwise().sum() / batch;
  cache.inv_std = (var.array() + BatchNorm::kEps).rsqrt();
  cache.xhat = centered.array().rowwise() * cache.inv_std.array();
  if (stats_sink) {
    stats_sink->moving_mean = BatchNorm::kMomentum * stats_sink->moving_mean +
                              (1.0 - BatchNorm::kMomentum) * mean.transpose();
    stats_sink->moving_var = BatchNorm::kMomentum * stats_sink->moving_var +
                             (1.0 - BatchNorm::kMomentum) * var.transpose();
  }
  return (cache.xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
         bn.beta.transpose().array();
}

MatrixXd bn_backward(const BatchNorm& bn, const BnCache& cache, const MatrixXd& dy,
                     BatchNorm& grad) {
  const double batch = static_cast<double>(dy.rows());
  grad.gamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix().transpose();
  grad.beta += dy.colwise().sum().transpose();
  const MatrixXd dxhat = dy.array().rowwise() * bn.gamma.transpose().array();
  const RowVectorXd sum_dxhat = dxhat.colwise().sum();
  const RowVectorXd sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum();
  MatrixXd dx = batch * dxhat;
  dx.rowwise() -= sum_dxhat;
  dx.array() -= cache.xhat.array().rowwise() * sum_dxhat_xhat.array();
  dx.array().rowwise() *= (cache.inv_std / batch).array();
  return dx;
}

MatrixXd bn_forward_inference(const BatchNorm& bn, const MatrixXd& x) {
  const RowVectorXd inv_std =
      (bn.moving_var.transpose().array() + BatchNorm::kEps).rsqrt();
  MatrixXd xhat = (x.rowwise() - bn.moving_mean.transpose());
  xhat.array().rowwise() *= inv_std.array();
  return (xhat.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
         bn.beta.transpose().array();
}

struct DenseCache {
  MatrixXd input;
  MatrixXd pre;  // pre-activation, kept only when the layer has ReLU
};

MatrixXd dense_forward(const Dense& d, const MatrixXd& x, bool relu, DenseCache& cache) {
  cache.input = x;
  MatrixXd z = x * d.w.transpose();
  z.rowwise() += d.b.transpose();
  if (!relu) return z;
  cache.pre = z;
  return z.cwiseMax(0.0);
}

MatrixXd dense_backward(const Dense& d, const DenseCache& cache, bool relu,
                        const MatrixXd& dy, Dense& grad) {
  MatrixXd dz = dy;
  if (relu) dz = dz.array() * (cache.pre.array() > 0.0).cast<double>();
  grad.w += dz.transpose() * cache.input;
  grad.b += dz.colwise().sum().transpose();
  return dz * d.w;
}

struct LstmCache {
  MatrixXd input;
  MatrixXd gate_i, gate_g, gate_o;  // post-nonlinearity
  MatrixXd cell_tanh;               // tanh(c), c = i .* g (zero initial state)
};

MatrixXd lstm_forward(const Lstm& l, const MatrixXd& x, LstmCache& cache) {
  const Index hidden = l.bias.size() / 4;
  cache.input = x;
  MatrixXd z = x * l.w_input.transpose();
  z.rowwise() += l.bias.transpose();
  const auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  cache.gate_i = z.middleCols(0, hidden).unaryExpr(sigmoid);
  cache.gate_g = z.middleCols(2 * hidden, hidden).array().tanh();
  cache.gate_o = z.middleCols(3 * hidden, hidden).unaryExpr(sigmoid);
  cache.cell_tanh = (cache.gate_i.array() * cache.gate_g.array()).tanh();
  return cache.gate_o.array() * cache.cell_tanh.array();
}

MatrixXd lstm_backward(const Lstm& l, const LstmCache& cache, const MatrixXd& dh,
                       Lstm& grad) {
  const Index hidden = l.bias.size() / 4;
  const Index batch = dh.rows();
  const MatrixXd d_o = dh.array() * cache.cell_tanh.array();
  const MatrixXd dz_o =
      d_o.array() * cache.gate_o.array() * (1.0 - cache.gate_o.array());
  const MatrixXd dc =
      dh.array() * cache.gate_o.array() * (1.0 - cache.cell_tanh.array().square());
  const MatrixXd d_i = dc.array() * cache.gate_g.array();
  const MatrixXd dz_i = d_i.array() * cache.gate_i.array() * (1.0 - cache.gate_i.array());
  const MatrixXd d_g = dc.array() * cache.gate_i.array();
  const MatrixXd dz_g = d_g.array() * (1.0 - cache.gate_g.array().square());

  MatrixXd dz = MatrixXd::Zero(batch, 4 * hidden);
  dz.middleCols(0, hidden) = dz_i;
  // Forget gate sees a zero initial cell state: its gradient vanishes.
  dz.middleCols(2 * hidden, hidden) = dz_g;
  dz.middleCols(3 * hidden, hidden) = dz_o;

  grad.w_input += dz.transpose() * cache.input;
  grad.bias += dz.colwise().sum().transpose();
  // w_recurrent multiplies the zero initial hidden state; gradient stays zero.
  return dz * l.w_input;
}

struct ForwardCache {
  BnCache bn1, bn2, bn3, bn4, bn5, bn6;
  DenseCache dn1, dn2, xy;
  LstmCache lstm1, lstm2, lstm3;
  MatrixXd drop1_in, drop2_in, drop3_in;  // retained for mask backward
  MatrixXd output;
};

MatrixXd dropout_apply(const MatrixXd& x, const MatrixXd& mask) {
  return x.array() * mask.array();
}

// Full training-mode forward. stats holds the live model parameters when the
// caller wants moving statistics refreshed; null during gradient checks.
MatrixXd forward_train(const Params& p, const MatrixXd& x, const DropoutMasks& masks,
                       ForwardCache& cache, Params* stats) {
  MatrixXd h = bn_forward_train(p.bn1, x, cache.bn1, stats ? &stats->bn1 : nullptr);
  h = dense_forward(p.dn1, h, true, cache.dn1);
  h = bn_forward_train(p.bn2, h, cache.bn2, stats ? &stats->bn2 : nullptr);
  cache.drop1_in = h;
  h = dropout_apply(h, masks.m1);
  h = dense_forward(p.dn2, h, true, cache.dn2);
  // reshape to a length-1 sequence: layout is unchanged
  h = bn_forward_train(p.bn3, h, cache.bn3, stats ? &stats->bn3 : nullptr);
  h = lstm_forward(p.lstm1, h, cache.lstm1);
  cache.drop2_in = h;
  h = dropout_apply(h, masks.m2);
  h = bn_forward_train(p.bn4, h, cache.bn4, stats ? &stats->bn4 : nullptr);
  h = lstm_forward(p.lstm2, h, cache.lstm2);
  cache.drop3_in = h;
  h = dropout_apply(h, masks.m3);
  h = bn_forward_train(p.bn5, h, cache.bn5, stats ? &stats->bn5 : nullptr);
  h = lstm_forward(p.lstm3, h, cache.lstm3);
  h = bn_forward_train(p.bn6, h, cache.bn6, stats ? &stats->bn6 : nullptr);
  cache.output = dense_forward(p.xy, h, false, cache.xy);
  return cache.output;
}

void backward(const Params& p, const ForwardCache& cache, const DropoutMasks& masks,
              const MatrixXd& d_output, Params& grad) {
  MatrixXd d = dense_backward(p.xy, cache.xy, false, d_output, grad.xy);
  d = bn_backward(p.bn6, cache.bn6, d, grad.bn6);
  d = lstm_backward(p.lstm3, cache.lstm3, d, grad.lstm3);
  d = bn_backward(p.bn5, cache.bn5, d, grad.bn5);
  d = dropout_apply(d, masks.m3);
  d = lstm_backward(p.lstm2, cache.lstm2, d, grad.lstm2);
  d = bn_backward(p.bn4, cache.bn4, d, grad.bn4);
  d = dropout_apply(d, masks.m2);
  d = lstm_backward(p.lstm1, cache.lstm1, d, grad.lstm1);
  d = bn_backward(p.bn3, cache.bn3, d, grad.bn3);
  d = dense_backward(p.dn2, cache.dn2, true, d, grad.dn2);
  d = dropout_apply(d, masks.m1);
  d = bn_backward(p.bn2, cache.bn2, d, grad.bn2);
  d = dense_backward(p.dn1, cache.dn1, true, d, grad.dn1);
  bn_backward(p.bn1, cache.bn1, d, grad.bn1);
}

Params zero_like(const Params& p) {
  Params g = p;
  for (auto& view : trainable_tensors(g)) std::fill(view.data, view.data + view.size, 0.0);
  g.bn1.moving_mean.setZero();
  g.bn1.moving_var.setZero();
  g.bn2.moving_mean.setZero();
  g.bn2.moving_var.setZero();
  g.bn3.moving_mean.setZero();
  g.bn3.moving_var.setZero();
  g.bn4.moving_mean.setZero();
  g.bn4.moving_var.setZero();
  g.bn5.moving_mean.setZero();
  g.bn5.moving_var.setZero();
  g.bn6.moving_mean.setZero();
  g.bn6.moving_var.setZero();
  return g;
}

double mse(const MatrixXd& pred, const MatrixXd& target) {
  return (pred - target).squaredNorm() /
         static_cast<double>(pred.rows() * pred.cols());
}

}  // namespace
}  // namespace nn

// ---------------------------------------------------------------------------

NnModel::NnModel(NnArchitecture arch, NnTrainConfig config, uint64_t seed)
    : arch_(arch), config_(config), seed_(seed) {
  if (arch.input_width < 1 || arch.dense1 < 1 || arch.dense2 < 1 || arch.lstm1 < 1 ||
      arch.lstm2 < 1 || arch.lstm3 < 1)
    throw InvalidConfig("layer widths must be positive");
  for (double rate : {arch.dropout1, arch.dropout2, arch.dropout3})
    if (rate < 0.0 || rate >= 1.0) throw InvalidConfig("dropout rate must be in [0, 1)");
  if (config.learning_rate <= 0.0) throw InvalidConfig("learning rate must be positive");
  if (config.batch_size < 1) throw InvalidConfig("batch size must be positive");
  if (config.epochs < 0) throw InvalidConfig("epochs must be non-negative");
  if (config.validation_fraction < 0.0 || config.validation_fraction >= 1.0)
    throw InvalidConfig("validation fraction must be in [0, 1)");
  if (config.input_scale == 0.0) throw InvalidConfig("input scale must be non-zero");
  Rng rng(derive_seed(seed_, 0));
  init_params(rng);
}

void NnModel::init_params(Rng& rng) {
  using namespace nn;
  params_.bn1 = make_bn(arch_.input_width);
  params_.dn1 = make_dense(arch_.input_width, arch_.dense1, rng);
  params_.bn2 = make_bn(arch_.dense1);
  params_.dn2 = make_dense(arch_.dense1, arch_.dense2, rng);
  params_.bn3 = make_bn(arch_.dense2);
  params_.lstm1 = make_lstm(arch_.dense2, arch_.lstm1, rng);
  params_.bn4 = make_bn(arch_.lstm1);
  params_.lstm2 = make_lstm(arch_.lstm1, arch_.lstm2, rng);
  params_.bn5 = make_bn(arch_.lstm2);
  params_.lstm3 = make_lstm(arch_.lstm2, arch_.lstm3, rng);
  params_.bn6 = make_bn(arch_.lstm3);
  params_.xy = make_dense(arch_.lstm3, 2, rng);
}

std::vector<nn::LayerCount> NnModel::parameter_counts() const {
  auto bn_count = [](const std::string& name, Eigen::Index ch) {
    return nn::LayerCount{name, static_cast<size_t>(4 * ch), static_cast<size_t>(2 * ch),
                          static_cast<size_t>(2 * ch)};
  };
  auto dense_count = [](const std::string& name, Eigen::Index in, Eigen::Index out) {
    const auto n = static_cast<size_t>(in * out + out);
    return nn::LayerCount{name, n, n, 0};
  };
  auto lstm_count = [](const std::string& name, Eigen::Index in, Eigen::Index h) {
    const auto n = static_cast<size_t>(4 * (in * h + h * h + h));
    return nn::LayerCount{name, n, n, 0};
  };
  return {
      bn_count("bn1", arch_.input_width),
      dense_count("dn1", arch_.input_width, arch_.dense1),
      bn_count("bn2", arch_.dense1),
      {"do2", 0, 0, 0},
      dense_count("dn2", arch_.dense1, arch_.dense2),
      {"resh", 0, 0, 0},
      bn_count("bn3", arch_.dense2),
      lstm_count("lstm1", arch_.dense2, arch_.lstm1),
      {"do3", 0, 0, 0},
      bn_count("bn4", arch_.lstm1),
      lstm_count("lstm2", arch_.lstm1, arch_.lstm2),
      {"do4", 0, 0, 0},
      bn_count("bn5", arch_.lstm2),
      lstm_count("lstm3", arch_.lstm2, arch_.lstm3),
      bn_count("bn6", arch_.lstm3),
      dense_count("xy", arch_.lstm3, 2),
  };
}

size_t NnModel::total_parameters() const {
  size_t n = 0;
  for (const auto& layer : parameter_counts()) n += layer.params;
  return n;
}

size_t NnModel::trainable_parameters() const {
  size_t n = 0;
  for (const auto& layer : parameter_counts()) n += layer.trainable;
  return n;
}

size_t NnModel::non_trainable_parameters() const {
  size_t n = 0;
  for (const auto& layer : parameter_counts()) n += layer.non_trainable;
  return n;
}

nn::DropoutMasks NnModel::sample_masks(Eigen::Index batch, Rng& rng) const {
  auto sample = [&rng, batch](Eigen::Index width, double rate) {
    MatrixXd m(batch, width);
    if (rate <= 0.0) {
      m.setOnes();
      return m;
    }
    const double keep = 1.0 - rate;
    for (Eigen::Index c = 0; c < width; ++c)
      for (Eigen::Index r = 0; r < batch; ++r)
        m(r, c) = rng.uniform01() < keep ? 1.0 / keep : 0.0;
    return m;
  };
  return {sample(arch_.dense1, arch_.dropout1), sample(arch_.lstm1, arch_.dropout2),
          sample(arch_.lstm2, arch_.dropout3)};
}

double NnModel::training_loss(const MatrixXd& x_mapped, const MatrixXd& targets,
                              const nn::DropoutMasks& masks) const {
  nn::ForwardCache cache;
  const MatrixXd pred = nn::forward_train(params_, x_mapped, masks, cache, nullptr);
  return nn::mse(pred, targets);
}

double NnModel::training_loss_and_gradients(const MatrixXd& x_mapped,
                                            const MatrixXd& targets,
                                            const nn::DropoutMasks& masks,
                                            nn::Params& gradients) const {
  nn::ForwardCache cache;
  const MatrixXd pred = nn::forward_train(params_, x_mapped, masks, cache, nullptr);
  const double loss = nn::mse(pred, targets);
  const MatrixXd d_output =
      2.0 * (pred - targets) / static_cast<double>(pred.rows() * pred.cols());
  nn::backward(params_, cache, masks, d_output, gradients);
  return loss;
}

Eigen::MatrixXd NnModel::map_inputs(const std::vector<FeatureRow>& rows) const {
  MatrixXd x(static_cast<Index>(rows.size()), arch_.input_width);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < arch_.input_width; ++j)
      x(static_cast<Index>(i), j) =
          (rows[i].features[static_cast<size_t>(j)] - config_.input_offset) /
          config_.input_scale;
  return x;
}

Eigen::MatrixXd NnModel::forward_inference(const MatrixXd& x_mapped) const {
  using namespace nn;
  MatrixXd h = bn_forward_inference(params_.bn1, x_mapped);
  DenseCache dc;
  h = dense_forward(params_.dn1, h, true, dc);
  h = bn_forward_inference(params_.bn2, h);
  h = dense_forward(params_.dn2, h, true, dc);
  h = bn_forward_inference(params_.bn3, h);
  LstmCache lc;
  h = lstm_forward(params_.lstm1, h, lc);
  h = bn_forward_inference(params_.bn4, h);
  h = lstm_forward(params_.lstm2, h, lc);
  h = bn_forward_inference(params_.bn5, h);
  h = lstm_forward(params_.lstm3, h, lc);
  h = bn_forward_inference(params_.bn6, h);
  return dense_forward(params_.xy, h, false, dc);
}

void NnModel::fit(const std::vector<FeatureRow>& rows) {
  if (rows.empty()) throw ModelError("nn: no training rows");
  for (const auto& row : rows)
    if (row.features.size() != static_cast<size_t>(arch_.input_width))
      throw ModelError("nn: feature width does not match architecture");

  Rng rng(derive_seed(seed_, 1));
  epoch_train_loss_.clear();
  epoch_val_mpe_.clear();

  const MatrixXd x_all = map_inputs(rows);
  MatrixXd y_all(static_cast<Index>(rows.size()), 2);
  for (size_t i = 0; i < rows.size(); ++i) {
    y_all(static_cast<Index>(i), 0) = rows[i].target.x;
    y_all(static_cast<Index>(i), 1) = rows[i].target.y;
  }

  std::vector<size_t> order(rows.size());
  std::iota(order.begin(), order.end(), size_t{0});
  rng.shuffle(order);
  const size_t n_val = static_cast<size_t>(
      std::llround(config_.validation_fraction * static_cast<double>(rows.size())));
  std::vector<size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());
  if (train_idx.empty()) {
    train_idx = std::move(val_idx);
    val_idx.clear();
  }

  // Adam state.
  nn::Params grads = nn::zero_like(params_);
  nn::Params m_state = nn::zero_like(params_);
  nn::Params v_state = nn::zero_like(params_);
  auto grad_views = nn::trainable_tensors(grads);
  auto m_views = nn::trainable_tensors(m_state);
  auto v_views = nn::trainable_tensors(v_state);
  auto p_views = nn::trainable_tensors(params_);
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  long step = 0;

  double best_val = std::numeric_limits<double>::infinity();
  nn::Params best_params = params_;
  int since_best = 0;

  auto gather = [&](const std::vector<size_t>& idx, size_t lo, size_t hi, MatrixXd& xb,
                    MatrixXd& yb) {
    xb.resize(static_cast<Index>(hi - lo), arch_.input_width);
    yb.resize(static_cast<Index>(hi - lo), 2);
    for (size_t i = lo; i < hi; ++i) {
      xb.row(static_cast<Index>(i - lo)) = x_all.row(static_cast<Index>(idx[i]));
      yb.row(static_cast<Index>(i - lo)) = y_all.row(static_cast<Index>(idx[i]));
    }
  };

  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t lo = 0; lo < train_idx.size();
         lo += static_cast<size_t>(config_.batch_size)) {
      const size_t hi =
          std::min(train_idx.size(), lo + static_cast<size_t>(config_.batch_size));
      MatrixXd xb, yb;
      gather(train_idx, lo, hi, xb, yb);
      const auto masks = sample_masks(xb.rows(), rng);

      nn::ForwardCache cache;
      const MatrixXd pred = nn::forward_train(params_, xb, masks, cache, &params_);
      const double loss = nn::mse(pred, yb);
      if (!std::isfinite(loss))
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + ", loss " + std::to_string(loss));
      const MatrixXd d_output =
          2.0 * (pred - yb) / static_cast<double>(pred.rows() * pred.cols());
      for (auto& view : grad_views) std::fill(view.data, view.data + view.size, 0.0);
      nn::backward(params_, cache, masks, d_output, grads);

      ++step;
      const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (size_t t = 0; t < p_views.size(); ++t) {
        double* p = p_views[t].data;
        double* g = grad_views[t].data;
        double* m = m_views[t].data;
        double* v = v_views[t].data;
        for (size_t k = 0; k < p_views[t].size; ++k) {
          m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
          v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
          p[k] -= config_.learning_rate * (m[k] / corr1) /
                  (std::sqrt(v[k] / corr2) + adam_eps);
        }
      }
      epoch_loss += loss;
      ++batches;
    }
    epoch_train_loss_.push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);

    if (!val_idx.empty()) {
      MatrixXd xv, yv;
      gather(val_idx, 0, val_idx.size(), xv, yv);
      const MatrixXd pv = forward_inference(xv);
      double err = 0.0;
      for (Index i = 0; i < pv.rows(); ++i)
        err += std::hypot(pv(i, 0) - yv(i, 0), pv(i, 1) - yv(i, 1));
      const double val_mpe = err / static_cast<double>(pv.rows());
      epoch_val_mpe_.push_back(val_mpe);
      if (val_mpe < best_val) {
        best_val = val_mpe;
        best_params = params_;
        since_best = 0;
      } else if (++since_best >= config_.early_stop_patience &&
                 config_.early_stop_patience > 0) {
        params_ = best_params;
        break;
      }
    }
  }
  if (!val_idx.empty() && best_val < std::numeric_limits<double>::infinity())
    params_ = best_params;
  fitted_ = true;
}

Point2 NnModel::predict(std::span<const double> features) const {
  if (!fitted_) throw NotFitted();
  check_width(features.size());
  MatrixXd x(1, arch_.input_width);
  for (int j = 0; j < arch_.input_width; ++j)
    x(0, j) = (features[static_cast<size_t>(j)] - config_.input_offset) / config_.input_scale;
  const MatrixXd pred = forward_inference(x);
  return {pred(0, 0), pred(0, 1)};
}

}  // namespace wifiloc

#include "spectral/cnn.hpp"

#include "spectral/error.hpp"
#include "spectral/layers.hpp"

#include <cmath>
#include <numeric>

namespace spectral {

void CnnConfig::validate() const {
  for (const auto& block : conv_blocks) {
    if (block.out_channels < 1) throw ArgumentError("conv block needs >= 1 output channel");
    if (block.kernel_size < 1) throw ArgumentError("conv kernel_size must be >= 1");
    if (block.pool_size < 1) throw ArgumentError("pool_size must be >= 1");
  }
  for (int width : dense_hidden) {
    if (width < 1) throw ArgumentError("dense layer width must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ArgumentError("dropout_rate must be in [0, 1)");
  }
  if (num_classes < 2) throw ArgumentError("num_classes must be >= 2");
  if (!(learning_rate >= 0.0)) throw ArgumentError("learning_rate must be >= 0");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0)) {
    throw ArgumentError("Adam betas must be in [0, 1) and epsilon > 0");
  }
}

BatchLoss softmax_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                                const std::vector<double>& class_weights) {
  const Eigen::Index n = logits.rows();
  if (static_cast<std::size_t>(n) != labels.size() || n == 0) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(n) + " logit rows for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (!class_weights.empty() && class_weights.size() != static_cast<std::size_t>(logits.cols())) {
    throw ShapeError("softmax_cross_entropy: class weight count mismatch");
  }
  BatchLoss out{0.0, Eigen::MatrixXd(n, logits.cols())};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) throw ArgumentError("label out of range");
    const double w = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
    const double top = logits.row(i).maxCoeff();
    const double log_sum = top + std::log((logits.row(i).array() - top).exp().sum());
    out.value += w * (log_sum - logits(i, y));
    out.logit_grad.row(i) = (logits.row(i).array() - log_sum).exp().matrix();
    out.logit_grad(i, y) -= 1.0;
    out.logit_grad.row(i) *= w;
  }
  out.value /= static_cast<double>(n);
  out.logit_grad /= static_cast<double>(n);
  return out;
}

std::vector<double> inverse_frequency_weights(const std::vector<int>& labels, int num_classes) {
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (int y : labels) counts.at(static_cast<std::size_t>(y)) += 1.0;
  std::vector<double> weights(counts.size(), 0.0);
  const double n = static_cast<double>(labels.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) weights[c] = n / (num_classes * counts[c]);
  }
  return weights;
}

CnnModel::CnnModel(CnnConfig config, Eigen::Index input_length)
    : config_(std::move(config)), input_length_(input_length) {
  config_.validate();
  Eigen::Index channels = 1;
  Eigen::Index length = input_length;
  for (std::size_t i = 0; i < config_.conv_blocks.size(); ++i) {
    const auto& block = config_.conv_blocks[i];
    if (length < block.kernel_size) {
      throw ShapeError("conv block " + std::to_string(i) + ": length " + std::to_string(length) +
                       " shorter than kernel " + std::to_string(block.kernel_size));
    }
    length = (length - block.kernel_size + 1) / block.pool_size;
    if (length < 1) {
      throw ShapeError("conv block " + std::to_string(i) + ": pooling leaves no samples");
    }
    conv_.push_back({Tensor3d(block.out_channels, channels, block.kernel_size),
                     Eigen::VectorXd::Zero(block.out_channels)});
    channels = block.out_channels;
  }
  flat_features_ = channels * length;
  Eigen::Index width = flat_features_;
  for (int hidden : config_.dense_hidden) {
    dense_.push_back({Eigen::MatrixXd::Zero(hidden, width), Eigen::VectorXd::Zero(hidden)});
    width = hidden;
  }
  dense_.push_back({Eigen::MatrixXd::Zero(config_.num_classes, width),
                    Eigen::VectorXd::Zero(config_.num_classes)});
  for (const auto& p : std::as_const(*this).parameters()) {
    adam_.m.push_back(Eigen::VectorXd::Zero(p.size()));
    adam_.v.push_back(Eigen::VectorXd::Zero(p.size()));
  }
}

void CnnModel::initialize(Rng& rng) {
  for (auto& layer : conv_) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(layer.weight.channels() * layer.weight.length()));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = stddev * rng.normal();
    layer.bias.setZero();
  }
  for (auto& layer : dense_) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(layer.weight.cols()));
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = stddev * rng.normal();
    layer.bias.setZero();
  }
  for (auto& m : adam_.m) m.setZero();
  for (auto& v : adam_.v) v.setZero();
  adam_.step = 0;
  cache_.reset();
}

std::size_t CnnModel::num_tensors() const { return 2 * (conv_.size() + dense_.size()); }

std::vector<std::string> CnnModel::tensor_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    names.push_back("conv" + std::to_string(i) + ".weight");
    names.push_back("conv" + std::to_string(i) + ".bias");
  }
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    const std::string base = i + 1 == dense_.size() ? "output" : "dense" + std::to_string(i);
    names.push_back(base + ".weight");
    names.push_back(base + ".bias");
  }
  return names;
}

std::vector<std::vector<Eigen::Index>> CnnModel::tensor_shapes() const {
  std::vector<std::vector<Eigen::Index>> shapes;
  for (const auto& layer : conv_) {
    shapes.push_back({layer.weight.batch(), layer.weight.channels(), layer.weight.length()});
    shapes.push_back({layer.bias.size()});
  }
  for (const auto& layer : dense_) {
    shapes.push_back({layer.weight.rows(), layer.weight.cols()});
    shapes.push_back({layer.bias.size()});
  }
  return shapes;
}

std::vector<Eigen::Map<Eigen::VectorXd>> CnnModel::parameters() {
  std::vector<Eigen::Map<Eigen::VectorXd>> out;
  for (auto& layer : conv_) {
    out.emplace_back(layer.weight.data(), layer.weight.size());
    out.emplace_back(layer.bias.data(), layer.bias.size());
  }
  for (auto& layer : dense_) {
    out.emplace_back(layer.weight.data(), layer.weight.size());
    out.emplace_back(layer.bias.data(), layer.bias.size());
  }
  return out;
}

std::vector<Eigen::Map<const Eigen::VectorXd>> CnnModel::parameters() const {
  std::vector<Eigen::Map<const Eigen::VectorXd>> out;
  for (const auto& layer : conv_) {
    out.emplace_back(layer.weight.data(), layer.weight.size());
    out.emplace_back(layer.bias.data(), layer.bias.size());
  }
  for (const auto& layer : dense_) {
    out.emplace_back(layer.weight.data(), layer.weight.size());
    out.emplace_back(layer.bias.data(), layer.bias.size());
  }
  return out;
}

Eigen::Index CnnModel::parameter_count() const {
  Eigen::Index total = 0;
  for (const auto& p : parameters()) total += p.size();
  return total;
}

void CnnModel::check_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != input_length_) {
    throw ShapeError("model expects rows of length " + std::to_string(input_length_) + ", got " +
                     std::to_string(rows.cols()));
  }
}

namespace {

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Eigen::MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  // Row-major draw order so the mask does not depend on storage order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

}  // namespace

Eigen::MatrixXd CnnModel::run(const Eigen::MatrixXd& rows, Rng* rng, Cache* cache,
                              bool stop_at_features) const {
  check_rows(rows);
  const bool use_dropout = rng != nullptr && config_.dropout_rate > 0.0;
  Tensor3d x = Tensor3d::from_rows(rows);
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    Tensor3d act = relu(conv1d_forward(x, conv_[i].weight, conv_[i].bias));
    auto pooled = maxpool1d(act, config_.conv_blocks[i].pool_size);
    if (cache) {
      cache->conv_in.push_back(std::move(x));
      cache->conv_act.push_back(std::move(act));
      cache->pool_argmax.push_back(std::move(pooled.argmax));
    }
    x = std::move(pooled.output);
  }
  if (cache) {
    cache->last_channels = x.channels();
    cache->last_length = x.length();
  }
  Eigen::MatrixXd h = x.flat();
  if (use_dropout && config_.dropout_placement == DropoutPlacement::AfterFeatures) {
    Eigen::MatrixXd mask = dropout_mask(h.rows(), h.cols(), config_.dropout_rate, *rng);
    h.array() *= mask.array();
    if (cache) cache->masks.push_back(std::move(mask));
  }
  for (std::size_t i = 0; i + 1 < dense_.size(); ++i) {
    Eigen::MatrixXd a = relu(dense_forward(h, dense_[i].weight, dense_[i].bias));
    if (cache) {
      cache->dense_in.push_back(h);
      cache->dense_act.push_back(a);
    }
    if (use_dropout && config_.dropout_placement == DropoutPlacement::AfterHidden) {
      Eigen::MatrixXd mask = dropout_mask(a.rows(), a.cols(), config_.dropout_rate, *rng);
      a.array() *= mask.array();
      if (cache) cache->masks.push_back(std::move(mask));
    }
    h = std::move(a);
  }
  if (stop_at_features) return h;
  if (cache) cache->dense_in.push_back(h);
  return dense_forward(h, dense_.back().weight, dense_.back().bias);
}

Eigen::MatrixXd CnnModel::logits(const Eigen::MatrixXd& rows) const {
  return run(rows, nullptr, nullptr, false);
}

Eigen::MatrixXd CnnModel::features(const Eigen::MatrixXd& rows) const {
  return run(rows, nullptr, nullptr, true);
}

Eigen::MatrixXd CnnModel::forward_train(const Eigen::MatrixXd& rows, Rng& rng) {
  Cache cache;
  Eigen::MatrixXd out = run(rows, &rng, &cache, false);
  cache_ = std::move(cache);
  return out;
}

Gradients CnnModel::backward(const Eigen::MatrixXd& logit_grad) {
  if (!cache_) throw StateError("backward called without a cached forward_train pass");
  Cache cache = std::move(*cache_);
  cache_.reset();
  const Eigen::Index batch = cache.dense_in.front().rows();
  if (logit_grad.rows() != batch || logit_grad.cols() != config_.num_classes) {
    throw ShapeError("backward: logit gradient is " + std::to_string(logit_grad.rows()) + "x" +
                     std::to_string(logit_grad.cols()));
  }
  const bool use_dropout = !cache.masks.empty();

  Gradients grads(num_tensors());
  const std::size_t dense_base = 2 * conv_.size();

  Eigen::MatrixXd grad = logit_grad;
  std::size_t mask_index = cache.masks.size();
  for (std::size_t li = dense_.size(); li-- > 0;) {
    const auto& layer = dense_[li];
    if (li + 1 < dense_.size()) {
      if (use_dropout && config_.dropout_placement == DropoutPlacement::AfterHidden) {
        grad.array() *= cache.masks[--mask_index].array();
      }
      grad = (cache.dense_act[li].array() > 0.0).select(grad, 0.0);
    }
    const Eigen::MatrixXd& input = cache.dense_in[li];
    Eigen::MatrixXd gw = grad.transpose() * input;
    grads[dense_base + 2 * li] = gw.reshaped();
    grads[dense_base + 2 * li + 1] = grad.colwise().sum().transpose();
    grad = grad * layer.weight;
  }
  if (use_dropout && config_.dropout_placement == DropoutPlacement::AfterFeatures) {
    grad.array() *= cache.masks[--mask_index].array();
  }

  Tensor3d g(batch, cache.last_channels, cache.last_length);
  g.flat() = grad;
  for (std::size_t li = conv_.size(); li-- > 0;) {
    const Tensor3d& act = cache.conv_act[li];
    Tensor3d g_act = maxpool1d_backward(g, cache.pool_argmax[li], act.length());
    Tensor3d g_pre = relu_backward(std::move(g_act), act);
    auto cg = conv1d_backward(cache.conv_in[li], conv_[li].weight, g_pre);
    grads[2 * li] = cg.weights.values();
    grads[2 * li + 1] = cg.bias;
    g = std::move(cg.input);
  }
  return grads;
}

void adam_step(CnnModel& model, const Gradients& grads) {
  auto params = model.parameters();
  if (grads.size() != params.size()) throw ShapeError("adam_step: gradient tensor count mismatch");
  auto& state = model.adam_state();
  ++state.step;
  const AdamHyper hyper = model.config().adam();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].size()) {
      throw ShapeError("adam_step: gradient " + std::to_string(i) + " has wrong size");
    }
    adam_update(params[i], grads[i], state.m[i], state.v[i], state.step, hyper);
  }
}

Gradients compute_gradients(CnnModel& model, const Eigen::MatrixXd& rows,
                            const std::vector<int>& labels, const std::vector<double>& class_weights,
                            Rng& rng, double* loss) {
  const Eigen::MatrixXd z = model.forward_train(rows, rng);
  const BatchLoss batch_loss = softmax_cross_entropy(z, labels, class_weights);
  if (loss) *loss = batch_loss.value;
  return model.backward(batch_loss.logit_grad);
}

TrainResult train(const CnnConfig& config, const LabeledDataset& train_set, Rng& rng) {
  config.validate();
  const std::size_t n = train_set.size();
  if (n == 0) throw ArgumentError("train: empty training set");
  if (config.num_classes != train_set.num_classes()) {
    throw ArgumentError("train: config has " + std::to_string(config.num_classes) +
                        " classes, dataset has " + std::to_string(train_set.num_classes()));
  }
  if (static_cast<std::size_t>(config.batch_size) > n) {
    throw ArgumentError("train: batch_size " + std::to_string(config.batch_size) +
                        " exceeds training set size " + std::to_string(n));
  }
  TrainResult result{CnnModel(config, train_set.rows.cols()), {}};
  CnnModel& model = result.model;
  model.initialize(rng);
  const std::vector<double> weights = config.loss == LossKind::Weighted
                                          ? inverse_frequency_weights(train_set.labels, config.num_classes)
                                          : std::vector<double>{};

  std::vector<std::size_t> order(n);
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  result.loss_trace.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      Eigen::MatrixXd rows(static_cast<Eigen::Index>(stop - start), train_set.rows.cols());
      std::vector<int> labels;
      labels.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        rows.row(static_cast<Eigen::Index>(i - start)) = train_set.rows.row(static_cast<Eigen::Index>(order[i]));
        labels.push_back(train_set.labels[order[i]]);
      }
      double loss = 0.0;
      const Gradients grads = compute_gradients(model, rows, labels, weights, rng, &loss);
      adam_step(model, grads);
      epoch_loss += loss * static_cast<double>(stop - start);
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

Prediction predict(const CnnModel& model, const Eigen::MatrixXd& rows) {
  const Eigen::MatrixXd z = model.logits(rows);
  Prediction out{std::vector<int>(static_cast<std::size_t>(z.rows())), softmax_rows(z)};
  for (Eigen::Index i = 0; i < z.rows(); ++i) out.classes[static_cast<std::size_t>(i)] = argmax(z.row(i));
  return out;
}

}  // namespace spectral

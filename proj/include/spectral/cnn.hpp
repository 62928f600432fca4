#pragma once

#include "spectral/adam.hpp"
#include "spectral/dataset.hpp"
#include "spectral/rng.hpp"
#include "spectral/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spectral {

struct ConvBlock {
  int out_channels = 16;
  int kernel_size = 5;
  int pool_size = 2;
};

enum class LossKind { Plain, Weighted };

/// Where the dropout mask is applied: once on the flattened conv features,
/// or after every hidden dense ReLU.
enum class DropoutPlacement { AfterFeatures, AfterHidden };

/// Network layout and training schedule. The default stack is
/// conv(16,k5)-ReLU-pool2, conv(32,k5)-ReLU-pool2, dropout, dense(64)-ReLU,
/// dense(C), softmax.
struct CnnConfig {
  std::vector<ConvBlock> conv_blocks{{16, 5, 2}, {32, 5, 2}};
  std::vector<int> dense_hidden{64};
  double dropout_rate = 0.1;
  DropoutPlacement dropout_placement = DropoutPlacement::AfterFeatures;
  int num_classes = 2;
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 10;
  LossKind loss = LossKind::Plain;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  AdamHyper adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

/// Flat per-tensor gradient buffers in parameter order.
using Gradients = std::vector<Eigen::VectorXd>;

struct AdamState {
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  std::int64_t step = 0;
};

/// Loss value and d(loss)/d(logits) for a batch.
struct BatchLoss {
  double value = 0.0;
  Eigen::MatrixXd logit_grad;
};

/// Mean (optionally class-weighted) cross-entropy over a batch, computed
/// from logits with log-sum-exp. `class_weights` empty means all ones.
BatchLoss softmax_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                                const std::vector<double>& class_weights = {});

/// n / (C * n_c) per class; classes absent from `labels` get weight 0.
std::vector<double> inverse_frequency_weights(const std::vector<int>& labels, int num_classes);

/// Parameters and optimiser state of a 1D-CNN for a fixed input length.
///
/// Parameter tensors, in order: for each conv block its (out, in, k) weight
/// and bias; for each dense layer (hidden ones then the output layer) its
/// out x in weight (column-major when flattened) and bias.
class CnnModel {
public:
  CnnModel(CnnConfig config, Eigen::Index input_length);

  const CnnConfig& config() const { return config_; }
  Eigen::Index input_length() const { return input_length_; }
  /// Width of the flattened conv output fed to the first dense layer.
  Eigen::Index flat_features() const { return flat_features_; }

  /// He-normal weights (std sqrt(2 / fan_in)), zero biases, fresh Adam state.
  void initialize(Rng& rng);

  std::size_t num_tensors() const;
  std::vector<std::string> tensor_names() const;
  std::vector<std::vector<Eigen::Index>> tensor_shapes() const;
  std::vector<Eigen::Map<Eigen::VectorXd>> parameters();
  std::vector<Eigen::Map<const Eigen::VectorXd>> parameters() const;
  Eigen::Index parameter_count() const;

  AdamState& adam_state() { return adam_; }
  const AdamState& adam_state() const { return adam_; }

  /// Inference logits (dropout off). Rows are samples.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& rows) const;

  /// Activations entering the output layer, dropout off.
  Eigen::MatrixXd features(const Eigen::MatrixXd& rows) const;

  /// Training forward pass: draws dropout masks from `rng` and caches
  /// everything backward needs.
  Eigen::MatrixXd forward_train(const Eigen::MatrixXd& rows, Rng& rng);

  /// Reverse-mode gradients of the loss whose logit gradient is given, using
  /// the cache from the last forward_train. Consumes the cache; a second
  /// call throws StateError.
  Gradients backward(const Eigen::MatrixXd& logit_grad);

  bool has_cache() const { return cache_.has_value(); }

private:
  struct ConvLayer {
    Tensor3d weight;
    Eigen::VectorXd bias;
  };
  struct DenseLayer {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
  };
  struct Cache {
    std::vector<Tensor3d> conv_in;
    std::vector<Tensor3d> conv_act;
    std::vector<std::vector<Eigen::Index>> pool_argmax;
    std::vector<Eigen::MatrixXd> dense_in;
    std::vector<Eigen::MatrixXd> dense_act;
    std::vector<Eigen::MatrixXd> masks;
    Eigen::Index last_channels = 0;
    Eigen::Index last_length = 0;
  };

  Eigen::MatrixXd run(const Eigen::MatrixXd& rows, Rng* rng, Cache* cache, bool stop_at_features) const;
  void check_rows(const Eigen::MatrixXd& rows) const;

  CnnConfig config_;
  Eigen::Index input_length_;
  Eigen::Index flat_features_ = 0;
  std::vector<ConvLayer> conv_;
  std::vector<DenseLayer> dense_;
  AdamState adam_;
  std::optional<Cache> cache_;
};

/// Adam step on every parameter tensor with the model's config; the step
/// counter increments once.
void adam_step(CnnModel& model, const Gradients& grads);

/// Loss and gradients of one batch (forward_train + backward).
Gradients compute_gradients(CnnModel& model, const Eigen::MatrixXd& rows,
                            const std::vector<int>& labels, const std::vector<double>& class_weights,
                            Rng& rng, double* loss = nullptr);

struct TrainResult {
  CnnModel model;
  /// Mean training loss of each epoch.
  std::vector<double> loss_trace;
};

/// Fixed-epoch mini-batch training. Batches come from a fresh shuffle each
/// epoch; the last partial batch is kept.
TrainResult train(const CnnConfig& config, const LabeledDataset& train_set, Rng& rng);

struct Prediction {
  std::vector<int> classes;
  Eigen::MatrixXd probabilities;
};

/// Argmax of the softmax output, ties to the lowest class id.
Prediction predict(const CnnModel& model, const Eigen::MatrixXd& rows);

}  // namespace spectral

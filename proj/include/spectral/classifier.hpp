#pragma once

#include "spectral/checkpoint.hpp"
#include "spectral/cnn.hpp"
#include "spectral/dataset.hpp"
#include "spectral/knn.hpp"
#include "spectral/pls.hpp"
#include "spectral/rng.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spectral {

/// Hyperparameters as a JSON object; keys depend on the algorithm.
using Params = nlohmann::json;

/// Common face of the CNN, KNN and PLS-DA models used by the evaluation
/// harness and the CLI.
class Classifier {
public:
  virtual ~Classifier() = default;

  virtual std::string algorithm() const = 0;
  virtual void fit(const LabeledDataset& train, Rng& rng) = 0;
  virtual std::vector<int> predict(const Eigen::MatrixXd& rows) const = 0;
  /// Class probabilities when the model has them (CNN only).
  virtual std::optional<Eigen::MatrixXd> probabilities(const Eigen::MatrixXd&) const {
    return std::nullopt;
  }
  /// Resolved hyperparameters, echoed into reports and checkpoints.
  virtual Params params() const = 0;
  virtual Checkpoint to_checkpoint() const = 0;

  const std::vector<std::string>& class_names() const { return class_names_; }
  const Eigen::VectorXd& grid() const { return grid_; }

protected:
  void remember_schema(const LabeledDataset& data) {
    class_names_ = data.class_names;
    grid_ = data.grid;
  }
  void write_schema(Checkpoint& ckpt) const;
  void read_schema(const Checkpoint& ckpt);

  std::vector<std::string> class_names_;
  Eigen::VectorXd grid_;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>(const Params&)>;

/// Parses and validates a CNN parameter object. Recognised keys:
/// conv_blocks ([[channels, kernel, pool], ...]), dense_hidden, dropout_rate,
/// dropout_placement ("features" | "hidden"), learning_rate, epochs,
/// batch_size, loss ("plain" | "weighted"), beta1, beta2, epsilon.
/// num_classes and seed come from the data and the fold RNG.
CnnConfig cnn_config_from_params(const Params& params);
Params cnn_config_to_params(const CnnConfig& config);

/// Keys: k_neighbors.
KnnConfig knn_config_from_params(const Params& params);
/// Keys: variance_target, max_components, variance_basis ("x" | "y").
PlsOptions pls_options_from_params(const Params& params);

class CnnClassifier : public Classifier {
public:
  explicit CnnClassifier(CnnConfig config) : config_(std::move(config)) {}
  std::string algorithm() const override { return "cnn"; }
  void fit(const LabeledDataset& train, Rng& rng) override;
  std::vector<int> predict(const Eigen::MatrixXd& rows) const override;
  std::optional<Eigen::MatrixXd> probabilities(const Eigen::MatrixXd& rows) const override;
  Params params() const override { return cnn_config_to_params(config_); }
  Checkpoint to_checkpoint() const override;
  static std::unique_ptr<CnnClassifier> from_checkpoint(const Checkpoint& ckpt);

  const CnnModel& model() const;
  const std::vector<double>& loss_trace() const { return loss_trace_; }

private:
  CnnConfig config_;
  std::optional<CnnModel> model_;
  std::vector<double> loss_trace_;
};

class KnnClassifier : public Classifier {
public:
  explicit KnnClassifier(KnnConfig config) : config_(config) {}
  std::string algorithm() const override { return "knn"; }
  void fit(const LabeledDataset& train, Rng& rng) override;
  std::vector<int> predict(const Eigen::MatrixXd& rows) const override;
  Params params() const override { return {{"k_neighbors", config_.k_neighbors}}; }
  Checkpoint to_checkpoint() const override;
  static std::unique_ptr<KnnClassifier> from_checkpoint(const Checkpoint& ckpt);

private:
  KnnConfig config_;
  std::optional<LabeledDataset> train_;
};

class PlsClassifier : public Classifier {
public:
  explicit PlsClassifier(PlsOptions options) : options_(options) {}
  std::string algorithm() const override { return "plsda"; }
  void fit(const LabeledDataset& train, Rng& rng) override;
  std::vector<int> predict(const Eigen::MatrixXd& rows) const override;
  Params params() const override;
  Checkpoint to_checkpoint() const override;
  static std::unique_ptr<PlsClassifier> from_checkpoint(const Checkpoint& ckpt);

  const PlsModel& model() const;

private:
  PlsOptions options_;
  std::optional<PlsModel> model_;
};

/// Factory for "cnn", "knn" or "plsda"; ArgumentError otherwise.
ClassifierFactory builtin_factory(const std::string& algorithm);

/// Rebuilds a fitted classifier from any checkpoint written by to_checkpoint.
std::unique_ptr<Classifier> load_classifier(const Checkpoint& ckpt);

}  // namespace spectral

#include "spectral/classifier.hpp"

#include "spectral/error.hpp"

#include <set>

namespace spectral {

namespace {

void reject_unknown(const Params& params, const std::set<std::string>& allowed,
                    const std::string& algorithm) {
  if (params.is_null()) return;
  if (!params.is_object()) throw ArgumentError(algorithm + " parameters must be a JSON object");
  for (const auto& [key, value] : params.items()) {
    if (!allowed.count(key)) throw ArgumentError("unknown " + algorithm + " parameter `" + key + "`");
  }
}

template <typename T>
T read(const Params& params, const char* key, T fallback) {
  if (params.is_null() || !params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ArgumentError(std::string("parameter `") + key + "` has the wrong type: " +
                        params.at(key).dump());
  }
}

int read_int(const Params& params, const char* key, int fallback) {
  if (params.is_null() || !params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float() && v.get<double>() == static_cast<int>(v.get<double>())) {
    return static_cast<int>(v.get<double>());
  }
  throw ArgumentError(std::string("parameter `") + key + "` must be an integer, got " + v.dump());
}

Eigen::VectorXd labels_as_values(const std::vector<int>& labels) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) v[static_cast<Eigen::Index>(i)] = labels[i];
  return v;
}

std::vector<int> values_as_labels(const Eigen::VectorXd& v) {
  std::vector<int> labels(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(v[i]);
  return labels;
}

void require_fitted(bool fitted, const std::string& algorithm) {
  if (!fitted) throw StateError(algorithm + " classifier used before fit");
}

}  // namespace

void Classifier::write_schema(Checkpoint& ckpt) const {
  ckpt.meta["class_names"] = class_names_;
  ckpt.add("grid", {grid_.size()}, grid_);
}

void Classifier::read_schema(const Checkpoint& ckpt) {
  try {
    class_names_ = ckpt.meta.at("class_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint lacks class names: ") + e.what());
  }
  grid_ = ckpt.get("grid").values;
}

CnnConfig cnn_config_from_params(const Params& params) try {
  reject_unknown(params,
                 {"conv_blocks", "dense_hidden", "dropout_rate", "dropout_placement", "learning_rate",
                  "epochs", "batch_size", "loss", "beta1", "beta2", "epsilon"},
                 "cnn");
  CnnConfig c;
  if (!params.is_null() && params.contains("conv_blocks")) {
    c.conv_blocks.clear();
    for (const auto& block : params.at("conv_blocks")) {
      ConvBlock b;
      if (block.is_array() && block.size() == 3) {
        b = {block[0].get<int>(), block[1].get<int>(), block[2].get<int>()};
      } else if (block.is_object()) {
        b.out_channels = read_int(block, "out_channels", b.out_channels);
        b.kernel_size = read_int(block, "kernel_size", b.kernel_size);
        b.pool_size = read_int(block, "pool_size", b.pool_size);
      } else {
        throw ArgumentError("conv_blocks entries must be [channels, kernel, pool]");
      }
      c.conv_blocks.push_back(b);
    }
  }
  c.dense_hidden = read(params, "dense_hidden", c.dense_hidden);
  c.dropout_rate = read(params, "dropout_rate", c.dropout_rate);
  const auto placement = read<std::string>(params, "dropout_placement", "features");
  if (placement == "features") {
    c.dropout_placement = DropoutPlacement::AfterFeatures;
  } else if (placement == "hidden") {
    c.dropout_placement = DropoutPlacement::AfterHidden;
  } else {
    throw ArgumentError("dropout_placement must be `features` or `hidden`");
  }
  c.learning_rate = read(params, "learning_rate", c.learning_rate);
  c.epochs = read_int(params, "epochs", c.epochs);
  c.batch_size = read_int(params, "batch_size", c.batch_size);
  const auto loss = read<std::string>(params, "loss", "plain");
  if (loss == "plain") {
    c.loss = LossKind::Plain;
  } else if (loss == "weighted") {
    c.loss = LossKind::Weighted;
  } else {
    throw ArgumentError("loss must be `plain` or `weighted`");
  }
  c.beta1 = read(params, "beta1", c.beta1);
  c.beta2 = read(params, "beta2", c.beta2);
  c.epsilon = read(params, "epsilon", c.epsilon);
  // num_classes is filled in at fit time; validate the rest now.
  CnnConfig probe = c;
  probe.num_classes = std::max(probe.num_classes, 2);
  probe.validate();
  return c;
} catch (const nlohmann::json::exception& e) {
  throw ArgumentError(std::string("malformed cnn parameters: ") + e.what());
}

Params cnn_config_to_params(const CnnConfig& c) {
  Params blocks = Params::array();
  for (const auto& b : c.conv_blocks) blocks.push_back({b.out_channels, b.kernel_size, b.pool_size});
  return {{"conv_blocks", blocks},
          {"dense_hidden", c.dense_hidden},
          {"dropout_rate", c.dropout_rate},
          {"dropout_placement",
           c.dropout_placement == DropoutPlacement::AfterFeatures ? "features" : "hidden"},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"loss", c.loss == LossKind::Plain ? "plain" : "weighted"},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon}};
}

KnnConfig knn_config_from_params(const Params& params) {
  reject_unknown(params, {"k_neighbors"}, "knn");
  KnnConfig c;
  c.k_neighbors = read_int(params, "k_neighbors", c.k_neighbors);
  if (c.k_neighbors < 1) throw ArgumentError("k_neighbors must be >= 1");
  return c;
}

PlsOptions pls_options_from_params(const Params& params) {
  reject_unknown(params, {"variance_target", "max_components", "variance_basis"}, "plsda");
  PlsOptions o;
  o.variance_target = read(params, "variance_target", o.variance_target);
  o.max_components = read_int(params, "max_components", o.max_components);
  const auto basis = read<std::string>(params, "variance_basis", "x");
  if (basis == "x") {
    o.basis = VarianceBasis::X;
  } else if (basis == "y") {
    o.basis = VarianceBasis::Y;
  } else {
    throw ArgumentError("variance_basis must be `x` or `y`");
  }
  if (!(o.variance_target > 0.0 && o.variance_target <= 1.0)) {
    throw ArgumentError("variance_target must be in (0, 1]");
  }
  if (o.max_components < 1) throw ArgumentError("max_components must be >= 1");
  return o;
}

// --- CNN -------------------------------------------------------------------

void CnnClassifier::fit(const LabeledDataset& train, Rng& rng) {
  config_.num_classes = train.num_classes();
  config_.seed = rng.seed();
  auto result = spectral::train(config_, train, rng);
  model_.emplace(std::move(result.model));
  loss_trace_ = std::move(result.loss_trace);
  remember_schema(train);
}

const CnnModel& CnnClassifier::model() const {
  require_fitted(model_.has_value(), "cnn");
  return *model_;
}

std::vector<int> CnnClassifier::predict(const Eigen::MatrixXd& rows) const {
  return spectral::predict(model(), rows).classes;
}

std::optional<Eigen::MatrixXd> CnnClassifier::probabilities(const Eigen::MatrixXd& rows) const {
  return spectral::predict(model(), rows).probabilities;
}

Checkpoint CnnClassifier::to_checkpoint() const {
  const CnnModel& m = model();
  Checkpoint ckpt;
  ckpt.algorithm = "cnn";
  ckpt.meta["config"] = cnn_config_to_params(config_);
  ckpt.meta["num_classes"] = config_.num_classes;
  ckpt.meta["seed"] = config_.seed;
  ckpt.meta["input_length"] = m.input_length();
  ckpt.meta["adam_step"] = m.adam_state().step;
  ckpt.meta["loss_trace"] = loss_trace_;
  write_schema(ckpt);
  const auto names = m.tensor_names();
  const auto shapes = m.tensor_shapes();
  const auto params = m.parameters();
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<std::int64_t> shape(shapes[i].begin(), shapes[i].end());
    ckpt.add(names[i], shape, params[i]);
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::vector<std::int64_t> shape(shapes[i].begin(), shapes[i].end());
    ckpt.add("adam.m." + names[i], shape, m.adam_state().m[i]);
    ckpt.add("adam.v." + names[i], shape, m.adam_state().v[i]);
  }
  return ckpt;
}

std::unique_ptr<CnnClassifier> CnnClassifier::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.algorithm != "cnn") throw FormatError("checkpoint holds `" + ckpt.algorithm + "`, not cnn");
  try {
    CnnConfig config = cnn_config_from_params(ckpt.meta.at("config"));
    config.num_classes = ckpt.meta.at("num_classes").get<int>();
    config.seed = ckpt.meta.at("seed").get<std::uint64_t>();
    auto out = std::make_unique<CnnClassifier>(config);
    out->read_schema(ckpt);
    CnnModel model(config, ckpt.meta.at("input_length").get<Eigen::Index>());
    const auto names = model.tensor_names();
    auto params = model.parameters();
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& t = ckpt.get(names[i]);
      if (t.values.size() != params[i].size()) throw FormatError("tensor " + names[i] + " has wrong size");
      params[i] = t.values;
      model.adam_state().m[i] = ckpt.get("adam.m." + names[i]).values;
      model.adam_state().v[i] = ckpt.get("adam.v." + names[i]).values;
    }
    model.adam_state().step = ckpt.meta.at("adam_step").get<std::int64_t>();
    out->loss_trace_ = ckpt.meta.value("loss_trace", std::vector<double>{});
    out->model_.emplace(std::move(model));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed cnn checkpoint: ") + e.what());
  }
}

// --- KNN -------------------------------------------------------------------

void KnnClassifier::fit(const LabeledDataset& train, Rng&) {
  if (train.size() == 0) throw ArgumentError("knn: empty training set");
  if (static_cast<std::size_t>(config_.k_neighbors) > train.size()) {
    throw ArgumentError("knn: k = " + std::to_string(config_.k_neighbors) +
                        " exceeds training size " + std::to_string(train.size()));
  }
  train_ = train;
  remember_schema(train);
}

std::vector<int> KnnClassifier::predict(const Eigen::MatrixXd& rows) const {
  require_fitted(train_.has_value(), "knn");
  return knn_predict(*train_, config_, rows);
}

Checkpoint KnnClassifier::to_checkpoint() const {
  require_fitted(train_.has_value(), "knn");
  Checkpoint ckpt;
  ckpt.algorithm = "knn";
  ckpt.meta["config"] = params();
  write_schema(ckpt);
  ckpt.add_matrix("train.rows", train_->rows);
  ckpt.add("train.labels", {static_cast<std::int64_t>(train_->size())}, labels_as_values(train_->labels));
  return ckpt;
}

std::unique_ptr<KnnClassifier> KnnClassifier::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.algorithm != "knn") throw FormatError("checkpoint holds `" + ckpt.algorithm + "`, not knn");
  auto out = std::make_unique<KnnClassifier>(knn_config_from_params(ckpt.meta.value("config", Params{})));
  out->read_schema(ckpt);
  LabeledDataset train;
  train.grid = out->grid_;
  train.class_names = out->class_names_;
  train.rows = ckpt.matrix("train.rows");
  train.labels = values_as_labels(ckpt.get("train.labels").values);
  train.validate();
  out->train_ = std::move(train);
  return out;
}

// --- PLS-DA ----------------------------------------------------------------

void PlsClassifier::fit(const LabeledDataset& train, Rng&) {
  model_ = pls_fit(train, options_);
  remember_schema(train);
}

const PlsModel& PlsClassifier::model() const {
  require_fitted(model_.has_value(), "plsda");
  return *model_;
}

std::vector<int> PlsClassifier::predict(const Eigen::MatrixXd& rows) const {
  return pls_predict(model(), rows).classes;
}

Params PlsClassifier::params() const {
  Params p = {{"variance_target", options_.variance_target},
              {"max_components", options_.max_components},
              {"variance_basis", options_.basis == VarianceBasis::X ? "x" : "y"}};
  if (model_) p["n_components"] = model_->n_components;
  return p;
}

Checkpoint PlsClassifier::to_checkpoint() const {
  const PlsModel& m = model();
  Checkpoint ckpt;
  ckpt.algorithm = "plsda";
  Params config = params();
  config.erase("n_components");
  ckpt.meta["config"] = config;
  ckpt.meta["n_components"] = m.n_components;
  ckpt.meta["num_classes"] = m.num_classes;
  write_schema(ckpt);
  ckpt.add_matrix("x_mean", m.x_mean);
  ckpt.add_matrix("y_mean", m.y_mean);
  ckpt.add_matrix("weights", m.weights);
  ckpt.add_matrix("x_loadings", m.x_loadings);
  ckpt.add_matrix("y_loadings", m.y_loadings);
  ckpt.add_matrix("rotation", m.rotation);
  ckpt.add_matrix("coefficients", m.coefficients);
  ckpt.add("explained_x_variance", {m.explained_x_variance.size()}, m.explained_x_variance);
  ckpt.add("explained_y_variance", {m.explained_y_variance.size()}, m.explained_y_variance);
  return ckpt;
}

std::unique_ptr<PlsClassifier> PlsClassifier::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.algorithm != "plsda") throw FormatError("checkpoint holds `" + ckpt.algorithm + "`, not plsda");
  auto out = std::make_unique<PlsClassifier>(pls_options_from_params(ckpt.meta.value("config", Params{})));
  out->read_schema(ckpt);
  PlsModel m;
  try {
    m.n_components = ckpt.meta.at("n_components").get<int>();
    m.num_classes = ckpt.meta.at("num_classes").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed plsda checkpoint: ") + e.what());
  }
  m.x_mean = ckpt.matrix("x_mean");
  m.y_mean = ckpt.matrix("y_mean");
  m.weights = ckpt.matrix("weights");
  m.x_loadings = ckpt.matrix("x_loadings");
  m.y_loadings = ckpt.matrix("y_loadings");
  m.rotation = ckpt.matrix("rotation");
  m.coefficients = ckpt.matrix("coefficients");
  m.explained_x_variance = ckpt.get("explained_x_variance").values;
  m.explained_y_variance = ckpt.get("explained_y_variance").values;
  out->model_ = std::move(m);
  return out;
}

ClassifierFactory builtin_factory(const std::string& algorithm) {
  if (algorithm == "cnn") {
    return [](const Params& p) { return std::make_unique<CnnClassifier>(cnn_config_from_params(p)); };
  }
  if (algorithm == "knn") {
    return [](const Params& p) { return std::make_unique<KnnClassifier>(knn_config_from_params(p)); };
  }
  if (algorithm == "plsda") {
    return [](const Params& p) { return std::make_unique<PlsClassifier>(pls_options_from_params(p)); };
  }
  throw ArgumentError("unknown algorithm `" + algorithm + "` (expected cnn, knn or plsda)");
}

std::unique_ptr<Classifier> load_classifier(const Checkpoint& ckpt) {
  if (ckpt.algorithm == "cnn") return CnnClassifier::from_checkpoint(ckpt);
  if (ckpt.algorithm == "knn") return KnnClassifier::from_checkpoint(ckpt);
  if (ckpt.algorithm == "plsda") return PlsClassifier::from_checkpoint(ckpt);
  throw FormatError("checkpoint algorithm tag `" + ckpt.algorithm + "` is not recognised");
}

}  // namespace spectral

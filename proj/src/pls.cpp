#include "spectral/pls.hpp"

#include "spectral/error.hpp"
#include "spectral/layers.hpp"

#include <algorithm>

namespace spectral {

int components_for_target(const Eigen::VectorXd& explained, double target) {
  double cumulative = 0.0;
  for (Eigen::Index a = 0; a < explained.size(); ++a) {
    cumulative += explained[a];
    if (cumulative >= target) return static_cast<int>(a + 1);
  }
  return static_cast<int>(explained.size());
}

PlsModel pls_fit(const LabeledDataset& train, const PlsOptions& options) {
  const Eigen::Index n = train.rows.rows();
  const Eigen::Index p = train.rows.cols();
  const int num_classes = train.num_classes();
  if (n < 2) throw ArgumentError("pls: need at least two training rows");
  if (options.max_components < 1) throw ArgumentError("pls: max_components must be >= 1");
  if (!(options.variance_target > 0.0 && options.variance_target <= 1.0)) {
    throw ArgumentError("pls: variance_target must be in (0, 1]");
  }

  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) y(i, train.labels[static_cast<std::size_t>(i)]) = 1.0;

  PlsModel model;
  model.num_classes = num_classes;
  model.x_mean = train.rows.colwise().mean();
  model.y_mean = y.colwise().mean();
  Eigen::MatrixXd x = train.rows.rowwise() - model.x_mean;
  y.rowwise() -= model.y_mean;

  const double total_x = x.squaredNorm();
  const double total_y = y.squaredNorm();
  if (!(total_x > 1e-300)) throw ValidationError("pls: training rows have zero variance");
  if (!(total_y > 0.0)) throw ValidationError("pls: training labels contain a single class");

  const Eigen::Index limit =
      std::min<Eigen::Index>({static_cast<Eigen::Index>(options.max_components), n - 1, p});
  Eigen::MatrixXd w_all(p, limit), p_all(p, limit), q_all(num_classes, limit);
  std::vector<double> ex, ey;
  const double residual_floor = 1e-24;

  for (Eigen::Index a = 0; a < limit; ++a) {
    if (x.squaredNorm() <= residual_floor * total_x || y.squaredNorm() <= residual_floor * total_y) break;
    Eigen::Index start_col;
    y.colwise().squaredNorm().maxCoeff(&start_col);
    Eigen::VectorXd u = y.col(start_col);
    Eigen::VectorXd w, t, q;
    Eigen::VectorXd t_old = Eigen::VectorXd::Zero(n);
    bool degenerate = false;
    for (int it = 0; it < options.max_iterations; ++it) {
      w = x.transpose() * u;
      const double w_norm = w.norm();
      if (!(w_norm > 0.0)) {
        degenerate = true;
        break;
      }
      w /= w_norm;
      t = x * w;
      const double tt = t.squaredNorm();
      q = y.transpose() * t / tt;
      const double qq = q.squaredNorm();
      if (!(qq > 0.0)) {
        degenerate = true;
        break;
      }
      u = y * q / qq;
      const double change = (t - t_old).norm() / t.norm();
      t_old = t;
      if (change <= options.tolerance) break;
    }
    if (degenerate) break;
    const double tt = t.squaredNorm();
    const Eigen::VectorXd p_load = x.transpose() * t / tt;
    x -= t * p_load.transpose();
    y -= t * q.transpose();
    w_all.col(a) = w;
    p_all.col(a) = p_load;
    q_all.col(a) = q;
    ex.push_back(tt * p_load.squaredNorm() / total_x);
    ey.push_back(tt * q.squaredNorm() / total_y);
  }
  const auto extracted = static_cast<Eigen::Index>(ex.size());
  if (extracted == 0) throw ValidationError("pls: no component could be extracted");
  model.explained_x_variance = Eigen::Map<const Eigen::VectorXd>(ex.data(), extracted);
  model.explained_y_variance = Eigen::Map<const Eigen::VectorXd>(ey.data(), extracted);

  const Eigen::VectorXd& basis =
      options.basis == VarianceBasis::X ? model.explained_x_variance : model.explained_y_variance;
  const int c = components_for_target(basis, options.variance_target);
  model.n_components = c;
  model.weights = w_all.leftCols(c);
  model.x_loadings = p_all.leftCols(c);
  model.y_loadings = q_all.leftCols(c);
  const Eigen::MatrixXd pw = model.x_loadings.transpose() * model.weights;
  model.rotation = model.weights * pw.fullPivLu().inverse();
  model.coefficients = model.rotation * model.y_loadings.transpose();
  return model;
}

PlsPrediction pls_predict(const PlsModel& model, const Eigen::MatrixXd& rows) {
  if (rows.cols() != model.x_mean.size()) {
    throw ShapeError("pls: query width " + std::to_string(rows.cols()) + " vs model width " +
                     std::to_string(model.x_mean.size()));
  }
  PlsPrediction out;
  const Eigen::MatrixXd centred = rows.rowwise() - model.x_mean;
  out.scores = centred * model.rotation;
  out.responses = (centred * model.coefficients).rowwise() + model.y_mean;
  out.classes.resize(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out.classes[static_cast<std::size_t>(i)] = argmax(out.responses.row(i));
  }
  return out;
}

}  // namespace spectral

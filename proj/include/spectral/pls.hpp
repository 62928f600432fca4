#pragma once

#include "spectral/dataset.hpp"

#include <Eigen/Dense>

#include <vector>

namespace spectral {

/// Which block's explained variance decides the component count.
enum class VarianceBasis { X, Y };

struct PlsOptions {
  double variance_target = 0.95;
  int max_components = 10;
  VarianceBasis basis = VarianceBasis::X;
  double tolerance = 1e-10;
  int max_iterations = 500;
};

/// PLS2 model against one-hot class indicators, mean-centred only.
///
/// Columns of `weights`, `x_loadings` and `y_loadings` are the first
/// `n_components` NIPALS components. `explained_x_variance` and
/// `explained_y_variance` cover every component that was extracted, which
/// may be more than the retained count.
struct PlsModel {
  Eigen::RowVectorXd x_mean;
  Eigen::RowVectorXd y_mean;
  Eigen::MatrixXd weights;     // p x c
  Eigen::MatrixXd x_loadings;  // p x c
  Eigen::MatrixXd y_loadings;  // C x c
  Eigen::MatrixXd rotation;    // p x c, maps centred rows to scores
  Eigen::MatrixXd coefficients;  // p x C
  int n_components = 0;
  int num_classes = 0;
  Eigen::VectorXd explained_x_variance;
  Eigen::VectorXd explained_y_variance;
};

/// NIPALS PLS2. Each component iterates weight/score/loading updates until
/// the relative change of the X score is <= tolerance (or max_iterations),
/// then deflates X and Y. Extraction stops early once X or Y has no
/// variance left. The retained count is the smallest c whose cumulative
/// explained variance (on the chosen block) reaches variance_target, capped
/// at max_components.
PlsModel pls_fit(const LabeledDataset& train, const PlsOptions& options = {});

/// Smallest component count reaching `target` in the given per-component
/// explained fractions; all of them if the target is never reached.
int components_for_target(const Eigen::VectorXd& explained, double target);

struct PlsPrediction {
  std::vector<int> classes;
  Eigen::MatrixXd responses;  // n x C predicted indicators
  Eigen::MatrixXd scores;     // n x c
};

/// Predicted class is the argmax of the regressed indicator row, ties to
/// the lowest class id.
PlsPrediction pls_predict(const PlsModel& model, const Eigen::MatrixXd& rows);

}  // namespace spectral

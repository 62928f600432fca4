#pragma once

#include "spectral/dataset.hpp"

#include <Eigen/Dense>

#include <vector>

namespace spectral {

struct KnnConfig {
  int k_neighbors = 3;
};

/// Brute-force k-nearest-neighbour vote under Euclidean distance.
///
/// Neighbours are ordered by (distance, training row index). The class with
/// most votes wins; a vote tie goes to the class of the single nearest
/// neighbour if it is among the tied classes, otherwise to the lowest id.
std::vector<int> knn_predict(const LabeledDataset& train, const KnnConfig& config,
                             const Eigen::MatrixXd& queries);

}  // namespace spectral

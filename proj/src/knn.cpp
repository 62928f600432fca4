#include "spectral/knn.hpp"

#include "spectral/error.hpp"

#include <algorithm>
#include <numeric>

namespace spectral {

std::vector<int> knn_predict(const LabeledDataset& train, const KnnConfig& config,
                             const Eigen::MatrixXd& queries) {
  const std::size_t n = train.size();
  if (n == 0) throw ArgumentError("knn: empty training set");
  if (config.k_neighbors < 1) throw ArgumentError("knn: k must be >= 1");
  const auto k = static_cast<std::size_t>(config.k_neighbors);
  if (k > n) {
    throw ArgumentError("knn: k = " + std::to_string(k) + " exceeds training size " +
                        std::to_string(n));
  }
  if (queries.cols() != train.rows.cols()) {
    throw ShapeError("knn: query width " + std::to_string(queries.cols()) + " vs training width " +
                     std::to_string(train.rows.cols()));
  }

  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(queries.rows()));
  std::vector<std::size_t> order(n);
  std::vector<double> dist(n);
  std::vector<int> votes(static_cast<std::size_t>(train.num_classes()));
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    // Squared distances rank identically to Euclidean ones.
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = (train.rows.row(static_cast<Eigen::Index>(i)) - queries.row(q)).squaredNorm();
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                      });
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t j = 0; j < k; ++j) ++votes[static_cast<std::size_t>(train.labels[order[j]])];
    const int top = *std::max_element(votes.begin(), votes.end());
    const int nearest = train.labels[order[0]];
    int winner = nearest;
    if (votes[static_cast<std::size_t>(nearest)] != top) {
      winner = static_cast<int>(std::find(votes.begin(), votes.end(), top) - votes.begin());
    }
    out.push_back(winner);
  }
  return out;
}

}  // namespace spectral

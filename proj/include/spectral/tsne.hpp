#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace spectral {

/// Exact t-SNE settings. Defaults follow the original published schedule:
/// perplexity 30, 1000 iterations, learning rate 200, exaggeration 12 for
/// the first 250 iterations, momentum 0.5 switching to 0.8 at 250.
struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  int momentum_switch = 250;
  double min_gain = 0.01;
  std::uint64_t seed = 0;
  /// Tolerance on |entropy - log(perplexity)| of each conditional row.
  double perplexity_tolerance = 1e-5;
  int max_bisection_steps = 50;
};

struct Affinities {
  /// Symmetrised joint probabilities, zero diagonal, summing to 1.
  Eigen::MatrixXd joint;
  /// Gaussian precision (1 / 2 sigma^2 in squared-distance units) per row.
  Eigen::VectorXd beta;
  /// Shannon entropy (nats) of each conditional row; log of the achieved
  /// perplexity.
  Eigen::VectorXd entropy;
};

/// Per-point bandwidths by bisection on the Gaussian precision so that each
/// conditional distribution has the requested perplexity, then P = (P_cond +
/// P_cond^T) / 2n.
Affinities tsne_affinities(const Eigen::MatrixXd& rows, const TsneConfig& config);

struct KlSample {
  int iteration = 0;
  double kl = 0.0;
};

struct TsneResult {
  Eigen::MatrixXd embedding;  // n x 2
  /// KL(P || Q) at iteration 0, every 50 iterations, and after the last one.
  std::vector<KlSample> kl_trace;
  Affinities affinities;
};

/// Two-dimensional embedding by gradient descent with momentum and
/// per-coordinate gains. Rows are processed in lexicographic order of their
/// values, so the output does not depend on the input row order; given the
/// seed the result is deterministic.
TsneResult tsne_embed(const Eigen::MatrixXd& rows, const TsneConfig& config = {});

}  // namespace spectral

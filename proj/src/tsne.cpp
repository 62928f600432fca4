#include "spectral/tsne.hpp"

#include "spectral/error.hpp"
#include "spectral/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace spectral {

namespace {

void check_config(Eigen::Index n, const TsneConfig& config) {
  if (n < 4) throw ArgumentError("t-SNE needs at least 4 rows, got " + std::to_string(n));
  if (!(config.perplexity > 1.0)) throw ArgumentError("t-SNE perplexity must be > 1");
  if (!(config.perplexity < static_cast<double>(n))) {
    throw ArgumentError("t-SNE perplexity " + std::to_string(config.perplexity) +
                        " must be below the row count " + std::to_string(n));
  }
  if (config.iterations < 1) throw ArgumentError("t-SNE iterations must be >= 1");
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& rows) {
  const Eigen::VectorXd norms = rows.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * rows * rows.transpose()).colwise() + norms;
  d.rowwise() += norms.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

double kl_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y) {
  const Eigen::Index n = y.rows();
  Eigen::MatrixXd num(n, n);
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
      total += num(i, j);
    }
  }
  double kl = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (p(i, j) > 0.0) kl += p(i, j) * std::log(p(i, j) / std::max(num(i, j) / total, 1e-300));
    }
  }
  return kl;
}

}  // namespace

Affinities tsne_affinities(const Eigen::MatrixXd& rows, const TsneConfig& config) {
  const Eigen::Index n = rows.rows();
  check_config(n, config);
  Eigen::MatrixXd d = squared_distances(rows);
  // P is invariant to a global scale of the distances once each row is
  // calibrated; normalising keeps the bisection start point sensible.
  const double max_d = d.maxCoeff();
  if (max_d > 0.0) d /= max_d;

  const double target = std::log(config.perplexity);
  Affinities out{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  Eigen::VectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double entropy = 0.0;
    // A row's nearest neighbour gets weight exp(-beta * (d - d_min)); shifting
    // by d_min avoids underflow at large beta without changing the result.
    double d_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) d_min = std::min(d_min, d(i, j));
    }
    for (int step = 0; step < config.max_bisection_steps; ++step) {
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * (d(i, j) - d_min));
        sum += row[j];
        weighted += (d(i, j) - d_min) * row[j];
      }
      entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) <= config.perplexity_tolerance) break;
      if (diff > 0.0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    out.joint.row(i) = row.transpose();
    out.beta[i] = max_d > 0.0 ? beta / max_d : beta;
    out.entropy[i] = entropy;
  }
  const Eigen::MatrixXd conditional = out.joint;
  out.joint = (conditional + conditional.transpose()) / (2.0 * static_cast<double>(n));
  return out;
}

TsneResult tsne_embed(const Eigen::MatrixXd& rows, const TsneConfig& config) {
  const Eigen::Index n = rows.rows();
  check_config(n, config);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      if (rows(a, j) != rows(b, j)) return rows(a, j) < rows(b, j);
    }
    return false;
  });
  Eigen::MatrixXd sorted(n, rows.cols());
  for (Eigen::Index i = 0; i < n; ++i) sorted.row(i) = rows.row(order[static_cast<std::size_t>(i)]);

  TsneResult result;
  Affinities aff = tsne_affinities(sorted, config);
  const Eigen::MatrixXd& p = aff.joint;

  Rng rng(config.seed);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = 1e-4 * rng.normal();
    y(i, 1) = 1e-4 * rng.normal();
  }
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd grad(n, 2);
  Eigen::MatrixXd num(n, n);

  result.kl_trace.push_back({0, kl_divergence(p, y)});
  for (int it = 0; it < config.iterations; ++it) {
    const double exaggeration = it < config.exaggeration_iterations ? config.early_exaggeration : 1.0;
    const double momentum = it < config.momentum_switch ? config.initial_momentum : config.final_momentum;

    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        num(i, j) = i == j ? 0.0 : 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        total += num(i, j);
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::RowVector2d g = Eigen::RowVector2d::Zero();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double coeff = (exaggeration * p(i, j) - num(i, j) / total) * num(i, j);
        g += coeff * (y.row(i) - y.row(j));
      }
      grad.row(i) = 4.0 * g;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2;
        gains(i, c) = std::max(gains(i, c), config.min_gain);
        update(i, c) = momentum * update(i, c) - config.learning_rate * gains(i, c) * grad(i, c);
      }
    }
    y += update;
    y.rowwise() -= y.colwise().mean();

    const int done = it + 1;
    if (done % 50 == 0 || done == config.iterations) result.kl_trace.push_back({done, kl_divergence(p, y)});
  }

  result.embedding.resize(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) result.embedding.row(order[static_cast<std::size_t>(i)]) = y.row(i);
  // Report affinities in input order too.
  result.affinities.joint.resize(n, n);
  result.affinities.beta.resize(n);
  result.affinities.entropy.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto oi = order[static_cast<std::size_t>(i)];
    result.affinities.beta[oi] = aff.beta[i];
    result.affinities.entropy[oi] = aff.entropy[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      result.affinities.joint(oi, order[static_cast<std::size_t>(j)]) = p(i, j);
    }
  }
  return result;
}

}  // namespace spectral

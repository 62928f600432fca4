#pragma once
// Fixtures and independent reference implementations shared by the test
// binaries. The oracles deliberately avoid the library code paths they check:
// plain loops and std::vector instead of Eigen expressions, normal equations
// instead of QR, full sorts instead of partial ones.

#include "spectral/classifier.hpp"
#include "spectral/dataset.hpp"
#include "spectral/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace testing {

using spectral::LabeledDataset;
using spectral::Rng;

/// Gauss-Jordan with partial pivoting on a dense square system.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

/// Smoothing weights of a centred window from the normal equations:
/// row 0 of (V^T V)^{-1} V^T, V the Vandermonde matrix of offsets -h..h.
inline std::vector<double> sg_smoothing_oracle(int window, int degree) {
  const int h = window / 2;
  const int m = degree + 1;
  std::vector<std::vector<double>> vtv(m, std::vector<double>(m, 0.0));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int t = -h; t <= h; ++t) vtv[i][j] += std::pow(t, i) * std::pow(t, j);
    }
  }
  std::vector<double> weights(window);
  for (int t = -h; t <= h; ++t) {
    std::vector<double> rhs(m);
    for (int i = 0; i < m; ++i) rhs[i] = std::pow(t, i);
    weights[t + h] = solve_dense(vtv, rhs)[0];
  }
  return weights;
}

/// out[b][o][t] = bias[o] + sum_i sum_tau w[o][i][tau] x[b][i][t+tau].
inline std::vector<double> naive_conv(const std::vector<double>& x, int batch, int in_ch, int len,
                                      const std::vector<double>& w, int out_ch, int k,
                                      const std::vector<double>& bias) {
  const int out_len = len - k + 1;
  std::vector<double> out(static_cast<std::size_t>(batch * out_ch * out_len), 0.0);
  for (int b = 0; b < batch; ++b)
    for (int o = 0; o < out_ch; ++o)
      for (int t = 0; t < out_len; ++t) {
        double s = bias[o];
        for (int i = 0; i < in_ch; ++i)
          for (int tau = 0; tau < k; ++tau)
            s += w[(o * in_ch + i) * k + tau] * x[(b * in_ch + i) * len + t + tau];
        out[(b * out_ch + o) * out_len + t] = s;
      }
  return out;
}

/// Full sort of all distances, majority of the first k with the same tie
/// rule as the library: nearest neighbour's class if tied, else lowest id.
inline int knn_oracle(const LabeledDataset& train, int k, const Eigen::VectorXd& query) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < train.size(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < query.size(); ++j) {
      const double diff = train.rows(static_cast<Eigen::Index>(i), j) - query[j];
      s += diff * diff;
    }
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  std::vector<int> votes(train.num_classes(), 0);
  for (int i = 0; i < k; ++i) ++votes[train.labels[d[i].second]];
  const int top = *std::max_element(votes.begin(), votes.end());
  const int nearest = train.labels[d[0].second];
  if (votes[nearest] == top) return nearest;
  for (int c = 0; c < train.num_classes(); ++c) {
    if (votes[c] == top) return c;
  }
  return -1;
}

/// Two classes of noisy Gaussian bumps on a 1000..2000 grid whose centres
/// differ by `shift` wavelength units.
inline LabeledDataset bump_dataset(std::size_t n, Eigen::Index p, double shift, double noise,
                                   std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset d;
  d.grid = Eigen::VectorXd::LinSpaced(p, 1000.0, 2000.0);
  d.rows.resize(static_cast<Eigen::Index>(n), p);
  d.class_names = {"neg", "pos"};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    const double centre = 1400.0 + c * shift;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double z = (d.grid[j] - centre) / 80.0;
      d.rows(static_cast<Eigen::Index>(i), j) = std::exp(-z * z) + noise * rng.normal();
    }
    d.labels.push_back(c);
  }
  return d;
}

/// Two Gaussian classes whose means differ by `sigmas` standard deviations
/// along every coordinate (the 20-sample separable CNN set uses 5).
inline LabeledDataset separated_gaussians(std::size_t per_class, Eigen::Index p, double sigmas,
                                          std::uint64_t seed) {
  Rng rng(seed);
  LabeledDataset d;
  d.grid = Eigen::VectorXd::LinSpaced(p, 0.0, static_cast<double>(p - 1));
  d.rows.resize(static_cast<Eigen::Index>(2 * per_class), p);
  d.class_names = {"a", "b"};
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const int c = static_cast<int>(i % 2);
    for (Eigen::Index j = 0; j < p; ++j) {
      d.rows(static_cast<Eigen::Index>(i), j) = (c ? sigmas / 2 : -sigmas / 2) + rng.normal();
    }
    d.labels.push_back(c);
  }
  return d;
}

/// Predicts a fixed class whatever the input.
class ConstantClassifier : public spectral::Classifier {
public:
  explicit ConstantClassifier(int cls) : cls_(cls) {}
  std::string algorithm() const override { return "constant"; }
  void fit(const LabeledDataset& train, Rng&) override { remember_schema(train); }
  std::vector<int> predict(const Eigen::MatrixXd& rows) const override {
    return std::vector<int>(static_cast<std::size_t>(rows.rows()), cls_);
  }
  spectral::Params params() const override { return {{"class", cls_}}; }
  spectral::Checkpoint to_checkpoint() const override {
    spectral::Checkpoint c;
    c.algorithm = "constant";
    c.meta = params();
    return c;
  }

private:
  int cls_;
};

/// Predicts the training majority class; ties to the lowest id.
class MajorityClassifier : public ConstantClassifier {
public:
  MajorityClassifier() : ConstantClassifier(0) {}
  std::string algorithm() const override { return "majority"; }
  void fit(const LabeledDataset& train, Rng&) override {
    remember_schema(train);
    const auto counts = train.class_counts();
    majority_ = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }
  std::vector<int> predict(const Eigen::MatrixXd& rows) const override {
    return std::vector<int>(static_cast<std::size_t>(rows.rows()), majority_);
  }
  spectral::Params params() const override { return {{"majority", majority_}}; }

private:
  int majority_ = 0;
};

/// Correct with probability `skill` per query, decided by a hash of the
/// query's id column, so the outcome does not depend on batch order.
class NoisyOracle : public spectral::Classifier {
public:
  explicit NoisyOracle(double skill) : skill_(skill) {}
  std::string algorithm() const override { return "noisy"; }
  void fit(const LabeledDataset& train, Rng&) override {
    remember_schema(train);
    train_ = train;
  }
  std::vector<int> predict(const Eigen::MatrixXd& rows) const override {
    std::vector<int> out;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      // Stored truth lives in column 0 for these fixtures.
      const int truth = static_cast<int>(std::lround(rows(i, 0)));
      const auto id = static_cast<std::uint64_t>(std::llround(rows(i, 1) * 1e6));
      const std::uint64_t h = spectral::Rng::child_seed(id, 17);
      const bool right = static_cast<double>(h >> 11) * 0x1.0p-53 < skill_;
      out.push_back(right ? truth : 1 - truth);
    }
    return out;
  }
  spectral::Params params() const override { return {{"skill", skill_}}; }
  spectral::Checkpoint to_checkpoint() const override {
    spectral::Checkpoint c;
    c.algorithm = "noisy";
    c.meta = params();
    return c;
  }

private:
  double skill_;
  LabeledDataset train_;
};

/// Column 0 holds the label, column 1 a unique id; used with NoisyOracle.
inline LabeledDataset labelled_ids(std::size_t n, double positive_share) {
  LabeledDataset d;
  d.grid = Eigen::Vector2d(0.0, 1.0);
  d.rows.resize(static_cast<Eigen::Index>(n), 2);
  d.class_names = {"neg", "pos"};
  const std::size_t positives = static_cast<std::size_t>(std::lround(positive_share * n));
  for (std::size_t i = 0; i < n; ++i) {
    const int c = i < positives ? 1 : 0;
    d.rows(static_cast<Eigen::Index>(i), 0) = c;
    d.rows(static_cast<Eigen::Index>(i), 1) = static_cast<double>(i) / static_cast<double>(n);
    d.labels.push_back(c);
  }
  return d;
}

}  // namespace testing

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace spectral {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// C x C counts, rows = true class, columns = predicted class. For binary
/// problems class 1 is the positive class.
class ConfusionMatrix {
public:
  explicit ConfusionMatrix(int num_classes = 2);
  explicit ConfusionMatrix(CountMatrix counts);

  int num_classes() const { return static_cast<int>(counts_.rows()); }
  const CountMatrix& counts() const { return counts_; }
  std::int64_t total() const { return counts_.sum(); }
  std::int64_t correct() const { return counts_.trace(); }

  void add(int truth, int predicted);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  std::int64_t true_positives() const { return counts_(1, 1); }
  std::int64_t true_negatives() const { return counts_(0, 0); }
  std::int64_t false_positives() const { return counts_(0, 1); }
  std::int64_t false_negatives() const { return counts_(1, 0); }

  friend bool operator==(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    return a.counts_ == b.counts_;
  }

private:
  CountMatrix counts_;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels,
                          int num_classes);

/// Accuracy, specificity TN/(TN+FP) and sensitivity TP/(TP+FN).
/// A metric whose denominator is empty is std::nullopt, never 0.
struct DiagnosisMetrics {
  double accuracy = 0.0;
  std::optional<double> specificity;
  std::optional<double> sensitivity;
};

/// Binary matrices use class 1 as positive. With more classes specificity
/// and sensitivity are macro averages of the one-vs-rest values over the
/// classes where each is defined.
DiagnosisMetrics diagnosis_metrics(const ConfusionMatrix& m);

/// Arithmetic mean and sample (n-1) standard deviation; std is 0 for a
/// single value.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(std::span<const double> values);

}  // namespace spectral

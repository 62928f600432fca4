#include "spectral/metrics.hpp"

#include "spectral/error.hpp"

#include <cmath>
#include <string>

namespace spectral {

ConfusionMatrix::ConfusionMatrix(int num_classes) {
  if (num_classes < 1) throw ArgumentError("confusion matrix needs >= 1 class");
  counts_ = CountMatrix::Zero(num_classes, num_classes);
}

ConfusionMatrix::ConfusionMatrix(CountMatrix counts) : counts_(std::move(counts)) {
  if (counts_.rows() != counts_.cols() || counts_.rows() < 1) {
    throw ShapeError("confusion matrix must be square and non-empty");
  }
  if ((counts_.array() < 0).any()) throw ValidationError("confusion counts must be nonnegative");
}

void ConfusionMatrix::add(int truth, int predicted) {
  const int c = num_classes();
  if (truth < 0 || truth >= c || predicted < 0 || predicted >= c) {
    throw ArgumentError("class id out of range [0, " + std::to_string(c) + "): truth " +
                        std::to_string(truth) + ", predicted " + std::to_string(predicted));
  }
  ++counts_(truth, predicted);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes() != num_classes()) throw ShapeError("confusion matrix size mismatch");
  counts_ += other.counts_;
  return *this;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels,
                          int num_classes) {
  if (predictions.size() != labels.size()) {
    throw ArgumentError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                        std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix m(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) m.add(labels[i], predictions[i]);
  return m;
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

DiagnosisMetrics diagnosis_metrics(const ConfusionMatrix& m) {
  const std::int64_t total = m.total();
  if (total == 0) throw ValidationError("diagnosis metrics of an all-zero confusion matrix");
  DiagnosisMetrics out;
  out.accuracy = static_cast<double>(m.correct()) / static_cast<double>(total);
  const auto& c = m.counts();
  if (m.num_classes() == 2) {
    out.specificity = ratio(c(0, 0), c(0, 0) + c(0, 1));
    out.sensitivity = ratio(c(1, 1), c(1, 1) + c(1, 0));
    return out;
  }
  double spec_sum = 0.0, sens_sum = 0.0;
  int spec_n = 0, sens_n = 0;
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    const std::int64_t tp = c(k, k);
    const std::int64_t fn = c.row(k).sum() - tp;
    const std::int64_t fp = c.col(k).sum() - tp;
    const std::int64_t tn = total - tp - fn - fp;
    if (auto s = ratio(tn, tn + fp)) {
      spec_sum += *s;
      ++spec_n;
    }
    if (auto s = ratio(tp, tp + fn)) {
      sens_sum += *s;
      ++sens_n;
    }
  }
  if (spec_n > 0) out.specificity = spec_sum / spec_n;
  if (sens_n > 0) out.sensitivity = sens_sum / sens_n;
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("mean_std of an empty list");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace spectral

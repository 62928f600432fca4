#pragma once

#include "spectral/classifier.hpp"
#include "spectral/dataset.hpp"
#include "spectral/folds.hpp"
#include "spectral/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace spectral {

/// Named axes with candidate values. Candidates are enumerated as the
/// Cartesian product with the last axis varying fastest; that order is also
/// the tie-break order when two candidates score the same.
struct HyperparamGrid {
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;
  /// Parameters shared by every candidate (overridden by axis values).
  Params base = Params::object();

  std::size_t size() const;
  std::vector<Params> candidates() const;

  /// {"axis": [v1, v2, ...], ...}; axes are taken in sorted key order. A
  /// `"fixed"` object, if present, becomes `base`.
  static HyperparamGrid from_json(const nlohmann::json& j);
};

/// One model fit inside a cross-validation run, reported to
/// CvOptions::observer. `inner_fold` is set for the hyperparameter search.
struct TrainEvent {
  std::size_t outer_fold = 0;
  std::optional<std::size_t> inner_fold;
  std::size_t candidate = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> eval_indices;
};

struct CvOptions {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  bool stratified = false;
  /// Outer folds run concurrently on up to this many threads.
  unsigned threads = 1;
  std::function<void(const TrainEvent&)> observer;
};

/// Inner-loop score of one hyperparameter candidate.
struct CandidateScore {
  Params params;
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double std = 0.0;
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  DiagnosisMetrics metrics;
  double train_seconds = 0.0;
  /// Hyperparameters the fold's model was trained with.
  Params params;
  /// Nested mode: every candidate's inner score and the chosen index.
  std::vector<CandidateScore> candidates;
  std::optional<std::size_t> chosen_candidate;
};

struct CvReport {
  std::string algorithm;
  bool nested = false;
  FoldPlan plan;
  std::vector<FoldResult> folds;
  double mean = 0.0;
  /// Sample standard deviation (n - 1) of the fold accuracies.
  double std = 0.0;
  /// Fold whose accuracy is closest to the mean; ties to the lowest id.
  std::size_t representative_fold = 0;
  std::vector<std::string> class_names;

  std::vector<double> accuracies() const;
};

struct CvResult {
  CvReport report;
  std::unique_ptr<Classifier> representative;
};

/// Index of the value closest to `mean`, lowest index on ties.
std::size_t closest_to_mean(const std::vector<double>& values, double mean);

/// Shuffle, split into k folds, and for each fold train on the rest and
/// test on it. Returns the per-fold scores and the representative model.
CvResult cross_validate(const ClassifierFactory& factory, const Params& params,
                        const LabeledDataset& data, const CvOptions& options,
                        const std::string& algorithm = "");

/// Per outer fold f: score every candidate by training on folds - {f, v}
/// and validating on v for each remaining fold v, pick the best inner mean
/// (first in grid order on ties), retrain on folds - {f} and test on f.
/// Needs k >= 3 so the inner training set is never empty.
CvResult nested_cross_validate(const ClassifierFactory& factory, const HyperparamGrid& grid,
                               const LabeledDataset& data, const CvOptions& options,
                               const std::string& algorithm = "");

/// Parallelism cap from SPECTRAL_BENCH_THREADS (default 1).
unsigned threads_from_env();

}  // namespace spectral

#pragma once

#include "spectral/cv.hpp"
#include "spectral/dataset.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace spectral {

inline constexpr const char* kReportSchema = "spectral-bench.cv-report";
inline constexpr int kReportSchemaVersion = 1;

/// What the caller knows about the run that the CV result does not: the
/// resolved experiment configuration and where the data came from.
struct ReportContext {
  nlohmann::json config = nlohmann::json::object();
  std::string dataset_name;
  std::string dataset_path;
};

/// Versioned JSON report. Everything except the "timing" section is a pure
/// function of (config, data, seed), so two seeded runs agree byte for byte
/// once timing is removed.
nlohmann::json build_report(const CvReport& report, const LabeledDataset& data,
                            const ReportContext& context);

/// Copy of `report` without its "timing" section.
nlohmann::json without_timing(nlohmann::json report);

/// One line per fold: sizes, accuracy, specificity, sensitivity (empty when
/// undefined), training seconds and the fold's hyperparameters.
std::string folds_csv(const CvReport& report);

/// Rows are true classes, columns predicted, both labelled by class name.
std::string confusion_csv(const ConfusionMatrix& matrix, const std::vector<std::string>& class_names);

/// One row of a comparison table built from several reports.
struct CompareRow {
  std::string dataset;
  std::string algorithm;
  std::string preprocessing;
  std::string mode;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  std::optional<double> specificity_mean, specificity_std;
  std::optional<double> sensitivity_mean, sensitivity_std;
  double train_seconds_mean = 0.0;
};

/// Throws FormatError naming both versions when a report's schema does not
/// match kReportSchema / kReportSchemaVersion.
CompareRow compare_row(const nlohmann::json& report);
std::vector<CompareRow> compare_reports(const std::vector<nlohmann::json>& reports);

std::string compare_csv(const std::vector<CompareRow>& rows);
/// Fixed-width table for the console, percentages with one decimal.
std::string compare_table(const std::vector<CompareRow>& rows);

}  // namespace spectral

#include "spectral/report.hpp"

#include "spectral/error.hpp"

#include <cstdio>
#include <sstream>

namespace spectral {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json counts_json(const ConfusionMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.counts().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.counts().cols(); ++j) row.push_back(m.counts()(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Mean and std over the folds where the metric is defined.
json defined_summary(const std::vector<FoldResult>& folds,
                     std::optional<double> DiagnosisMetrics::*field) {
  std::vector<double> values;
  for (const auto& f : folds) {
    if (const auto& v = f.metrics.*field) values.push_back(*v);
  }
  if (values.empty()) return {{"mean", nullptr}, {"std", nullptr}, {"defined_folds", 0}};
  const MeanStd ms = mean_std(values);
  return {{"mean", ms.mean}, {"std", ms.std}, {"defined_folds", values.size()}};
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

std::string percent_pm(const std::optional<double>& mean, const std::optional<double>& std) {
  if (!mean) return "-";
  return percent(*mean) + " +- " + percent(std.value_or(0.0));
}

std::optional<double> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json build_report(const CvReport& report, const LabeledDataset& data, const ReportContext& context) {
  json out;
  out["schema"] = kReportSchema;
  out["schema_version"] = kReportSchemaVersion;
  out["config"] = context.config;

  json classes = json::array();
  const auto counts = data.class_counts();
  for (std::size_t c = 0; c < data.class_names.size(); ++c) {
    classes.push_back({{"id", c}, {"name", data.class_names[c]}, {"count", counts[c]}});
  }
  out["dataset"] = {{"name", context.dataset_name},
                    {"path", context.dataset_path},
                    {"samples", data.size()},
                    {"features", data.num_features()},
                    {"unit", data.unit},
                    {"grid_first", data.grid.size() ? json(data.grid[0]) : json(nullptr)},
                    {"grid_last", data.grid.size() ? json(data.grid[data.grid.size() - 1]) : json(nullptr)},
                    {"classes", classes},
                    {"label_order", "first appearance in the file"}};

  out["protocol"] = {
      {"mode", report.nested ? "nested-cv" : "cv"},
      {"algorithm", report.algorithm},
      {"k", report.plan.k()},
      {"seed", report.plan.seed},
      {"stratified", report.plan.stratified},
      {"fold_indices", report.plan.folds},
      {"std", "sample standard deviation (n - 1)"},
      {"representative_rule", "fold accuracy closest to the mean, lowest fold id on ties"},
      {"positive_class", data.class_names.size() > 1 ? json(data.class_names[1]) : json(nullptr)},
      {"multiclass_metrics", "macro average of one-vs-rest over classes where defined"},
      {"preprocessing_scope", "applied to the whole dataset before splitting"}};
  if (report.nested) out["protocol"]["inner_tie_break"] = "first candidate in grid order";

  json folds = json::array();
  for (const auto& f : report.folds) {
    json jf = {{"fold", f.fold},
               {"train_size", f.train_size},
               {"test_size", f.test_size},
               {"accuracy", f.accuracy},
               {"specificity", optional_number(f.metrics.specificity)},
               {"sensitivity", optional_number(f.metrics.sensitivity)},
               {"confusion", counts_json(f.confusion)},
               {"params", f.params}};
    if (report.nested) {
      json inner = json::array();
      for (std::size_t c = 0; c < f.candidates.size(); ++c) {
        const auto& s = f.candidates[c];
        inner.push_back({{"candidate", c},
                         {"params", s.params},
                         {"fold_accuracies", s.fold_accuracies},
                         {"mean", s.mean},
                         {"std", s.std}});
      }
      jf["inner"] = std::move(inner);
      jf["chosen_candidate"] = f.chosen_candidate ? json(*f.chosen_candidate) : json(nullptr);
    }
    folds.push_back(std::move(jf));
  }
  out["folds"] = std::move(folds);

  const auto& rep = report.folds.at(report.representative_fold);
  out["summary"] = {{"accuracy", {{"mean", report.mean}, {"std", report.std}}},
                    {"specificity", defined_summary(report.folds, &DiagnosisMetrics::specificity)},
                    {"sensitivity", defined_summary(report.folds, &DiagnosisMetrics::sensitivity)},
                    {"representative_fold", report.representative_fold},
                    {"representative_params", rep.params}};

  std::vector<double> seconds;
  for (const auto& f : report.folds) seconds.push_back(f.train_seconds);
  double total = 0.0;
  for (double s : seconds) total += s;
  out["timing"] = {{"train_seconds", seconds},
                   {"mean_train_seconds", seconds.empty() ? 0.0 : total / seconds.size()},
                   {"total_train_seconds", total}};
  return out;
}

json without_timing(json report) {
  report.erase("timing");
  return report;
}

std::string folds_csv(const CvReport& report) {
  std::ostringstream out;
  out << "fold,train_size,test_size,accuracy,specificity,sensitivity,train_seconds,params\n";
  for (const auto& f : report.folds) {
    out << f.fold << ',' << f.train_size << ',' << f.test_size << ',' << format_number(f.accuracy)
        << ',' << optional_cell(f.metrics.specificity) << ','
        << optional_cell(f.metrics.sensitivity) << ',' << format_number(f.train_seconds) << ','
        << csv_quote(f.params.dump()) << '\n';
  }
  return out.str();
}

std::string confusion_csv(const ConfusionMatrix& matrix, const std::vector<std::string>& class_names) {
  const int c = matrix.num_classes();
  auto name = [&](int i) {
    return i < static_cast<int>(class_names.size()) ? class_names[i] : std::to_string(i);
  };
  std::ostringstream out;
  out << "true\\predicted";
  for (int j = 0; j < c; ++j) out << ',' << csv_quote(name(j));
  out << '\n';
  for (int i = 0; i < c; ++i) {
    out << csv_quote(name(i));
    for (int j = 0; j < c; ++j) out << ',' << matrix.counts()(i, j);
    out << '\n';
  }
  return out.str();
}

CompareRow compare_row(const json& report) {
  const std::string schema = report.value("schema", std::string("<none>"));
  const int version = report.contains("schema_version") && report["schema_version"].is_number_integer()
                          ? report["schema_version"].get<int>()
                          : -1;
  if (schema != kReportSchema || version != kReportSchemaVersion) {
    throw FormatError("report schema " + schema + " version " + std::to_string(version) +
                      " is not compatible with " + kReportSchema + " version " +
                      std::to_string(kReportSchemaVersion));
  }
  try {
    CompareRow row;
    row.dataset = report.at("dataset").at("name").get<std::string>();
    row.algorithm = report.at("protocol").at("algorithm").get<std::string>();
    row.mode = report.at("protocol").at("mode").get<std::string>();
    const json& pre = report.at("config").value("preprocess", json(nullptr));
    if (pre.is_object() && pre.value("method", std::string("none")) == "sg") {
      row.preprocessing = "sg(" + std::to_string(pre.at("window").get<int>()) + "," +
                          std::to_string(pre.at("degree").get<int>()) + "," +
                          std::to_string(pre.at("deriv").get<int>()) + ")";
    } else {
      row.preprocessing = "none";
    }
    const json& summary = report.at("summary");
    row.accuracy_mean = summary.at("accuracy").at("mean").get<double>();
    row.accuracy_std = summary.at("accuracy").at("std").get<double>();
    row.specificity_mean = get_optional(summary.at("specificity"), "mean");
    row.specificity_std = get_optional(summary.at("specificity"), "std");
    row.sensitivity_mean = get_optional(summary.at("sensitivity"), "mean");
    row.sensitivity_std = get_optional(summary.at("sensitivity"), "std");
    row.train_seconds_mean = report.contains("timing")
                                 ? report["timing"].value("mean_train_seconds", 0.0)
                                 : 0.0;
    return row;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

std::vector<CompareRow> compare_reports(const std::vector<json>& reports) {
  if (reports.empty()) throw ArgumentError("compare needs at least one report");
  std::vector<CompareRow> rows;
  for (const auto& r : reports) rows.push_back(compare_row(r));
  return rows;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << "dataset,algorithm,preprocessing,mode,accuracy_mean,accuracy_std,specificity_mean,"
         "specificity_std,sensitivity_mean,sensitivity_std,train_seconds_mean\n";
  for (const auto& r : rows) {
    out << csv_quote(r.dataset) << ',' << r.algorithm << ',' << r.preprocessing << ',' << r.mode
        << ',' << format_number(r.accuracy_mean) << ',' << format_number(r.accuracy_std) << ','
        << optional_cell(r.specificity_mean) << ',' << optional_cell(r.specificity_std) << ','
        << optional_cell(r.sensitivity_mean) << ',' << optional_cell(r.sensitivity_std) << ','
        << format_number(r.train_seconds_mean) << '\n';
  }
  return out.str();
}

std::string compare_table(const std::vector<CompareRow>& rows) {
  std::vector<std::vector<std::string>> cells{
      {"dataset", "algorithm", "preprocessing", "mode", "ACC %", "ESPEC %", "SE %", "train s"}};
  for (const auto& r : rows) {
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", r.train_seconds_mean);
    cells.push_back({r.dataset, r.algorithm, r.preprocessing, r.mode,
                     percent_pm(r.accuracy_mean, r.accuracy_std),
                     percent_pm(r.specificity_mean, r.specificity_std),
                     percent_pm(r.sensitivity_mean, r.sensitivity_std), secs});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out << row[j];
      if (j + 1 < row.size()) out << std::string(width[j] - row[j].size() + 2, ' ');
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace spectral

#include "spectral/dataset.hpp"

#include "spectral/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_map>

namespace spectral {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record. Double-quoted fields may contain commas; a doubled
// quote inside them is a literal quote. Records never span lines.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::string(trim(current)));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::string(trim(current)));
  return fields;
}

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void validate_grid(const Eigen::VectorXd& grid) {
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    if (!std::isfinite(grid[j])) {
      throw ValidationError("wavelength " + std::to_string(j) + " is not finite");
    }
    if (j > 0 && !(grid[j] > grid[j - 1])) {
      throw ValidationError("wavelengths are not strictly increasing at column " +
                            std::to_string(j) + " (" + format_number(grid[j - 1]) +
                            " then " + format_number(grid[j]) + ")");
    }
  }
}

void Spectrum::validate() const {
  if (wavelengths.size() != absorbances.size()) {
    throw ValidationError("spectrum has " + std::to_string(wavelengths.size()) +
                          " wavelengths but " + std::to_string(absorbances.size()) +
                          " absorbances");
  }
  validate_grid(wavelengths);
  if (!absorbances.allFinite()) throw ValidationError("spectrum has non-finite absorbance");
}

void LabeledDataset::validate() const {
  validate_grid(grid);
  if (rows.cols() != grid.size()) {
    throw ValidationError("rows have " + std::to_string(rows.cols()) + " columns, grid has " +
                          std::to_string(grid.size()));
  }
  if (static_cast<std::size_t>(rows.rows()) != labels.size()) {
    throw ValidationError("row count " + std::to_string(rows.rows()) +
                          " differs from label count " + std::to_string(labels.size()));
  }
  if (class_names.size() < 2) {
    throw ValidationError("dataset needs at least two classes, found " +
                          std::to_string(class_names.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes()) {
      throw ValidationError("label " + std::to_string(labels[i]) + " of row " +
                            std::to_string(i) + " is outside [0, " +
                            std::to_string(num_classes()) + ")");
    }
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (!rows.row(i).allFinite()) {
      throw ValidationError("row " + std::to_string(i) + " has a non-finite value");
    }
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.grid = grid;
  out.class_names = class_names;
  out.unit = unit;
  out.rows.resize(static_cast<Eigen::Index>(indices.size()), rows.cols());
  out.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= size()) {
      throw ArgumentError("subset index " + std::to_string(indices[i]) + " out of range");
    }
    out.rows.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(indices[i]));
    out.labels.push_back(labels[indices[i]]);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

Spectrum LabeledDataset::spectrum(std::size_t row) const {
  return Spectrum{grid, rows.row(static_cast<Eigen::Index>(row)).transpose(), unit};
}

LabeledDataset parse_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::string unit;
  std::vector<std::string> declared_classes;

  bool have_header = false;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      auto body = trim(t.substr(1));
      if (body.rfind("unit:", 0) == 0) unit = std::string(trim(body.substr(5)));
      if (body.rfind("classes:", 0) == 0) declared_classes = split_record(trim(body.substr(8)));
      continue;
    }
    header = split_record(t);
    have_header = true;
    break;
  }
  if (!have_header) throw FormatError(source + ": missing header row");

  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      if (label_col != header.size()) {
        throw FormatError(source + ": header has more than one `label` column");
      }
      label_col = c;
    }
  }
  if (label_col == header.size()) throw FormatError(source + ": header has no `label` column");

  const std::size_t p = header.size() - 1;
  if (p == 0) throw FormatError(source + ": header has no wavelength columns");
  Eigen::VectorXd grid(static_cast<Eigen::Index>(p));
  for (std::size_t c = 0, j = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    double w;
    if (!parse_double(header[c], w)) {
      throw ParseError(source + ": header column " + std::to_string(c) + " (`" + header[c] +
                       "`) is not a number");
    }
    grid[static_cast<Eigen::Index>(j++)] = w;
  }
  validate_grid(grid);

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::unordered_map<std::string, int> class_ids;
  for (const auto& name : declared_classes) {
    if (class_ids.try_emplace(name, static_cast<int>(class_names.size())).second) {
      class_names.push_back(name);
    }
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_record(t);
    if (fields.size() != header.size()) {
      throw FormatError(source + ": row " + std::to_string(row) + " (line " +
                        std::to_string(line_no) + ") has " + std::to_string(fields.size()) +
                        " fields, header has " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == label_col) continue;
      double v;
      if (!parse_double(fields[c], v)) {
        throw ParseError(source + ": cell (row " + std::to_string(row) + ", column " +
                         std::to_string(c) + ") = `" + fields[c] + "` is not a number");
      }
      values.push_back(v);
    }
    const auto& name = fields[label_col];
    if (name.empty()) {
      throw FormatError(source + ": row " + std::to_string(row) + " has an empty label");
    }
    auto [it, inserted] = class_ids.try_emplace(name, static_cast<int>(class_names.size()));
    if (inserted) class_names.push_back(name);
    labels.push_back(it->second);
    ++row;
  }

  LabeledDataset data;
  data.grid = std::move(grid);
  data.rows = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(p));
  data.labels = std::move(labels);
  data.class_names = std::move(class_names);
  data.unit = std::move(unit);
  data.validate();
  return data;
}

LabeledDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path.string());
}

std::string format_number(double value) {
  // Shortest text that parses back to the same double.
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

std::string format_csv(const LabeledDataset& data) {
  std::string out;
  if (!data.unit.empty()) out += "# unit: " + data.unit + "\n";
  out += "# classes: ";
  for (std::size_t c = 0; c < data.class_names.size(); ++c) {
    if (c > 0) out += ',';
    out += quote_if_needed(data.class_names[c]);
  }
  out += '\n';
  for (Eigen::Index j = 0; j < data.grid.size(); ++j) {
    out += format_number(data.grid[j]);
    out += ',';
  }
  out += "label\n";
  for (Eigen::Index i = 0; i < data.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.rows.cols(); ++j) {
      out += format_number(data.rows(i, j));
      out += ',';
    }
    out += quote_if_needed(data.class_names[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])]);
    out += '\n';
  }
  return out;
}

void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << format_csv(data);
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace spectral

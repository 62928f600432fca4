#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spectral {

/// A single spectrum: intensities sampled on an ascending wavelength grid.
struct Spectrum {
  Eigen::VectorXd wavelengths;
  Eigen::VectorXd absorbances;
  std::string unit;

  /// Throws ValidationError on unequal lengths, non-finite values or a grid
  /// that is not strictly increasing.
  void validate() const;
};

/// Rows of spectra on a shared grid with integer class labels in [0, C).
///
/// `rows` is n x p (one sample per row), `grid` has p entries. Subsets made
/// with `subset` keep the parent's class list, so C stays fixed across folds.
struct LabeledDataset {
  Eigen::VectorXd grid;
  Eigen::MatrixXd rows;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::string unit;

  std::size_t size() const { return labels.size(); }
  std::size_t num_features() const { return static_cast<std::size_t>(grid.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  /// Full invariant check: row width equals grid length, finite values,
  /// strictly increasing grid, labels in range, at least two classes.
  void validate() const;

  LabeledDataset subset(std::span<const std::size_t> indices) const;

  /// Samples per class id.
  std::vector<std::size_t> class_counts() const;

  Spectrum spectrum(std::size_t row) const;
};

/// Checks that `grid` is finite and strictly increasing.
void validate_grid(const Eigen::VectorXd& grid);

/// Parses a dataset CSV: a header of numeric wavelengths plus exactly one
/// `label` column, then one sample per line. Lines starting with `#` before
/// the header are comments; `# unit: <text>` sets the unit. Class ids follow
/// first appearance order of the label strings, unless a `# classes: a,b,..`
/// comment fixes the order up front (save_csv always writes one).
LabeledDataset load_csv(const std::filesystem::path& path);
LabeledDataset parse_csv(const std::string& text, const std::string& source = "<memory>");

/// Writes the same format, numbers with 9 significant digits, label last.
void save_csv(const LabeledDataset& data, const std::filesystem::path& path);
std::string format_csv(const LabeledDataset& data);

/// Shortest-form 9 significant digit rendering used by every CSV writer.
std::string format_number(double value);

}  // namespace spectral

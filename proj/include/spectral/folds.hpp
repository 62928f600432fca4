#pragma once

#include "spectral/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace spectral {

/// A partition of {0..n-1} into k folds whose sizes differ by at most one.
struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;
  std::uint64_t seed = 0;
  bool stratified = false;

  std::size_t k() const { return folds.size(); }
  std::size_t total() const;

  /// Concatenation of every fold except those listed, in fold order.
  std::vector<std::size_t> complement(std::span<const std::size_t> excluded_folds) const;
};

/// Fisher-Yates permutation from `rng`, cut into k contiguous chunks; the
/// first n % k folds get one extra element.
FoldPlan shuffled_fold_indices(std::size_t n, std::size_t k, Rng& rng);

/// Shuffles, groups by label (shuffled order kept inside each class) and
/// deals round-robin, so every fold gets a near-equal share of each class.
FoldPlan stratified_fold_indices(std::span<const int> labels, std::size_t k, Rng& rng);

}  // namespace spectral

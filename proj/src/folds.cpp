#include "spectral/folds.hpp"

#include "spectral/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace spectral {

namespace {

void check_k(std::size_t n, std::size_t k) {
  if (k < 2) throw ArgumentError("need at least 2 folds, got " + std::to_string(k));
  if (k > n) {
    throw ArgumentError("cannot split " + std::to_string(n) + " samples into " +
                        std::to_string(k) + " folds");
  }
}

}  // namespace

std::size_t FoldPlan::total() const {
  std::size_t n = 0;
  for (const auto& f : folds) n += f.size();
  return n;
}

std::vector<std::size_t> FoldPlan::complement(std::span<const std::size_t> excluded_folds) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (std::find(excluded_folds.begin(), excluded_folds.end(), f) != excluded_folds.end()) continue;
    out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  return out;
}

FoldPlan shuffled_fold_indices(std::size_t n, std::size_t k, Rng& rng) {
  check_k(n, k);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  FoldPlan plan;
  plan.seed = rng.seed();
  plan.folds.resize(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    plan.folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                         perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return plan;
}

FoldPlan stratified_fold_indices(std::span<const int> labels, std::size_t k, Rng& rng) {
  const std::size_t n = labels.size();
  check_k(n, k);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
  FoldPlan plan;
  plan.seed = rng.seed();
  plan.stratified = true;
  plan.folds.resize(k);
  for (std::size_t j = 0; j < n; ++j) plan.folds[j % k].push_back(perm[j]);
  return plan;
}

}  // namespace spectral

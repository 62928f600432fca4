#include "spectral/cv.hpp"

#include "spectral/error.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace spectral {

std::size_t HyperparamGrid::size() const {
  std::size_t n = 1;
  for (const auto& [name, values] : axes) n *= values.size();
  return n;
}

std::vector<Params> HyperparamGrid::candidates() const {
  if (size() == 0) throw ArgumentError("hyperparameter grid is empty");
  std::vector<Params> out{base.is_null() ? Params::object() : base};
  for (const auto& [name, values] : axes) {
    std::vector<Params> next;
    next.reserve(out.size() * values.size());
    for (const auto& partial : out) {
      for (const auto& v : values) {
        Params p = partial;
        p[name] = v;
        next.push_back(std::move(p));
      }
    }
    out = std::move(next);
  }
  return out;
}

HyperparamGrid HyperparamGrid::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ArgumentError("grid must be a JSON object of axis -> candidate list");
  HyperparamGrid grid;
  for (const auto& [key, value] : j.items()) {
    if (key == "fixed") {
      if (!value.is_object()) throw ArgumentError("grid `fixed` entry must be an object");
      grid.base = value;
      continue;
    }
    if (!value.is_array() || value.empty()) {
      throw ArgumentError("grid axis `" + key + "` must be a non-empty list");
    }
    grid.axes.emplace_back(key, std::vector<nlohmann::json>(value.begin(), value.end()));
  }
  if (grid.axes.empty() && grid.base.empty()) throw ArgumentError("grid has no axes");
  return grid;
}

std::vector<double> CvReport::accuracies() const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.accuracy);
  return out;
}

std::size_t closest_to_mean(const std::vector<double>& values, double mean) {
  if (values.empty()) throw ArgumentError("closest_to_mean of an empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (std::abs(values[i] - mean) < std::abs(values[best] - mean)) best = i;
  }
  return best;
}

unsigned threads_from_env() {
  const char* env = std::getenv("SPECTRAL_BENCH_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) return 1;
  return static_cast<unsigned>(v);
}

namespace {

[[noreturn]] void rethrow_with_context(std::exception_ptr error, const std::string& context) {
  try {
    std::rethrow_exception(error);
  } catch (const ParseError& e) {
    throw ParseError(context + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(context + ": " + e.what());
  } catch (const ArgumentError& e) {
    throw ArgumentError(context + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(context + ": " + e.what());
  } catch (const StateError& e) {
    throw StateError(context + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(context + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(context + ": " + e.what());
  }
}

/// Runs body(0..count-1) on up to `threads` workers. Errors are collected
/// per index and the lowest-index one is rethrown with `label` context.
void for_each_fold(std::size_t count, unsigned threads, const char* label,
                   const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) guarded(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) rethrow_with_context(errors[i], std::string(label) + " " + std::to_string(i));
  }
}

FoldPlan make_plan(const LabeledDataset& data, const CvOptions& options) {
  Rng rng(options.seed);
  return options.stratified ? stratified_fold_indices(data.labels, options.k, rng)
                            : shuffled_fold_indices(data.size(), options.k, rng);
}

struct Evaluation {
  std::unique_ptr<Classifier> model;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  double train_seconds = 0.0;
};

Evaluation train_and_evaluate(const ClassifierFactory& factory, const Params& params,
                              const LabeledDataset& data, const std::vector<std::size_t>& train_idx,
                              const std::vector<std::size_t>& eval_idx, std::uint64_t seed) {
  const LabeledDataset train = data.subset(train_idx);
  const LabeledDataset test = data.subset(eval_idx);
  Evaluation ev;
  ev.model = factory(params);
  Rng rng(seed);
  const auto start = std::chrono::steady_clock::now();
  ev.model->fit(train, rng);
  ev.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::vector<int> predicted = ev.model->predict(test.rows);
  ev.confusion = confusion(predicted, test.labels, data.num_classes());
  ev.accuracy = static_cast<double>(ev.confusion.correct()) / static_cast<double>(test.size());
  return ev;
}

void notify(const CvOptions& options, std::mutex& mutex, TrainEvent event) {
  if (!options.observer) return;
  std::lock_guard lock(mutex);
  options.observer(event);
}

CvResult assemble(std::string algorithm, bool nested, FoldPlan plan, std::vector<FoldResult> folds,
                  std::vector<std::unique_ptr<Classifier>> models, const LabeledDataset& data) {
  CvResult result;
  CvReport& r = result.report;
  r.algorithm = std::move(algorithm);
  r.nested = nested;
  r.plan = std::move(plan);
  r.folds = std::move(folds);
  r.class_names = data.class_names;
  const auto acc = r.accuracies();
  const MeanStd ms = mean_std(acc);
  r.mean = ms.mean;
  r.std = ms.std;
  r.representative_fold = closest_to_mean(acc, r.mean);
  result.representative = std::move(models[r.representative_fold]);
  return result;
}

}  // namespace

CvResult cross_validate(const ClassifierFactory& factory, const Params& params,
                        const LabeledDataset& data, const CvOptions& options,
                        const std::string& algorithm) {
  data.validate();
  const FoldPlan plan = make_plan(data, options);
  const std::size_t k = plan.k();
  std::vector<FoldResult> folds(k);
  std::vector<std::unique_ptr<Classifier>> models(k);
  std::mutex observer_mutex;

  for_each_fold(k, options.threads, "fold", [&](std::size_t f) {
    const std::size_t excluded[] = {f};
    const auto train_idx = plan.complement(excluded);
    const auto& test_idx = plan.folds[f];
    notify(options, observer_mutex, {f, std::nullopt, 0, train_idx, test_idx});
    Evaluation ev = train_and_evaluate(factory, params, data, train_idx, test_idx,
                                       Rng::child_seed(options.seed, f));
    FoldResult& out = folds[f];
    out.fold = f;
    out.train_size = train_idx.size();
    out.test_size = test_idx.size();
    out.accuracy = ev.accuracy;
    out.metrics = diagnosis_metrics(ev.confusion);
    out.confusion = std::move(ev.confusion);
    out.train_seconds = ev.train_seconds;
    out.params = ev.model->params();
    models[f] = std::move(ev.model);
  });
  return assemble(algorithm, false, plan, std::move(folds), std::move(models), data);
}

CvResult nested_cross_validate(const ClassifierFactory& factory, const HyperparamGrid& grid,
                               const LabeledDataset& data, const CvOptions& options,
                               const std::string& algorithm) {
  data.validate();
  const std::vector<Params> candidates = grid.candidates();
  if (options.k < 3) {
    throw ArgumentError("nested cross-validation needs k >= 3 so inner training folds are non-empty");
  }
  const FoldPlan plan = make_plan(data, options);
  const std::size_t k = plan.k();
  std::vector<FoldResult> folds(k);
  std::vector<std::unique_ptr<Classifier>> models(k);
  std::mutex observer_mutex;

  for_each_fold(k, options.threads, "fold", [&](std::size_t f) {
    const std::uint64_t fold_seed = Rng::child_seed(options.seed, f);
    FoldResult& out = folds[f];
    out.fold = f;
    std::size_t best = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      CandidateScore score;
      score.params = candidates[c];
      for (std::size_t v = 0; v < k; ++v) {
        if (v == f) continue;
        const std::size_t excluded[] = {f, v};
        const auto train_idx = plan.complement(excluded);
        notify(options, observer_mutex, {f, v, c, train_idx, plan.folds[v]});
        const Evaluation ev = train_and_evaluate(factory, candidates[c], data, train_idx, plan.folds[v],
                                                 Rng::child_seed(fold_seed, 1 + c * k + v));
        score.fold_accuracies.push_back(ev.accuracy);
      }
      const MeanStd ms = mean_std(score.fold_accuracies);
      score.mean = ms.mean;
      score.std = ms.std;
      if (c > 0 && score.mean > out.candidates[best].mean) best = c;
      out.candidates.push_back(std::move(score));
    }
    out.chosen_candidate = best;

    const std::size_t excluded[] = {f};
    const auto train_idx = plan.complement(excluded);
    const auto& test_idx = plan.folds[f];
    notify(options, observer_mutex, {f, std::nullopt, best, train_idx, test_idx});
    Evaluation ev = train_and_evaluate(factory, candidates[best], data, train_idx, test_idx, fold_seed);
    out.train_size = train_idx.size();
    out.test_size = test_idx.size();
    out.accuracy = ev.accuracy;
    out.metrics = diagnosis_metrics(ev.confusion);
    out.confusion = std::move(ev.confusion);
    out.train_seconds = ev.train_seconds;
    out.params = ev.model->params();
    models[f] = std::move(ev.model);
  });
  return assemble(algorithm, true, plan, std::move(folds), std::move(models), data);
}

}  // namespace spectral

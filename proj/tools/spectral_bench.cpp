// spectral-bench: command-line front end.
//
// Exit codes: 0 success, 1 unexpected failure, 2 invalid configuration or
// usage, 3 dataset problems (unreadable, malformed or invalid input files).

#include "spectral/checkpoint.hpp"
#include "spectral/classifier.hpp"
#include "spectral/cv.hpp"
#include "spectral/dataset.hpp"
#include "spectral/error.hpp"
#include "spectral/report.hpp"
#include "spectral/savgol.hpp"
#include "spectral/tsne.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spectral;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kData = 3 };

struct ExitError : std::runtime_error {
  ExitError(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

[[noreturn]] void usage_error(const std::string& msg) { throw ExitError(kUsage, msg); }

std::string read_text(const fs::path& path, int code_on_failure) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExitError(code_on_failure, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const fs::path& path, int code_on_failure) {
  try {
    return json::parse(read_text(path, code_on_failure));
  } catch (const json::exception& e) {
    throw ExitError(code_on_failure, path.string() + ": invalid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ExitError(kFailure, "cannot write " + path.string());
}

/// Writes into a sibling temporary directory and renames it over `target`
/// only after `fill` succeeded, so a failed run leaves nothing behind.
template <typename Fill>
void write_directory(const fs::path& target, bool force, Fill&& fill) {
  if (fs::exists(target) && !force) {
    usage_error("output " + target.string() + " already exists (use --force to replace it)");
  }
  const fs::path parent = target.parent_path().empty() ? fs::path(".") : target.parent_path();
  fs::create_directories(parent);
  const fs::path tmp = parent / ("." + target.filename().string() + ".tmp-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directory(tmp);
  try {
    fill(tmp);
  } catch (...) {
    fs::remove_all(tmp);
    throw;
  }
  if (fs::exists(target)) fs::remove_all(target);
  fs::rename(tmp, target);
}

void write_file_atomically(const fs::path& target, const std::string& text) {
  const fs::path parent = target.parent_path().empty() ? fs::path(".") : target.parent_path();
  fs::create_directories(parent);
  const fs::path tmp = parent / ("." + target.filename().string() + ".tmp-" + std::to_string(::getpid()));
  write_text(tmp, text);
  fs::rename(tmp, target);
}

LabeledDataset load_dataset(const fs::path& path) {
  if (!fs::exists(path)) throw ExitError(kData, "dataset " + path.string() + " does not exist");
  try {
    LabeledDataset data = load_csv(path);
    data.validate();
    return data;
  } catch (const Error& e) {
    throw ExitError(kData, e.what());
  }
}

// --- configuration ------------------------------------------------------

/// Flags shared by the subcommands that may filter their input.
struct SgFlags {
  std::string method = "sg";
  int window = 11, degree = 3, deriv = 2;
  double delta = 1.0;

  void add_to(CLI::App* app, bool with_method) {
    if (with_method) {
      app->add_option("--preprocess", method, "none or sg (default " + method + ")")
          ->check(CLI::IsMember({"none", "sg"}));
    }
    app->add_option("--window", window, "SG window length (odd)");
    app->add_option("--degree", degree, "SG polynomial degree");
    app->add_option("--deriv", deriv, "SG derivative order");
    app->add_option("--delta", delta, "sample spacing for derivatives");
  }

  /// Layers flags given on the command line over `base` (from a config file).
  json resolve(const CLI::App* app, json base) const {
    if (!base.is_object()) base = json::object();
    json out = {{"method", base.value("method", method)},
                {"window", base.value("window", 11)},
                {"degree", base.value("degree", 3)},
                {"deriv", base.value("deriv", 2)},
                {"delta", base.value("delta", 1.0)}};
    if (app->get_option_no_throw("--preprocess") && app->count("--preprocess")) out["method"] = method;
    if (app->count("--window")) out["window"] = window;
    if (app->count("--degree")) out["degree"] = degree;
    if (app->count("--deriv")) out["deriv"] = deriv;
    if (app->count("--delta")) out["delta"] = delta;
    if (out["method"] != "sg" && out["method"] != "none") usage_error("preprocess must be none or sg");
    return out;
  }
};

SgFilterSpec sg_spec(const json& pre) {
  SgFilterSpec spec;
  spec.window = pre.at("window").get<int>();
  spec.degree = pre.at("degree").get<int>();
  spec.deriv_order = pre.at("deriv").get<int>();
  spec.delta = pre.at("delta").get<double>();
  try {
    spec.validate();
  } catch (const Error& e) {
    usage_error(e.what());
  }
  return spec;
}

LabeledDataset preprocess(const LabeledDataset& data, const json& pre) {
  if (pre.value("method", std::string("none")) != "sg") return data;
  const SgFilterSpec spec = sg_spec(pre);
  try {
    return apply_sg(data, spec);
  } catch (const Error& e) {
    throw ExitError(kData, e.what());
  }
}

/// `key=value`; the value is parsed as JSON when it is valid JSON and kept
/// as a string otherwise, so `--param loss=weighted` works unquoted.
std::pair<std::string, json> parse_param(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) usage_error("--param expects key=value, got `" + text + "`");
  const std::string value = text.substr(eq + 1);
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;
  return {text.substr(0, eq), parsed};
}

json default_grid(const std::string& algo) {
  if (algo == "knn") return {{"k_neighbors", {2, 3, 5, 10, 15, 20, 24}}};
  if (algo == "plsda") return {{"variance_target", {0.9, 0.95, 0.99}}};
  usage_error("nested-cv with --algo " + algo + " needs --grid <file>");
}

struct ExperimentFlags {
  std::string config_path, data, name, algo = "cnn", grid_path, out;
  std::vector<std::string> params;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  bool stratified = false, embed = false, force = false;
  double perplexity = 30.0;
  SgFlags sg;
};

void add_experiment_flags(CLI::App* app, ExperimentFlags& f, bool nested) {
  app->add_option("data", f.data, "dataset CSV");
  app->add_option("--config", f.config_path, "JSON experiment config; flags override its values");
  app->add_option("--name", f.name, "dataset name used in reports (default: file stem)");
  app->add_option("--algo", f.algo, "cnn, knn or plsda")->check(CLI::IsMember({"cnn", "knn", "plsda"}));
  app->add_option("--param", f.params, "hyperparameter key=value (repeatable)");
  app->add_option("--k", f.k, "number of folds");
  app->add_option("--seed", f.seed, "random seed");
  app->add_flag("--stratified", f.stratified, "class-balanced folds instead of plain shuffled splits");
  app->add_flag("--embed", f.embed, "also write a t-SNE embedding of the input rows");
  app->add_option("--perplexity", f.perplexity, "t-SNE perplexity for --embed");
  app->add_option("--out", f.out, "output directory")->required();
  app->add_flag("--force", f.force, "replace an existing output directory");
  if (nested) app->add_option("--grid", f.grid_path, "JSON grid {axis: [values...]}");
  f.sg.add_to(app, true);
}

/// Defaults, then the config file, then flags.
json resolve_experiment(const CLI::App* app, const ExperimentFlags& f, bool nested) {
  json file = json::object();
  if (!f.config_path.empty()) file = read_json(f.config_path, kUsage);
  if (!file.is_object()) usage_error("config must be a JSON object");

  json cfg;
  cfg["mode"] = nested ? "nested-cv" : "cv";
  cfg["data"] = app->count("data") ? f.data : file.value("data", std::string());
  if (cfg["data"].get<std::string>().empty()) usage_error("no dataset given");
  cfg["name"] = app->count("--name") ? f.name
                                      : file.value("name", fs::path(cfg["data"].get<std::string>()).stem().string());
  cfg["algo"] = app->count("--algo") ? f.algo : file.value("algo", f.algo);
  cfg["k"] = app->count("--k") ? f.k : file.value("k", f.k);
  cfg["seed"] = app->count("--seed") ? f.seed : file.value("seed", f.seed);
  cfg["stratified"] = app->count("--stratified") ? f.stratified : file.value("stratified", false);
  cfg["preprocess"] = f.sg.resolve(app, file.value("preprocess", json::object()));

  json params = file.value("params", json::object());
  if (!params.is_object()) usage_error("config `params` must be an object");
  for (const auto& p : f.params) {
    auto [key, value] = parse_param(p);
    params[key] = value;
  }
  cfg["params"] = params;

  if (nested) {
    json grid;
    if (app->count("--grid")) {
      grid = read_json(f.grid_path, kUsage);
    } else if (file.contains("grid")) {
      grid = file["grid"];
    } else {
      grid = default_grid(cfg["algo"]);
    }
    cfg["grid"] = grid;
  }

  const bool embed = app->count("--embed") ? f.embed : file.value("embed", false);
  if (embed) {
    cfg["embed"] = {{"perplexity", app->count("--perplexity") ? f.perplexity : file.value("perplexity", 30.0)},
                    {"iterations", 1000},
                    {"seed", cfg["seed"]}};
  }
  if (cfg["k"].get<std::size_t>() < 2) usage_error("--k must be >= 2");
  if (nested && cfg["k"].get<std::size_t>() < 3) usage_error("nested-cv needs --k >= 3");
  return cfg;
}

std::string embed_csv(const TsneResult& r, const LabeledDataset& data, const json& header) {
  std::ostringstream out;
  out << "# tsne " << header.dump() << '\n';
  out << "# final_kl: " << format_number(r.kl_trace.back().kl) << '\n';
  out << "x,y,label\n";
  for (Eigen::Index i = 0; i < r.embedding.rows(); ++i) {
    out << format_number(r.embedding(i, 0)) << ',' << format_number(r.embedding(i, 1)) << ','
        << data.class_names[data.labels[i]] << '\n';
  }
  return out.str();
}

TsneConfig tsne_config(const json& e) {
  TsneConfig c;
  c.perplexity = e.at("perplexity").get<double>();
  c.iterations = e.at("iterations").get<int>();
  c.seed = e.at("seed").get<std::uint64_t>();
  return c;
}

// --- subcommands --------------------------------------------------------

int run_experiment(const CLI::App* app, const ExperimentFlags& f, bool nested) {
  const json cfg = resolve_experiment(app, f, nested);
  const std::string algo = cfg["algo"];
  const ClassifierFactory factory = builtin_factory(algo);

  // Check parameters before touching the data so a typo fails fast.
  std::optional<HyperparamGrid> grid;
  if (nested) {
    grid = HyperparamGrid::from_json(cfg["grid"]);
    for (auto& [key, value] : cfg["params"].items()) grid->base[key] = value;
    for (const auto& candidate : grid->candidates()) factory(candidate);
  } else {
    factory(cfg["params"]);
  }

  const LabeledDataset raw = load_dataset(cfg["data"].get<std::string>());
  const LabeledDataset data = preprocess(raw, cfg["preprocess"]);
  if (cfg["k"].get<std::size_t>() > data.size()) {
    usage_error("--k " + cfg["k"].dump() + " exceeds the " + std::to_string(data.size()) + " samples");
  }
  if (cfg.contains("embed") && cfg["embed"]["perplexity"].get<double>() >= data.size()) {
    usage_error("--perplexity must be below the sample count");
  }

  CvOptions options;
  options.k = cfg["k"];
  options.seed = cfg["seed"];
  options.stratified = cfg["stratified"];
  options.threads = threads_from_env();

  CvResult result = nested ? nested_cross_validate(factory, *grid, data, options, algo)
                           : cross_validate(factory, cfg["params"], data, options, algo);

  ReportContext context{cfg, cfg["name"].get<std::string>(), cfg["data"].get<std::string>()};
  const json report = build_report(result.report, data, context);

  Checkpoint ckpt = result.representative->to_checkpoint();
  ckpt.meta["preprocess"] = cfg["preprocess"];
  ckpt.meta["representative_fold"] = result.report.representative_fold;

  std::optional<std::string> embedding;
  if (cfg.contains("embed")) {
    embedding = embed_csv(tsne_embed(data.rows, tsne_config(cfg["embed"])), data, cfg["embed"]);
  }

  write_directory(f.out, f.force, [&](const fs::path& dir) {
    write_text(dir / "report.json", report.dump(2) + "\n");
    write_text(dir / "folds.csv", folds_csv(result.report));
    for (const auto& fold : result.report.folds) {
      write_text(dir / ("confusion_fold" + std::to_string(fold.fold) + ".csv"),
                 confusion_csv(fold.confusion, data.class_names));
    }
    ckpt.save(dir / "model.ckpt");
    if (embedding) write_text(dir / "embed.csv", *embedding);
  });

  std::printf("%s %s on %s: accuracy %.4f +- %.4f over %zu folds (representative fold %zu)\n",
              cfg["mode"].get<std::string>().c_str(), algo.c_str(),
              cfg["name"].get<std::string>().c_str(), result.report.mean, result.report.std,
              result.report.folds.size(), result.report.representative_fold);
  return kOk;
}

int run_preprocess(const CLI::App* app, const SgFlags& sg, const std::string& in, const std::string& out) {
  json pre = sg.resolve(app, json::object());
  pre["method"] = "sg";
  const LabeledDataset data = preprocess(load_dataset(in), pre);
  write_file_atomically(out, format_csv(data));
  return kOk;
}

int run_embed(const CLI::App* app, const SgFlags& sg, const std::string& in, const std::string& out,
              const TsneConfig& base) {
  const json pre = sg.resolve(app, json::object());
  const LabeledDataset data = preprocess(load_dataset(in), pre);
  if (base.perplexity >= data.size()) usage_error("--perplexity must be below the sample count");
  const json header = {{"perplexity", base.perplexity},
                       {"iterations", base.iterations},
                       {"seed", base.seed},
                       {"preprocess", pre}};
  write_file_atomically(out, embed_csv(tsne_embed(data.rows, base), data, header));
  return kOk;
}

int run_predict(const std::string& model_path, const std::string& in, const std::string& out,
                const std::string& features_path) {
  Checkpoint ckpt;
  try {
    ckpt = Checkpoint::load(model_path);
  } catch (const Error& e) {
    throw ExitError(kData, e.what());
  }
  const std::unique_ptr<Classifier> model = load_classifier(ckpt);
  const LabeledDataset data = preprocess(load_dataset(in), ckpt.meta.value("preprocess", json::object()));
  if (model->grid().size() != data.grid.size()) {
    throw ExitError(kData, "dataset has " + std::to_string(data.grid.size()) +
                               " columns after preprocessing, model expects " +
                               std::to_string(model->grid().size()));
  }
  // Map the file's class names onto the model's ids.
  std::vector<int> truth(data.size(), -1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string& name = data.class_names[data.labels[i]];
    for (std::size_t c = 0; c < model->class_names().size(); ++c) {
      if (model->class_names()[c] == name) truth[i] = static_cast<int>(c);
    }
  }
  const std::vector<int> predicted = model->predict(data.rows);
  std::ostringstream csv;
  csv << "index,label,predicted\n";
  std::size_t correct = 0, known = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    csv << i << ',' << data.class_names[data.labels[i]] << ',' << model->class_names()[predicted[i]] << '\n';
    if (truth[i] >= 0) {
      ++known;
      correct += truth[i] == predicted[i];
    }
  }
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    write_file_atomically(out, csv.str());
  }
  if (known) std::fprintf(stderr, "accuracy %.4f on %zu labelled samples\n", double(correct) / known, known);

  if (!features_path.empty()) {
    Eigen::MatrixXd features;
    if (const auto* cnn = dynamic_cast<const CnnClassifier*>(model.get())) {
      features = cnn->model().features(data.rows);
    } else if (const auto* pls = dynamic_cast<const PlsClassifier*>(model.get())) {
      features = pls_predict(pls->model(), data.rows).scores;
    } else {
      usage_error("--dump-features needs a cnn or plsda checkpoint");
    }
    LabeledDataset dump;
    dump.rows = features;
    dump.grid = Eigen::VectorXd::LinSpaced(features.cols(), 0.0, double(features.cols() - 1));
    dump.labels = data.labels;
    dump.class_names = data.class_names;
    dump.unit = "feature index";
    write_file_atomically(features_path, format_csv(dump));
  }
  return kOk;
}

int run_compare(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<json> reports;
  for (const auto& in : inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) p /= "report.json";
    reports.push_back(read_json(p, kData));
  }
  std::vector<CompareRow> rows;
  try {
    rows = compare_reports(reports);
  } catch (const FormatError& e) {
    throw ExitError(kData, e.what());
  }
  std::cout << compare_table(rows);
  if (!out.empty()) write_file_atomically(out, compare_csv(rows));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral classification benchmark: SG filtering, 1D-CNN, KNN, PLS-DA, t-SNE"};
  app.require_subcommand(1);

  auto* pre = app.add_subcommand("preprocess", "apply a Savitzky-Golay filter to a dataset CSV");
  SgFlags pre_sg;
  std::string pre_in, pre_out;
  pre_sg.add_to(pre, false);
  pre->add_option("input", pre_in, "dataset CSV")->required();
  pre->add_option("output", pre_out, "filtered dataset CSV")->required();

  ExperimentFlags cv_flags, nested_flags;
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation with fixed hyperparameters");
  add_experiment_flags(cv, cv_flags, false);
  auto* nested = app.add_subcommand("nested-cv", "cross-validation with an inner hyperparameter search");
  add_experiment_flags(nested, nested_flags, true);

  auto* embed = app.add_subcommand("embed", "two-dimensional t-SNE embedding of a dataset");
  SgFlags embed_sg;
  embed_sg.method = "none";
  std::string embed_in, embed_out;
  TsneConfig tsne;
  embed_sg.add_to(embed, true);
  embed->add_option("input", embed_in, "dataset CSV")->required();
  embed->add_option("--out", embed_out, "output CSV (x,y,label)")->required();
  embed->add_option("--perplexity", tsne.perplexity, "target perplexity");
  embed->add_option("--iterations", tsne.iterations, "gradient steps");
  embed->add_option("--seed", tsne.seed, "random seed");

  auto* predict = app.add_subcommand("predict", "classify a dataset with a saved model");
  std::string model_path, predict_in, predict_out, features_out;
  predict->add_option("--model", model_path, "model.ckpt from cv or nested-cv")->required();
  predict->add_option("input", predict_in, "dataset CSV")->required();
  predict->add_option("--out", predict_out, "predictions CSV (default: stdout)");
  predict->add_option("--dump-features", features_out,
                      "write the model's learned features as a dataset CSV");

  auto* compare = app.add_subcommand("compare", "tabulate several reports side by side");
  std::vector<std::string> compare_in;
  std::string compare_out;
  compare->add_option("reports", compare_in, "report.json files or run directories")->required();
  compare->add_option("--out", compare_out, "also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*pre) return run_preprocess(pre, pre_sg, pre_in, pre_out);
    if (*cv) return run_experiment(cv, cv_flags, false);
    if (*nested) return run_experiment(nested, nested_flags, true);
    if (*embed) return run_embed(embed, embed_sg, embed_in, embed_out, tsne);
    if (*predict) return run_predict(model_path, predict_in, predict_out, features_out);
    if (*compare) return run_compare(compare_in, compare_out);
  } catch (const ExitError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code;
  } catch (const ArgumentError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kUsage;
}

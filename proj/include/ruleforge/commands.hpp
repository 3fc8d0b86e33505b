#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ruleforge/ciu.hpp"
#include "ruleforge/csv.hpp"
#include "ruleforge/dataset.hpp"
#include "ruleforge/errors.hpp"
#include "ruleforge/evolve.hpp"
#include "ruleforge/json_io.hpp"
#include "ruleforge/metrics.hpp"
#include "ruleforge/models.hpp"
#include "ruleforge/rules.hpp"
#include "ruleforge/surrogate.hpp"
#include "ruleforge/version.hpp"

namespace ruleforge {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Manifests

inline std::string fnv1a_digest(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

inline std::string file_digest(const std::string& path) {
  return fnv1a_digest(read_text_file(path));
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Wall time lives here, never in report.csv, so reruns stay byte-identical.
inline void write_manifest(const std::string& out_dir, const std::string& command,
                           const Json& params, const std::vector<std::string>& input_paths,
                           double wall_time_s) {
  Json manifest;
  manifest["command"] = command;
  manifest["version"] = std::string(kVersion);
  manifest["params"] = params;
  Json inputs = Json::object();
  for (const auto& path : input_paths) inputs[path] = file_digest(path);
  manifest["inputs"] = std::move(inputs);
  manifest["wall_time_s"] = wall_time_s;
  save_json_file((fs::path(out_dir) / "manifest.json").string(), manifest);
}

// ---------------------------------------------------------------------------
// Model bundles (model + threshold + replayable preprocessing pipeline)

struct ModelBundle {
  std::string kind;  // "logit" | "gbdt"
  std::optional<LogisticModel> logit;
  std::optional<BoostedTreesModel> gbdt;
  ThresholdCalibration calibration;
  Variant variant = Variant::d1;
  SplitSpec split;
  Preprocessor preprocessor;

  const PredictionOracle& oracle() const {
    if (kind == "logit") return *logit;
    if (kind == "gbdt") return *gbdt;
    throw DataError("model bundle: unknown kind: " + kind);
  }
};

inline void save_model_bundle(const std::string& path, const ModelBundle& bundle) {
  Json j;
  j["format"] = "ruleforge-model-v1";
  j["kind"] = bundle.kind;
  j["feature_names"] = bundle.oracle().feature_names();
  j["model"] = bundle.kind == "logit" ? logistic_to_json(*bundle.logit)
                                      : gbdt_to_json(*bundle.gbdt);
  j["calibration"] = {{"threshold", bundle.calibration.threshold},
                      {"gmean", bundle.calibration.gmean}};
  j["pipeline"] = {{"variant", variant_name(bundle.variant)},
                   {"split",
                    {{"train", bundle.split.train},
                     {"validation", bundle.split.validation},
                     {"test", bundle.split.test},
                     {"seed", bundle.split.seed}}},
                   {"preprocessor", preprocessor_to_json(bundle.preprocessor)}};
  save_json_file(path, j);
}

inline ModelBundle load_model_bundle(const std::string& path) {
  const Json j = load_json_file(path);
  try {
    if (j.value("format", std::string()) != "ruleforge-model-v1")
      throw DataError(path + ": not a ruleforge model file");
    ModelBundle bundle;
    bundle.kind = j.at("kind").get<std::string>();
    auto names = j.at("feature_names").get<std::vector<std::string>>();
    if (bundle.kind == "logit")
      bundle.logit = logistic_from_json(j.at("model"), std::move(names));
    else if (bundle.kind == "gbdt")
      bundle.gbdt = gbdt_from_json(j.at("model"), std::move(names));
    else
      throw DataError(path + ": unknown model kind: " + bundle.kind);
    bundle.calibration.threshold = j.at("calibration").at("threshold").get<double>();
    bundle.calibration.gmean = j.at("calibration").at("gmean").get<double>();
    const Json& pipe = j.at("pipeline");
    bundle.variant = parse_variant(pipe.at("variant").get<std::string>());
    bundle.split.train = pipe.at("split").at("train").get<double>();
    bundle.split.validation = pipe.at("split").at("validation").get<double>();
    bundle.split.test = pipe.at("split").at("test").get<double>();
    bundle.split.seed = pipe.at("split").at("seed").get<std::uint64_t>();
    bundle.preprocessor = preprocessor_from_json(pipe.at("preprocessor"));
    return bundle;
  } catch (const Json::exception& e) {
    throw DataError(path + ": malformed model file: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Pipeline replay

struct Prepared {
  FeatureMatrix train_X, val_X, test_X;
  std::vector<int> train_y, val_y, test_y;
  Preprocessor preprocessor;
};

/// Variant -> firm-stratified split -> train-fitted (or stored) preprocessor.
inline Prepared prepare_pipeline(const TabularDataset& data, const DatasetSchema& schema,
                                 Variant variant, const SplitSpec& split_spec,
                                 const Preprocessor* stored = nullptr) {
  const TabularDataset variant_ds = build_variant(data, variant);
  Split split = stratified_group_split(variant_ds, split_spec);
  Prepared out;
  out.preprocessor =
      stored ? *stored : fit_preprocessor(split.train, schema.capped, schema.signed_log);
  out.train_X = apply_preprocessor(out.preprocessor, split.train).feature_matrix();
  out.val_X = apply_preprocessor(out.preprocessor, split.validation).feature_matrix();
  out.test_X = apply_preprocessor(out.preprocessor, split.test).feature_matrix();
  out.train_y = split.train.labels;
  out.val_y = split.validation.labels;
  out.test_y = split.test.labels;
  return out;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string config_path;  // optional; defaults when empty
  std::string out_dir;
  std::optional<std::uint64_t> seed;  // overrides config seed when set
};

inline SynthConfig resolve_synth_config(const SynthOptions& opts) {
  SynthConfig cfg;
  if (!opts.config_path.empty()) cfg = synth_config_from_json(load_json_file(opts.config_path));
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

inline void cmd_synth(const SynthOptions& opts) {
  const Stopwatch watch;
  const SynthConfig cfg = resolve_synth_config(opts);
  const SynthPanel panel = synth_panel(cfg);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  write_dataset_csv(panel.data, panel.schema, (out / "panel.csv").string());
  save_json_file((out / "panel.schema.json").string(), schema_to_json(panel.schema));
  write_text_file((out / "planted_rules.txt").string(), format_rules(panel.planted));
  std::vector<std::string> inputs;
  if (!opts.config_path.empty()) inputs.push_back(opts.config_path);
  write_manifest(opts.out_dir, "synth", synth_config_to_json(cfg), inputs, watch.seconds());
  std::cout << "synth: " << panel.data.n_rows() << " rows -> " << (out / "panel.csv").string()
            << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string data_path;
  std::string schema_path;
  std::string kind = "gbdt";  // "gbdt" | "logit"
  Variant variant = Variant::d1;
  std::uint64_t seed = 0;
  bool grid = false;
  std::string out_dir;
};

namespace detail {

struct FitResult {
  ModelBundle bundle;
  double val_pr_auc = 0.0;
  double val_bal_acc = 0.0;
};

inline FitResult fit_candidate(const Prepared& prep, const TrainOptions& opts,
                               const GbdtSettings* gbdt_settings,
                               const LogisticSettings* logit_settings) {
  FitResult result;
  result.bundle.kind = opts.kind;
  result.bundle.variant = opts.variant;
  result.bundle.split = SplitSpec{0.7, 0.2, 0.1, opts.seed};
  result.bundle.preprocessor = prep.preprocessor;
  if (gbdt_settings)
    result.bundle.gbdt = train_gbdt(prep.train_X, prep.train_y, *gbdt_settings);
  else
    result.bundle.logit = train_logistic(prep.train_X, prep.train_y, *logit_settings);

  const PredictionOracle& oracle = result.bundle.oracle();
  const std::vector<double> val_scores = oracle.predict_all(prep.val_X);
  result.bundle.calibration = gmean_threshold(prep.val_y, val_scores);
  result.val_pr_auc = pr_auc(prep.val_y, val_scores);
  std::vector<int> val_pred(val_scores.size());
  for (std::size_t i = 0; i < val_scores.size(); ++i)
    val_pred[i] = val_scores[i] >= result.bundle.calibration.threshold ? 1 : 0;
  result.val_bal_acc = balanced_accuracy(prep.val_y, val_pred);
  return result;
}

}  // namespace detail

struct TrainOutcome {
  ModelBundle bundle;
  double test_balanced_accuracy = 0.0;
  double test_pr_auc = 0.0;
};

inline TrainOutcome run_training(const TabularDataset& data, const DatasetSchema& schema,
                                 const TrainOptions& opts) {
  if (opts.kind != "gbdt" && opts.kind != "logit")
    throw UsageError("unknown model kind: " + opts.kind + " (expected gbdt or logit)");
  const SplitSpec split_spec{0.7, 0.2, 0.1, opts.seed};
  const Prepared prep = prepare_pipeline(data, schema, opts.variant, split_spec);

  std::vector<detail::FitResult> candidates;
  if (opts.kind == "gbdt") {
    std::vector<GbdtSettings> grid;
    if (opts.grid) {
      for (int depth : {3, 4, 6})
        for (double lr : {0.05, 0.1, 0.3}) {
          GbdtSettings s;
          s.depth = depth;
          s.learning_rate = lr;
          s.seed = opts.seed;
          grid.push_back(s);
        }
    } else {
      GbdtSettings s;
      s.seed = opts.seed;
      grid.push_back(s);
    }
    for (const auto& s : grid) candidates.push_back(detail::fit_candidate(prep, opts, &s, nullptr));
  } else {
    std::vector<LogisticSettings> grid;
    if (opts.grid) {
      for (double l2 : {1e-4, 1e-3, 1e-2})
        for (double lr : {0.05, 0.1}) {
          LogisticSettings s;
          s.l2 = l2;
          s.learning_rate = lr;
          s.seed = opts.seed;
          grid.push_back(s);
        }
    } else {
      LogisticSettings s;
      s.seed = opts.seed;
      grid.push_back(s);
    }
    for (const auto& s : grid) candidates.push_back(detail::fit_candidate(prep, opts, nullptr, &s));
  }

  // Validation-set selection: PR-AUC first, balanced accuracy as tie-break.
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].val_pr_auc > candidates[best].val_pr_auc ||
        (candidates[i].val_pr_auc == candidates[best].val_pr_auc &&
         candidates[i].val_bal_acc > candidates[best].val_bal_acc))
      best = i;
  }

  TrainOutcome outcome;
  outcome.bundle = std::move(candidates[best].bundle);
  const PredictionOracle& oracle = outcome.bundle.oracle();
  const std::vector<double> test_scores = oracle.predict_all(prep.test_X);
  std::vector<int> test_pred(test_scores.size());
  for (std::size_t i = 0; i < test_scores.size(); ++i)
    test_pred[i] = test_scores[i] >= outcome.bundle.calibration.threshold ? 1 : 0;
  outcome.test_balanced_accuracy = balanced_accuracy(prep.test_y, test_pred);
  outcome.test_pr_auc = pr_auc(prep.test_y, test_scores);
  return outcome;
}

inline void cmd_train(const TrainOptions& opts) {
  const Stopwatch watch;
  const DatasetSchema schema = load_schema(opts.schema_path);
  const TabularDataset data = load_csv(opts.data_path, schema);
  const TrainOutcome outcome = run_training(data, schema, opts);

  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  save_model_bundle((out / "model.json").string(), outcome.bundle);

  Json metrics;
  metrics["type"] = "model";
  metrics["method"] = opts.kind;
  metrics["variant"] = variant_name(opts.variant);
  metrics["seed"] = opts.seed;
  metrics["balanced_accuracy"] = outcome.test_balanced_accuracy;
  metrics["pr_auc"] = outcome.test_pr_auc;
  metrics["threshold"] = outcome.bundle.calibration.threshold;
  metrics["gmean_validation"] = outcome.bundle.calibration.gmean;
  save_json_file((out / "metrics.json").string(), metrics);

  Json params;
  params["kind"] = opts.kind;
  params["variant"] = variant_name(opts.variant);
  params["seed"] = opts.seed;
  params["grid"] = opts.grid;
  write_manifest(opts.out_dir, "train", params, {opts.data_path, opts.schema_path},
                 watch.seconds());
  std::cout << "train[" << opts.kind << "," << variant_name(opts.variant)
            << "]: test balanced_accuracy=" << format_double(outcome.test_balanced_accuracy)
            << " pr_auc=" << format_double(outcome.test_pr_auc)
            << " threshold=" << format_double(outcome.bundle.calibration.threshold) << "\n";
}

// ---------------------------------------------------------------------------
// ciu

struct CiuOptions {
  std::string model_path;
  std::string data_path;
  std::string schema_path;
  std::size_t sample_size = 200;
  int n_grid = 32;
  std::uint64_t seed = 0;
  std::string out_dir;
};

inline std::string importance_csv_text(const GlobalImportance& g) {
  std::vector<std::size_t> order(g.features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (g.weight[a] != g.weight[b]) return g.weight[a] > g.weight[b];
    return g.features[a] < g.features[b];
  });
  std::string out = "feature,mean_ci,normalized_importance,rank\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t i = order[r];
    out += g.features[i] + "," + format_double(g.mean_ci[i]) + "," +
           format_double(g.weight[i]) + "," + std::to_string(r + 1) + "\n";
  }
  return out;
}

/// Reads an importance CSV back, re-aligned to the given feature order.
inline GlobalImportance load_importance_csv(const std::string& path,
                                            const std::vector<std::string>& feature_order) {
  const CsvTable table = read_csv(path);
  const int f = table.column("feature"), m = table.column("mean_ci"),
            w = table.column("normalized_importance");
  if (f < 0 || m < 0 || w < 0)
    throw DataError(path + ": expected columns feature,mean_ci,normalized_importance,rank");
  std::map<std::string, std::pair<double, double>> rows;
  for (const auto& row : table.rows)
    rows[row[static_cast<std::size_t>(f)]] = {
        parse_double_or_nan(row[static_cast<std::size_t>(m)]),
        parse_double_or_nan(row[static_cast<std::size_t>(w)])};

  GlobalImportance g;
  g.features = feature_order;
  double total_ci = 0.0;
  for (const auto& name : feature_order) {
    const auto it = rows.find(name);
    if (it == rows.end()) throw DataError(path + ": missing importance for feature " + name);
    g.mean_ci.push_back(it->second.first);
    g.weight.push_back(it->second.second);
    total_ci += it->second.first;
  }
  g.degenerate = total_ci == 0.0;
  return g;
}

inline GlobalImportance run_ciu(const ModelBundle& bundle, const TabularDataset& data,
                                const CiuOptions& opts) {
  const Prepared prep =
      prepare_pipeline(data, DatasetSchema{}, bundle.variant, bundle.split, &bundle.preprocessor);
  return ciu_global(bundle.oracle(), prep.train_X, opts.sample_size, opts.n_grid, opts.seed);
}

inline void cmd_ciu(const CiuOptions& opts) {
  const Stopwatch watch;
  const ModelBundle bundle = load_model_bundle(opts.model_path);
  const DatasetSchema schema = load_schema(opts.schema_path);
  const TabularDataset data = load_csv(opts.data_path, schema);
  const GlobalImportance g = run_ciu(bundle, data, opts);

  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  write_text_file((out / "importance.csv").string(), importance_csv_text(g));
  if (g.degenerate)
    std::cerr << "warning: constant oracle; uniform importance emitted\n";

  Json params;
  params["sample_size"] = opts.sample_size;
  params["n_grid"] = opts.n_grid;
  params["seed"] = opts.seed;
  params["degenerate_uniform"] = g.degenerate;
  write_manifest(opts.out_dir, "ciu", params,
                 {opts.model_path, opts.data_path, opts.schema_path}, watch.seconds());
  std::cout << "ciu: importance for " << g.features.size() << " features -> "
            << (out / "importance.csv").string() << "\n";
}

// ---------------------------------------------------------------------------
// extract

struct ExtractOptions {
  std::string method = "dexire-evo";  // "dexire" | "dexire-evo"
  std::string model_path;
  std::string data_path;
  std::string schema_path;
  std::string predictions_path;  // snapshot mode: data_path holds features CSV
  double snapshot_threshold = 0.5;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string evo_config_path;
  std::string importance_path;
  int cart_max_depth = 5;
  std::size_t cart_min_leaf = 20;
  std::size_t ciu_sample = 200;
  int ciu_grid = 32;
  bool compare = false;
  std::vector<std::uint64_t> compare_seeds = {1, 2, 3, 4, 5};
};

struct ExtractOutcome {
  DecisionList rules;  // canonical (as serialized)
  double fidelity_train = 0.0;
  double fidelity_test = 0.0;
  double alignment = 0.0;
  std::optional<double> balanced_accuracy_true = std::nullopt;  // vs true test labels
  Complexity size;
  ParetoArchive archive;  // evo only; dexire leaves it empty
};

namespace detail {

struct ExtractionProblem {
  FeatureMatrix train_X, test_X;
  std::vector<int> y_hat_train, y_hat_test;
  std::vector<int> true_test_y;
  GlobalImportance importance;
  bool snapshot = false;
  std::string variant_label = "snapshot";
};

inline ExtractionProblem build_problem(const ExtractOptions& opts) {
  ExtractionProblem prob;
  if (!opts.predictions_path.empty()) {
    // Snapshot mode: no split, no true labels, uniform importance fallback.
    const OracleSnapshot snap = load_oracle_snapshot(opts.data_path, opts.predictions_path);
    prob.snapshot = true;
    prob.train_X = snap.data.feature_matrix();
    prob.test_X = prob.train_X;
    prob.y_hat_train.resize(snap.probabilities.size());
    for (std::size_t i = 0; i < snap.probabilities.size(); ++i)
      prob.y_hat_train[i] = snap.probabilities[i] >= opts.snapshot_threshold ? 1 : 0;
    prob.y_hat_test = prob.y_hat_train;
    prob.true_test_y.clear();
    prob.importance = GlobalImportance::uniform(prob.train_X.names);
    return prob;
  }

  if (opts.model_path.empty())
    throw UsageError("extract: either --model or --predictions is required");
  const ModelBundle bundle = load_model_bundle(opts.model_path);
  prob.variant_label = variant_name(bundle.variant);
  const DatasetSchema schema = load_schema(opts.schema_path);
  const TabularDataset data = load_csv(opts.data_path, schema);
  const Prepared prep =
      prepare_pipeline(data, schema, bundle.variant, bundle.split, &bundle.preprocessor);
  const PredictionOracle& oracle = bundle.oracle();

  prob.train_X = prep.train_X;
  prob.test_X = prep.test_X;
  prob.y_hat_train = oracle.hard_labels(prep.train_X, bundle.calibration.threshold);
  prob.y_hat_test = oracle.hard_labels(prep.test_X, bundle.calibration.threshold);
  prob.true_test_y = prep.test_y;
  if (!opts.importance_path.empty())
    prob.importance = load_importance_csv(opts.importance_path, prob.train_X.names);
  else
    prob.importance =
        ciu_global(oracle, prep.train_X, opts.ciu_sample, opts.ciu_grid, opts.seed);
  return prob;
}

}  // namespace detail

inline ExtractOutcome run_extraction(const detail::ExtractionProblem& prob,
                                     const ExtractOptions& opts) {
  if (opts.method != "dexire" && opts.method != "dexire-evo")
    throw UsageError("unknown extraction method: " + opts.method +
                     " (expected dexire or dexire-evo)");

  const CartTree cart = fit_cart(
      prob.train_X, prob.y_hat_train,
      CartSettings{opts.cart_max_depth, opts.cart_min_leaf, opts.seed});
  const DecisionList baseline = tree_to_rules(cart, prob.train_X.names);

  ExtractOutcome outcome;
  DecisionList selected = baseline;
  if (opts.method == "dexire-evo") {
    EvoParams params;
    if (!opts.evo_config_path.empty())
      params = evo_params_from_json(load_json_file(opts.evo_config_path));
    params.seed = opts.seed;
    outcome.archive = evolve(prob.train_X, prob.y_hat_train, prob.importance, params, baseline);
    selected = select_final(outcome.archive).genome;
  }

  outcome.rules = canonicalize(selected);
  outcome.fidelity_train = fidelity(outcome.rules, prob.train_X, prob.y_hat_train);
  outcome.fidelity_test = fidelity(outcome.rules, prob.test_X, prob.y_hat_test);
  outcome.alignment = ciu_alignment(outcome.rules, prob.importance);
  outcome.size = complexity(outcome.rules);
  if (!prob.true_test_y.empty() && has_both_classes(prob.true_test_y)) {
    const std::vector<int> preds = CompiledList(outcome.rules, prob.test_X.names).predict(prob.test_X);
    outcome.balanced_accuracy_true = balanced_accuracy(prob.true_test_y, preds);
  }
  return outcome;
}

inline void write_extract_artifacts(const std::string& out_dir, const ExtractOptions& opts,
                                    const ExtractOutcome& outcome,
                                    const std::string& variant_label) {
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_text_file((out / "rules.txt").string(), format_rules(outcome.rules));
  save_json_file((out / "rules.json").string(), rules_to_json(outcome.rules));

  std::string front = "fidelity,ciu_alignment,n_rules,n_predicates\n";
  if (opts.method == "dexire-evo") {
    std::vector<const Individual*> members;
    for (const auto& ind : outcome.archive.front) members.push_back(&ind);
    std::sort(members.begin(), members.end(), [](const Individual* a, const Individual* b) {
      if (a->fidelity != b->fidelity) return a->fidelity > b->fidelity;
      return a->alignment > b->alignment;
    });
    for (const Individual* ind : members) {
      const Complexity c = complexity(ind->genome);
      front += format_double(ind->fidelity) + "," + format_double(ind->alignment) + "," +
               std::to_string(c.n_rules) + "," + std::to_string(c.n_predicates) + "\n";
    }
  } else {
    front += format_double(outcome.fidelity_train) + "," + format_double(outcome.alignment) +
             "," + std::to_string(outcome.size.n_rules) + "," +
             std::to_string(outcome.size.n_predicates) + "\n";
  }
  write_text_file((out / "pareto_front.csv").string(), front);

  if (opts.method == "dexire-evo") {
    std::string hv = "generation,hypervolume\n";
    for (std::size_t g = 0; g < outcome.archive.hypervolume_history.size(); ++g)
      hv += std::to_string(g) + "," + format_double(outcome.archive.hypervolume_history[g]) + "\n";
    write_text_file((out / "hypervolume.csv").string(), hv);
  }

  Json metrics;
  metrics["type"] = "rules";
  metrics["method"] = opts.method;
  metrics["variant"] = variant_label;
  metrics["seed"] = opts.seed;
  metrics["fidelity"] = outcome.fidelity_test;
  metrics["fidelity_train"] = outcome.fidelity_train;
  metrics["ciu_alignment"] = outcome.alignment;
  if (outcome.balanced_accuracy_true)
    metrics["balanced_accuracy"] = *outcome.balanced_accuracy_true;
  metrics["n_rules"] = outcome.size.n_rules;
  metrics["n_predicates"] = outcome.size.n_predicates;
  save_json_file((out / "metrics.json").string(), metrics);
}

inline void cmd_extract(const ExtractOptions& opts);

namespace detail {

inline void run_compare(const ExtractOptions& opts) {
  for (const char* variant : {"d1", "d2", "d3"}) {
    for (std::uint64_t seed : opts.compare_seeds) {
      const fs::path base = fs::path(opts.out_dir) / variant / ("seed" + std::to_string(seed));
      TrainOptions train;
      train.data_path = opts.data_path;
      train.schema_path = opts.schema_path;
      train.kind = "gbdt";
      train.variant = parse_variant(variant);
      train.seed = seed;
      train.out_dir = base.string();
      cmd_train(train);

      for (const char* method : {"dexire", "dexire-evo"}) {
        ExtractOptions sub = opts;
        sub.compare = false;
        sub.method = method;
        sub.model_path = (base / "model.json").string();
        sub.seed = seed;
        sub.out_dir = (base / method).string();
        cmd_extract(sub);
      }
    }
  }
}

}  // namespace detail

inline void cmd_extract(const ExtractOptions& opts) {
  if (opts.method != "dexire" && opts.method != "dexire-evo")
    throw UsageError("unknown extraction method: " + opts.method +
                     " (expected dexire or dexire-evo)");
  if (opts.compare) {
    detail::run_compare(opts);
    return;
  }
  const Stopwatch watch;
  const detail::ExtractionProblem prob = detail::build_problem(opts);
  const ExtractOutcome outcome = run_extraction(prob, opts);
  write_extract_artifacts(opts.out_dir, opts, outcome, prob.variant_label);

  Json params;
  params["method"] = opts.method;
  params["seed"] = opts.seed;
  params["cart_max_depth"] = opts.cart_max_depth;
  params["cart_min_leaf"] = opts.cart_min_leaf;
  params["ciu_sample"] = opts.ciu_sample;
  params["ciu_grid"] = opts.ciu_grid;
  if (!opts.evo_config_path.empty()) params["evo_config"] = opts.evo_config_path;
  std::vector<std::string> inputs{opts.data_path};
  if (!opts.model_path.empty()) inputs.push_back(opts.model_path);
  if (!opts.schema_path.empty()) inputs.push_back(opts.schema_path);
  if (!opts.predictions_path.empty()) inputs.push_back(opts.predictions_path);
  if (!opts.importance_path.empty()) inputs.push_back(opts.importance_path);
  write_manifest(opts.out_dir, "extract", params, inputs, watch.seconds());

  std::cout << "extract[" << opts.method << "]: test fidelity=" << format_double(outcome.fidelity_test)
            << " ciu_alignment=" << format_double(outcome.alignment) << " rules="
            << outcome.size.n_rules << " predicates=" << outcome.size.n_predicates << "\n";
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::string run_dir;
  std::string out_csv;  // default: <run_dir>/report.csv
};

struct RunRecord {
  std::string variant;
  std::string method;
  std::uint64_t seed = 0;
  std::optional<double> balanced_accuracy, pr_auc, fidelity, ciu_alignment;
  std::optional<std::size_t> n_rules, n_predicates;
  std::optional<double> wall_time_s;  // manifest only; not part of report.csv
};

struct RunReport {
  std::vector<RunRecord> records;
};

inline RunReport collect_report(const std::string& run_dir) {
  if (!fs::exists(run_dir) || !fs::is_directory(run_dir))
    throw DataError("run directory does not exist: " + run_dir);
  std::vector<fs::path> metric_files;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "metrics.json")
      metric_files.push_back(entry.path());
  }
  std::sort(metric_files.begin(), metric_files.end());

  RunReport report;
  for (const auto& path : metric_files) {
    const Json j = load_json_file(path.string());
    RunRecord rec;
    rec.variant = j.value("variant", std::string());
    rec.method = j.value("method", std::string());
    rec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("balanced_accuracy")) rec.balanced_accuracy = j["balanced_accuracy"].get<double>();
    if (j.contains("pr_auc")) rec.pr_auc = j["pr_auc"].get<double>();
    if (j.contains("fidelity")) rec.fidelity = j["fidelity"].get<double>();
    if (j.contains("ciu_alignment")) rec.ciu_alignment = j["ciu_alignment"].get<double>();
    if (j.contains("n_rules")) rec.n_rules = j["n_rules"].get<std::size_t>();
    if (j.contains("n_predicates")) rec.n_predicates = j["n_predicates"].get<std::size_t>();
    const fs::path manifest = path.parent_path() / "manifest.json";
    if (fs::exists(manifest)) {
      const Json m = load_json_file(manifest.string());
      if (m.contains("wall_time_s")) rec.wall_time_s = m["wall_time_s"].get<double>();
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

inline std::string report_csv_text(const RunReport& report) {
  const auto cell = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  const auto count_cell = [](const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : std::string();
  };
  std::string out =
      "variant,method,seed,balanced_accuracy,pr_auc,fidelity,ciu_alignment,n_rules,n_predicates\n";
  for (const auto& r : report.records) {
    out += r.variant + "," + r.method + "," + std::to_string(r.seed) + "," +
           cell(r.balanced_accuracy) + "," + cell(r.pr_auc) + "," + cell(r.fidelity) + "," +
           cell(r.ciu_alignment) + "," + count_cell(r.n_rules) + "," +
           count_cell(r.n_predicates) + "\n";
  }
  return out;
}

inline RunReport cmd_report(const ReportOptions& opts) {
  const RunReport report = collect_report(opts.run_dir);
  const std::string csv = report_csv_text(report);
  const std::string out_csv =
      opts.out_csv.empty() ? (fs::path(opts.run_dir) / "report.csv").string() : opts.out_csv;
  write_text_file(out_csv, csv);

  std::cout << "variant   method      seed  bal_acc  pr_auc   fidelity  ciu_align  rules  preds  wall_s\n";
  const auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", *v);
    return std::string(buf);
  };
  for (const auto& r : report.records) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-9s %-11s %-5llu %-8s %-8s %-9s %-10s %-6s %-6s %s\n",
                  r.variant.c_str(), r.method.c_str(),
                  static_cast<unsigned long long>(r.seed), fmt(r.balanced_accuracy).c_str(),
                  fmt(r.pr_auc).c_str(), fmt(r.fidelity).c_str(), fmt(r.ciu_alignment).c_str(),
                  r.n_rules ? std::to_string(*r.n_rules).c_str() : "-",
                  r.n_predicates ? std::to_string(*r.n_predicates).c_str() : "-",
                  fmt(r.wall_time_s).c_str());
    std::cout << line;
  }
  std::cout << "report: " << report.records.size() << " record(s) -> " << out_csv << "\n";
  return report;
}

}  // namespace ruleforge

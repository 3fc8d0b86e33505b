#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ruleforge/dataset.hpp"
#include "ruleforge/errors.hpp"
#include "ruleforge/evolve.hpp"
#include "ruleforge/metrics.hpp"
#include "ruleforge/models.hpp"
#include "ruleforge/rules.hpp"

namespace ruleforge {

using Json = nlohmann::json;

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

inline void save_json_file(const std::string& path, const Json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << value.dump(2) << "\n";
  if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Dataset schema sidecar

inline Json schema_to_json(const DatasetSchema& schema) {
  Json j;
  j["label"] = schema.label_col;
  j["group"] = schema.group_col;
  j["time"] = schema.time_col;
  if (schema.label_values)
    j["label_values"] = {{"negative", schema.label_values->first},
                         {"positive", schema.label_values->second}};
  j["columns"] = Json::array();
  for (const auto& col : schema.columns) {
    j["columns"].push_back({{"name", col.name},
                            {"kind", col.kind == ColumnKind::numeric ? "numeric" : "categorical"},
                            {"role", col.role == ColumnRole::feature ? "feature" : "excluded"},
                            {"context", col.context_flag}});
  }
  j["capped"] = schema.capped;
  j["signed_log"] = schema.signed_log;
  return j;
}

inline DatasetSchema schema_from_json(const Json& j) {
  try {
    DatasetSchema schema;
    schema.label_col = j.at("label").get<std::string>();
    schema.group_col = j.at("group").get<std::string>();
    schema.time_col = j.at("time").get<std::string>();
    if (j.contains("label_values"))
      schema.label_values = {j["label_values"].at("negative").get<std::string>(),
                             j["label_values"].at("positive").get<std::string>()};
    for (const auto& col : j.at("columns")) {
      ColumnMeta meta;
      meta.name = col.at("name").get<std::string>();
      const std::string kind = col.at("kind").get<std::string>();
      if (kind == "numeric") meta.kind = ColumnKind::numeric;
      else if (kind == "categorical") meta.kind = ColumnKind::categorical;
      else throw DataError("schema: unknown column kind: " + kind);
      const std::string role = col.value("role", std::string("feature"));
      if (role == "feature") meta.role = ColumnRole::feature;
      else if (role == "excluded") meta.role = ColumnRole::excluded;
      else throw DataError("schema: unknown column role: " + role);
      meta.context_flag = col.value("context", false);
      schema.columns.push_back(std::move(meta));
    }
    if (j.contains("capped")) schema.capped = j["capped"].get<std::vector<std::string>>();
    if (j.contains("signed_log"))
      schema.signed_log = j["signed_log"].get<std::vector<std::string>>();
    return schema;
  } catch (const Json::exception& e) {
    throw DataError(std::string("schema JSON: ") + e.what());
  }
}

inline DatasetSchema load_schema(const std::string& path) {
  return schema_from_json(load_json_file(path));
}

// ---------------------------------------------------------------------------
// Preprocessor

inline Json preprocessor_to_json(const Preprocessor& p) {
  Json j;
  j["signature"] = Json::array();
  for (const auto& [name, kind] : p.signature)
    j["signature"].push_back(
        {{"name", name}, {"kind", kind == ColumnKind::numeric ? "numeric" : "categorical"}});
  j["medians"] = p.medians;
  j["caps"] = p.caps;
  j["signed_log"] = p.signed_log_columns;
  j["categories"] = p.categories;
  return j;
}

inline Preprocessor preprocessor_from_json(const Json& j) {
  try {
    Preprocessor p;
    for (const auto& entry : j.at("signature"))
      p.signature.emplace_back(entry.at("name").get<std::string>(),
                               entry.at("kind").get<std::string>() == "numeric"
                                   ? ColumnKind::numeric
                                   : ColumnKind::categorical);
    p.medians = j.at("medians").get<std::map<std::string, double>>();
    p.caps = j.at("caps").get<std::map<std::string, double>>();
    p.signed_log_columns = j.at("signed_log").get<std::vector<std::string>>();
    p.categories = j.at("categories").get<std::map<std::string, std::vector<std::string>>>();
    return p;
  } catch (const Json::exception& e) {
    throw DataError(std::string("preprocessor JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Models

inline Json logistic_to_json(const LogisticModel& model) {
  return {{"weights", model.weights}, {"bias", model.bias}};
}

inline LogisticModel logistic_from_json(const Json& j, std::vector<std::string> names) {
  LogisticModel model;
  model.weights = j.at("weights").get<std::vector<double>>();
  model.bias = j.at("bias").get<double>();
  model.set_feature_names(std::move(names));
  if (model.weights.size() != model.feature_names().size())
    throw DataError("model JSON: weight count does not match feature names");
  return model;
}

inline Json gbdt_to_json(const BoostedTreesModel& model) {
  Json trees = Json::array();
  for (const auto& tree : model.trees) {
    Json nodes = Json::array();
    for (const auto& n : tree)
      nodes.push_back({{"f", n.feature},
                       {"t", n.threshold},
                       {"l", n.left},
                       {"r", n.right},
                       {"w", n.value}});
    trees.push_back(std::move(nodes));
  }
  return {{"base_score", model.base_score},
          {"learning_rate", model.learning_rate},
          {"depth_limit", model.depth_limit},
          {"lambda", model.lambda},
          {"trees", std::move(trees)}};
}

inline BoostedTreesModel gbdt_from_json(const Json& j, std::vector<std::string> names) {
  BoostedTreesModel model;
  model.base_score = j.at("base_score").get<double>();
  model.learning_rate = j.at("learning_rate").get<double>();
  model.depth_limit = j.at("depth_limit").get<int>();
  model.lambda = j.at("lambda").get<double>();
  for (const auto& tree_json : j.at("trees")) {
    BoostedTreesModel::Tree tree;
    for (const auto& n : tree_json) {
      BoostedTreesModel::Node node;
      node.feature = n.at("f").get<int>();
      node.threshold = n.at("t").get<double>();
      node.left = n.at("l").get<int>();
      node.right = n.at("r").get<int>();
      node.value = n.at("w").get<double>();
      tree.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  model.set_feature_names(std::move(names));
  return model;
}

// ---------------------------------------------------------------------------
// Rules (machine-readable mirror of the text grammar)

inline Json rules_to_json(const DecisionList& list) {
  Json rules = Json::array();
  for (const auto& rule : list.rules) {
    Json preds = Json::array();
    for (const auto& pred : rule.predicates)
      preds.push_back({{"feature", pred.feature},
                       {"op", std::string(cmp_text(pred.op))},
                       {"threshold", pred.threshold}});
    rules.push_back({{"predicates", std::move(preds)}});
  }
  return {{"rules", std::move(rules)}, {"default_class", 0}};
}

inline DecisionList rules_from_json(const Json& j) {
  try {
    DecisionList list;
    for (const auto& rule_json : j.at("rules")) {
      Rule rule;
      for (const auto& pred_json : rule_json.at("predicates")) {
        Predicate pred;
        pred.feature = pred_json.at("feature").get<std::string>();
        const std::string op = pred_json.at("op").get<std::string>();
        if (op == "<=") pred.op = Cmp::le;
        else if (op == "<") pred.op = Cmp::lt;
        else if (op == ">=") pred.op = Cmp::ge;
        else if (op == ">") pred.op = Cmp::gt;
        else throw DataError("rules JSON: unknown comparator: " + op);
        pred.threshold = pred_json.at("threshold").get<double>();
        rule.predicates.push_back(std::move(pred));
      }
      list.rules.push_back(std::move(rule));
    }
    check_invariants(list);
    return list;
  } catch (const Json::exception& e) {
    throw DataError(std::string("rules JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Generator and evolution configs

inline SynthConfig synth_config_from_json(const Json& j) {
  try {
    SynthConfig cfg;
    cfg.n_firms = j.value("n_firms", cfg.n_firms);
    cfg.years = j.value("years", cfg.years);
    cfg.firm_default_rate = j.value("firm_default_rate", cfg.firm_default_rate);
    cfg.noise_rate = j.value("noise_rate", cfg.noise_rate);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.drift = j.value("drift", cfg.drift);
    return cfg;
  } catch (const Json::exception& e) {
    throw DataError(std::string("generator config JSON: ") + e.what());
  }
}

inline Json synth_config_to_json(const SynthConfig& cfg) {
  return {{"n_firms", cfg.n_firms},      {"years", cfg.years},
          {"firm_default_rate", cfg.firm_default_rate}, {"noise_rate", cfg.noise_rate},
          {"seed", cfg.seed},            {"drift", cfg.drift}};
}

inline EvoParams evo_params_from_json(const Json& j) {
  try {
    EvoParams p;
    p.population_size = j.value("population_size", p.population_size);
    p.max_generations = j.value("max_generations", p.max_generations);
    p.crossover_prob = j.value("crossover_prob", p.crossover_prob);
    p.mutation_prob = j.value("mutation_prob", p.mutation_prob);
    p.patience = j.value("patience", p.patience);
    p.n_elites = j.value("n_elites", p.n_elites);
    p.tournament_size = j.value("tournament_size", p.tournament_size);
    p.seed = j.value("seed", p.seed);
    if (j.contains("mutation_weights")) {
      const auto w = j["mutation_weights"].get<std::vector<double>>();
      if (w.size() != p.mutation_weights.size())
        throw DataError("evo config: mutation_weights must have 5 entries");
      std::copy(w.begin(), w.end(), p.mutation_weights.begin());
    }
    p.threshold_scale = j.value("threshold_scale", p.threshold_scale);
    p.ciu_guided_sampling = j.value("ciu_guided_sampling", p.ciu_guided_sampling);
    p.eval_subsample = j.value("eval_subsample", p.eval_subsample);
    return p;
  } catch (const Json::exception& e) {
    throw DataError(std::string("evo config JSON: ") + e.what());
  }
}

inline Json evo_params_to_json(const EvoParams& p) {
  return {{"population_size", p.population_size},
          {"max_generations", p.max_generations},
          {"crossover_prob", p.crossover_prob},
          {"mutation_prob", p.mutation_prob},
          {"patience", p.patience},
          {"n_elites", p.n_elites},
          {"tournament_size", p.tournament_size},
          {"seed", p.seed},
          {"mutation_weights", p.mutation_weights},
          {"threshold_scale", p.threshold_scale},
          {"ciu_guided_sampling", p.ciu_guided_sampling},
          {"eval_subsample", p.eval_subsample}};
}

}  // namespace ruleforge

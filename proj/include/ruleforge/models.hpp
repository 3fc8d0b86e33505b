#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ruleforge/csv.hpp"
#include "ruleforge/dataset.hpp"
#include "ruleforge/errors.hpp"
#include "ruleforge/feature_matrix.hpp"
#include "ruleforge/metrics.hpp"

namespace ruleforge {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

/// The black box being explained: maps a fully preprocessed feature row to a
/// probability of class 1. Deterministic for identical input.
class PredictionOracle {
 public:
  virtual ~PredictionOracle() = default;
  virtual double predict(std::span<const double> row) const = 0;
  virtual const std::string& name() const = 0;
  virtual const std::vector<std::string>& feature_names() const = 0;

  std::vector<double> predict_all(const FeatureMatrix& X) const {
    if (X.names != feature_names())
      throw ContractError("oracle '" + name() + "' feature schema does not match the matrix");
    std::vector<double> out(X.n_rows);
    for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = predict(X.row(i));
    return out;
  }

  std::vector<int> hard_labels(const FeatureMatrix& X, double threshold) const {
    std::vector<int> out(X.n_rows);
    const std::vector<double> p = predict_all(X);
    for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = p[i] >= threshold ? 1 : 0;
    return out;
  }
};

// ---------------------------------------------------------------------------
// Logistic regression

class LogisticModel final : public PredictionOracle {
 public:
  std::vector<double> weights;
  double bias = 0.0;

  LogisticModel() = default;
  LogisticModel(std::vector<std::string> names, std::vector<double> w, double b)
      : weights(std::move(w)), names_(std::move(names)) {
    bias = b;
  }

  double predict(std::span<const double> row) const override {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * row[j];
    return sigmoid(z);
  }

  const std::string& name() const override { return display_name_; }
  const std::vector<std::string>& feature_names() const override { return names_; }
  void set_feature_names(std::vector<std::string> names) { names_ = std::move(names); }

 private:
  std::vector<std::string> names_;
  std::string display_name_ = "logit";
};

struct LogisticSettings {
  double l2 = 1e-3;
  double learning_rate = 0.1;
  int epochs = 500;
  std::uint64_t seed = 0;
};

/// L2-regularized mean logistic loss (bias unregularized):
///   L = mean_i [softplus(z_i) - y_i z_i] + 0.5 * l2 * ||w||^2
inline double logistic_loss(const FeatureMatrix& X, std::span<const int> y,
                            std::span<const double> w, double bias, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < X.n_rows; ++i) {
    double z = bias;
    const auto row = X.row(i);
    for (std::size_t j = 0; j < X.n_cols; ++j) z += w[j] * row[j];
    loss += softplus(z) - double(y[i]) * z;
  }
  loss /= double(X.n_rows);
  for (double wj : w) loss += 0.5 * l2 * wj * wj;
  return loss;
}

inline void logistic_gradient(const FeatureMatrix& X, std::span<const int> y,
                              std::span<const double> w, double bias, double l2,
                              std::span<double> grad_w, double& grad_b) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  grad_b = 0.0;
  for (std::size_t i = 0; i < X.n_rows; ++i) {
    double z = bias;
    const auto row = X.row(i);
    for (std::size_t j = 0; j < X.n_cols; ++j) z += w[j] * row[j];
    const double resid = sigmoid(z) - double(y[i]);
    for (std::size_t j = 0; j < X.n_cols; ++j) grad_w[j] += resid * row[j];
    grad_b += resid;
  }
  const double inv_n = 1.0 / double(X.n_rows);
  for (std::size_t j = 0; j < X.n_cols; ++j) grad_w[j] = grad_w[j] * inv_n + l2 * w[j];
  grad_b *= inv_n;
}

// Full-batch gradient descent. Features are standardized internally for
// stability at the default learning rate; parameters are folded back to the
// original scale, so the returned model scores raw preprocessed rows.
inline LogisticModel train_logistic(const FeatureMatrix& X, std::span<const int> y,
                                    const LogisticSettings& settings,
                                    std::vector<double>* loss_history = nullptr) {
  if (X.n_rows == 0 || X.n_rows != y.size())
    throw ContractError("train_logistic: bad training shapes");
  if (!has_both_classes(y)) throw DataError("single-class training data");

  const FeatureStats stats = FeatureStats::compute(X);
  FeatureMatrix Xs = X;
  std::vector<double> scale(X.n_cols, 1.0);
  for (std::size_t j = 0; j < X.n_cols; ++j)
    scale[j] = stats.stddev[j] > 0.0 ? stats.stddev[j] : 1.0;
  for (std::size_t i = 0; i < X.n_rows; ++i)
    for (std::size_t j = 0; j < X.n_cols; ++j)
      Xs.values[i * X.n_cols + j] = (X.at(i, j) - stats.mean[j]) / scale[j];

  std::vector<double> w(X.n_cols, 0.0), grad(X.n_cols, 0.0);
  double b = 0.0, grad_b = 0.0;
  if (loss_history) {
    loss_history->clear();
    loss_history->push_back(logistic_loss(Xs, y, w, b, settings.l2));
  }
  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    logistic_gradient(Xs, y, w, b, settings.l2, grad, grad_b);
    for (std::size_t j = 0; j < X.n_cols; ++j) w[j] -= settings.learning_rate * grad[j];
    b -= settings.learning_rate * grad_b;
    if (loss_history) {
      const double loss = logistic_loss(Xs, y, w, b, settings.l2);
      if (!std::isfinite(loss)) throw DataError("train_logistic: non-finite loss");
      loss_history->push_back(loss);
    }
  }

  LogisticModel model;
  model.set_feature_names(X.names);
  model.weights.resize(X.n_cols);
  model.bias = b;
  for (std::size_t j = 0; j < X.n_cols; ++j) {
    model.weights[j] = w[j] / scale[j];
    model.bias -= w[j] * stats.mean[j] / scale[j];
  }
  if (!std::isfinite(model.bias)) throw DataError("train_logistic: non-finite parameters");
  return model;
}

// ---------------------------------------------------------------------------
// Gradient-boosted trees (second-order logistic boosting)

struct GbdtSettings {
  int n_trees = 100;
  int depth = 4;
  double learning_rate = 0.1;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 0;
};

class BoostedTreesModel final : public PredictionOracle {
 public:
  struct Node {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf weight
  };
  using Tree = std::vector<Node>;

  double base_score = 0.0;  // log-odds
  double learning_rate = 0.1;
  int depth_limit = 0;
  double lambda = 0.0;
  std::vector<Tree> trees;

  static double tree_value(const Tree& tree, std::span<const double> row) {
    int node = 0;
    while (tree[static_cast<std::size_t>(node)].feature >= 0) {
      const auto& n = tree[static_cast<std::size_t>(node)];
      node = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return tree[static_cast<std::size_t>(node)].value;
  }

  double margin(std::span<const double> row) const {
    double m = base_score;
    for (const auto& tree : trees) m += learning_rate * tree_value(tree, row);
    return m;
  }

  double predict(std::span<const double> row) const override { return sigmoid(margin(row)); }

  const std::string& name() const override { return display_name_; }
  const std::vector<std::string>& feature_names() const override { return names_; }
  void set_feature_names(std::vector<std::string> names) { names_ = std::move(names); }

  /// True when the feature never appears as a split in any tree.
  bool ignores_feature(int feature) const {
    for (const auto& tree : trees)
      for (const auto& node : tree)
        if (node.feature == feature) return false;
    return true;
  }

 private:
  std::vector<std::string> names_;
  std::string display_name_ = "gbdt";
};

namespace detail {

struct GbdtBuilder {
  const FeatureMatrix& X;
  std::span<const double> g;
  std::span<const double> h;
  const GbdtSettings& settings;
  BoostedTreesModel::Tree tree;

  int build(std::vector<std::size_t>& items, int depth) {
    double G = 0.0, H = 0.0;
    for (std::size_t i : items) {
      G += g[i];
      H += h[i];
    }

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;
    if (depth < settings.depth && items.size() >= 2) {
      const double parent_term = G * G / (H + settings.lambda);
      std::vector<std::pair<double, std::size_t>> sorted(items.size());
      for (std::size_t f = 0; f < X.n_cols; ++f) {
        for (std::size_t k = 0; k < items.size(); ++k)
          sorted[k] = {X.at(items[k], f), items[k]};
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double GL = 0.0, HL = 0.0;
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
          GL += g[sorted[k].second];
          HL += h[sorted[k].second];
          if (sorted[k].first == sorted[k + 1].first) continue;
          const double HR = H - HL;
          if (HL < settings.min_child_weight || HR < settings.min_child_weight) continue;
          const double GR = G - GL;
          const double gain = 0.5 * (GL * GL / (HL + settings.lambda) +
                                     GR * GR / (HR + settings.lambda) - parent_term);
          if (gain > best_gain + 1e-12) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (sorted[k].first + sorted[k + 1].first);
          }
        }
      }
    }

    const int id = static_cast<int>(tree.size());
    tree.emplace_back();
    if (best_feature < 0) {
      tree[static_cast<std::size_t>(id)].value = -G / (H + settings.lambda);
      return id;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i : items)
      (X.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right)
          .push_back(i);
    tree[static_cast<std::size_t>(id)].feature = best_feature;
    tree[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    tree[static_cast<std::size_t>(id)].left = l;
    tree[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

}  // namespace detail

// Each round fits a tree to the first/second-order gradients of logistic loss;
// leaf weight w = -G/(H + lambda), standard second-order split gain. Stops
// early (fewer trees) once a round degenerates to an inert single leaf.
inline BoostedTreesModel train_gbdt(const FeatureMatrix& X, std::span<const int> y,
                                    const GbdtSettings& settings,
                                    std::vector<double>* loss_history = nullptr) {
  if (X.n_rows == 0 || X.n_rows != y.size())
    throw ContractError("train_gbdt: bad training shapes");
  if (!has_both_classes(y)) throw DataError("single-class training data");

  BoostedTreesModel model;
  model.set_feature_names(X.names);
  model.learning_rate = settings.learning_rate;
  model.depth_limit = settings.depth;
  model.lambda = settings.lambda;

  double positives = 0.0;
  for (int v : y) positives += v;
  const double p0 = std::clamp(positives / double(X.n_rows), 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(p0 / (1.0 - p0));

  std::vector<double> margin(X.n_rows, model.base_score);
  std::vector<double> g(X.n_rows), h(X.n_rows);
  const auto mean_loss = [&] {
    double loss = 0.0;
    for (std::size_t i = 0; i < X.n_rows; ++i)
      loss += softplus(margin[i]) - double(y[i]) * margin[i];
    return loss / double(X.n_rows);
  };
  if (loss_history) {
    loss_history->clear();
    loss_history->push_back(mean_loss());
  }

  std::vector<std::size_t> all(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i) all[i] = i;

  for (int round = 0; round < settings.n_trees; ++round) {
    for (std::size_t i = 0; i < X.n_rows; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = p - double(y[i]);
      h[i] = std::max(p * (1.0 - p), 1e-16);
    }
    detail::GbdtBuilder builder{X, g, h, settings, {}};
    std::vector<std::size_t> items = all;
    builder.build(items, 0);
    if (builder.tree.size() == 1 && std::abs(builder.tree[0].value) < 1e-12) break;

    for (std::size_t i = 0; i < X.n_rows; ++i)
      margin[i] += settings.learning_rate * BoostedTreesModel::tree_value(builder.tree, X.row(i));
    model.trees.push_back(std::move(builder.tree));

    if (loss_history) {
      const double loss = mean_loss();
      if (!std::isfinite(loss)) throw DataError("train_gbdt: non-finite loss");
      loss_history->push_back(loss);
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Snapshot oracles (external models via (X, p_hat) files)

/// Lookup oracle over stored rows. Querying an unknown row is an error:
/// snapshots do not extrapolate, so CIU perturbation needs a live oracle.
class SnapshotOracle final : public PredictionOracle {
 public:
  SnapshotOracle(std::vector<std::string> names) : names_(std::move(names)) {}

  void add_row(std::vector<double> row, double probability) {
    auto [it, inserted] = table_.try_emplace(std::move(row), probability);
    if (!inserted && it->second != probability)
      throw DataError("conflicting snapshot rows: identical features, different probabilities");
  }

  double predict(std::span<const double> row) const override {
    const auto it = table_.find(std::vector<double>(row.begin(), row.end()));
    if (it == table_.end())
      throw ContractError("snapshot oracle queried with an unknown row");
    return it->second;
  }

  const std::string& name() const override { return display_name_; }
  const std::vector<std::string>& feature_names() const override { return names_; }

 private:
  std::map<std::vector<double>, double> table_;
  std::vector<std::string> names_;
  std::string display_name_ = "snapshot";
};

struct OracleSnapshot {
  TabularDataset data;                       // features only; labels are placeholders
  std::vector<double> probabilities;         // aligned with rows
  std::shared_ptr<SnapshotOracle> oracle;
};

// Features CSV: header of feature names, fully numeric body. Predictions CSV:
// columns (row_id, probability) with row_id equal to the 0-based row order.
inline OracleSnapshot load_oracle_snapshot(const std::string& features_path,
                                           const std::string& predictions_path) {
  const CsvTable features = read_csv(features_path);
  const CsvTable preds = read_csv(predictions_path);

  if (preds.header.size() != 2 || preds.header[0] != "row_id" ||
      preds.header[1] != "probability")
    throw DataError(predictions_path + ": expected header 'row_id,probability'");
  if (preds.rows.size() != features.rows.size())
    throw DataError("snapshot count mismatch: " + std::to_string(features.rows.size()) +
                    " feature rows vs " + std::to_string(preds.rows.size()) +
                    " predictions");

  OracleSnapshot snap;
  snap.oracle = std::make_shared<SnapshotOracle>(features.header);
  for (const auto& name : features.header) {
    TabularDataset::Column c;
    c.meta = {name, ColumnKind::numeric, ColumnRole::feature, false};
    snap.data.cols.push_back(std::move(c));
  }

  for (std::size_t r = 0; r < features.rows.size(); ++r) {
    const double row_id = parse_double_or_nan(preds.rows[r][0]);
    if (row_id != double(r))
      throw DataError(predictions_path + ": row_id out of order at data row " +
                      std::to_string(r + 1));
    const double p = parse_double_or_nan(preds.rows[r][1]);
    if (!(p >= 0.0 && p <= 1.0))
      throw DataError(predictions_path + ": probability outside [0,1] at data row " +
                      std::to_string(r + 1));

    std::vector<double> row(features.header.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = parse_double_or_nan(features.rows[r][c]);
      if (!std::isfinite(row[c]))
        throw DataError(features_path + ": missing or invalid value at data row " +
                        std::to_string(r + 1));
      snap.data.cols[c].num.push_back(row[c]);
    }
    snap.data.labels.push_back(0);
    snap.data.group_id.push_back("R" + std::to_string(r));
    snap.data.time_index.push_back(0);
    snap.probabilities.push_back(p);
    snap.oracle->add_row(std::move(row), p);
  }
  return snap;
}

}  // namespace ruleforge

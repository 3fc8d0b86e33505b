#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ruleforge/errors.hpp"
#include "ruleforge/feature_matrix.hpp"
#include "ruleforge/rules.hpp"

namespace ruleforge {

struct CartSettings {
  int max_depth = 5;          // <= 0 means unbounded
  std::size_t min_leaf = 20;  // minimum training rows per leaf
  std::uint64_t seed = 0;     // unused: gain ties break by feature/threshold
};

/// Binary CART over black-box hard labels. Split nodes route left iff
/// value <= threshold.
struct CartTree {
  struct Node {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int cls = 0;
    std::size_t count0 = 0;
    std::size_t count1 = 0;
  };
  std::vector<Node> nodes;
  int max_depth = 0;

  int predict(std::span<const double> row) const {
    int node = 0;
    while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(node)];
      node = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(node)].cls;
  }

  std::vector<int> predict_all(const FeatureMatrix& X) const {
    std::vector<int> out(X.n_rows);
    for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = predict(X.row(i));
    return out;
  }
};

namespace detail {

struct CartBuilder {
  const FeatureMatrix& X;
  std::span<const int> y;
  const CartSettings& settings;
  CartTree tree;

  static double gini(std::size_t c0, std::size_t c1) {
    const double n = double(c0 + c1);
    if (n == 0.0) return 0.0;
    const double p0 = double(c0) / n, p1 = double(c1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
  }

  int build(std::vector<std::size_t>& items, int depth) {
    std::size_t c0 = 0, c1 = 0;
    for (std::size_t i : items) (y[i] == 1 ? c1 : c0)++;

    const bool depth_ok = settings.max_depth <= 0 || depth < settings.max_depth;
    const bool pure = c0 == 0 || c1 == 0;

    int best_feature = -1;
    double best_threshold = 0.0, best_score = gini(c0, c1);
    if (depth_ok && !pure && items.size() >= 2 * settings.min_leaf) {
      std::vector<std::pair<double, int>> sorted(items.size());
      for (std::size_t f = 0; f < X.n_cols; ++f) {
        for (std::size_t k = 0; k < items.size(); ++k)
          sorted[k] = {X.at(items[k], f), y[items[k]]};
        std::sort(sorted.begin(), sorted.end());
        std::size_t l0 = 0, l1 = 0;
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
          (sorted[k].second == 1 ? l1 : l0)++;
          if (sorted[k].first == sorted[k + 1].first) continue;
          const std::size_t nl = k + 1, nr = sorted.size() - nl;
          if (nl < settings.min_leaf || nr < settings.min_leaf) continue;
          const double weighted =
              (double(nl) * gini(l0, l1) + double(nr) * gini(c0 - l0, c1 - l1)) /
              double(sorted.size());
          if (weighted < best_score - 1e-12) {
            best_score = weighted;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (sorted[k].first + sorted[k + 1].first);
          }
        }
      }
    }

    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(id)].count0 = c0;
    tree.nodes[static_cast<std::size_t>(id)].count1 = c1;
    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(id)].cls = c1 > c0 ? 1 : 0;
      return id;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i : items)
      (X.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right)
          .push_back(i);
    tree.nodes[static_cast<std::size_t>(id)].feature = best_feature;
    tree.nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = l;
    tree.nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

}  // namespace detail

// Greedy Gini induction on (X, y_hat). Split candidates are midpoints between
// consecutive sorted unique values; stops on depth, purity or min_leaf. Exact
// gain ties resolve to the lowest feature index, then the lowest threshold.
// Single-class y_hat yields a single-leaf tree.
inline CartTree fit_cart(const FeatureMatrix& X, std::span<const int> y_hat,
                         const CartSettings& settings) {
  if (X.n_rows == 0) throw DataError("fit_cart: empty input");
  if (X.n_rows != y_hat.size()) throw ContractError("fit_cart: row count mismatch");
  detail::CartBuilder builder{X, y_hat, settings, {}};
  std::vector<std::size_t> items(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i) items[i] = i;
  builder.build(items, 0);
  builder.tree.max_depth = settings.max_depth;
  return builder.tree;
}

// Flattens class-1 root-to-leaf paths into a decision list: left edges become
// (feature <= t), right edges (feature > t). The list predicts exactly what
// the tree predicts on every row.
inline DecisionList tree_to_rules(const CartTree& tree,
                                  const std::vector<std::string>& feature_names) {
  DecisionList list;
  if (tree.nodes.empty()) return list;

  // A single class-1 leaf means the tree predicts 1 everywhere; the list
  // needs at least one predicate, so emit a tautology on the first feature.
  if (tree.nodes[0].feature < 0 && tree.nodes[0].cls == 1) {
    if (feature_names.empty()) throw ContractError("tree_to_rules: no features to bind");
    list.rules.push_back(
        {{{feature_names[0], Cmp::ge, std::numeric_limits<double>::lowest()}}});
    return list;
  }

  std::vector<Predicate> path;
  const auto walk = [&](const auto& self, int id) -> void {
    const auto& node = tree.nodes[static_cast<std::size_t>(id)];
    if (node.feature < 0) {
      if (node.cls == 1) list.rules.push_back({path});
      return;
    }
    const std::string& name = feature_names[static_cast<std::size_t>(node.feature)];
    path.push_back({name, Cmp::le, node.threshold});
    self(self, node.left);
    path.back() = {name, Cmp::gt, node.threshold};
    self(self, node.right);
    path.pop_back();
  };
  walk(walk, 0);
  return simplify(list);
}

}  // namespace ruleforge

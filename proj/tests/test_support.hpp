// Shared test utilities: independent brute-force oracles (kept free of the
// implementation paths they check), fuzz generators and tmp-dir plumbing.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "ruleforge/evolve.hpp"
#include "ruleforge/feature_matrix.hpp"
#include "ruleforge/metrics.hpp"
#include "ruleforge/models.hpp"
#include "ruleforge/rng.hpp"
#include "ruleforge/rules.hpp"

namespace testsupport {

// ---------------------------------------------------------------------------
// Brute-force metric oracles (set-based, O(n^2), no shared code with the
// library's sort-and-scan implementations).

inline double brute_average_precision(const std::vector<int>& y,
                                      const std::vector<double>& scores) {
  std::set<double> unique(scores.begin(), scores.end());
  std::vector<double> thresholds(unique.rbegin(), unique.rend());  // descending
  long long total_pos = 0;
  for (int v : y) total_pos += (v == 1);
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    long long tp = 0, selected = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (scores[i] >= t) {
        ++selected;
        tp += (y[i] == 1);
      }
    }
    const double recall = double(tp) / double(total_pos);
    const double precision = double(tp) / double(selected);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

struct BruteGmean {
  double threshold;
  double gmean;
};

inline BruteGmean brute_gmean_threshold(const std::vector<int>& y,
                                        const std::vector<double>& scores) {
  std::set<double> unique_set(scores.begin(), scores.end());
  std::vector<double> sorted(unique_set.begin(), unique_set.end());
  std::vector<double> candidates;
  const auto clamp01 = [](double t) { return std::clamp(t, 1e-12, 1.0 - 1e-12); };
  candidates.push_back(clamp01(sorted.front() - 0.5));
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
    candidates.push_back(clamp01(0.5 * (sorted[i] + sorted[i + 1])));
  candidates.push_back(clamp01(sorted.back() + 0.5));
  std::sort(candidates.begin(), candidates.end());

  long long p = 0, n = 0;
  for (int v : y) (v == 1 ? p : n)++;
  BruteGmean best{candidates.front(), -1.0};
  for (double t : candidates) {
    long long tp = 0, tn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (scores[i] >= t && y[i] == 1) ++tp;
      if (scores[i] < t && y[i] == 0) ++tn;
    }
    const double g = std::sqrt(double(tp) / double(p) * double(tn) / double(n));
    if (g > best.gmean) best = {t, g};
  }
  return best;
}

inline double brute_balanced_accuracy(const std::vector<int>& y_true,
                                      const std::vector<int>& y_pred) {
  long long tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1)
      (y_pred[i] == 1 ? tp : fn)++;
    else
      (y_pred[i] == 1 ? fp : tn)++;
  }
  return 0.5 * (double(tp) / double(tp + fn) + double(tn) / double(tn + fp));
}

// ---------------------------------------------------------------------------
// Brute-force dominance

inline std::vector<std::size_t> brute_front0(const std::vector<ruleforge::Individual>& pop) {
  std::vector<std::size_t> front;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pop.size() && !dominated; ++j) {
      if (i == j) continue;
      if (pop[j].fidelity >= pop[i].fidelity && pop[j].alignment >= pop[i].alignment &&
          (pop[j].fidelity > pop[i].fidelity || pop[j].alignment > pop[i].alignment))
        dominated = true;
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

// ---------------------------------------------------------------------------
// Fuzz generators

inline ruleforge::FeatureMatrix random_matrix(ruleforge::Rng& rng, std::size_t rows,
                                              std::size_t cols) {
  ruleforge::FeatureMatrix m;
  m.n_rows = rows;
  m.n_cols = cols;
  for (std::size_t c = 0; c < cols; ++c) {
    m.names.push_back("f" + std::to_string(c));
    m.kinds.push_back(ruleforge::ColumnKind::numeric);
  }
  m.values.resize(rows * cols);
  for (auto& v : m.values) v = rng.uniform(-2.0, 2.0);
  return m;
}

inline ruleforge::DecisionList random_list(ruleforge::Rng& rng,
                                           const std::vector<std::string>& features,
                                           bool quantized = true) {
  ruleforge::DecisionList list;
  const long long n_rules = rng.uniform_int(0, 4);
  for (long long r = 0; r < n_rules; ++r) {
    ruleforge::Rule rule;
    const long long n_preds = rng.uniform_int(1, 3);
    for (long long k = 0; k < n_preds; ++k) {
      ruleforge::Predicate pred;
      pred.feature = features[rng.uniform_below(features.size())];
      pred.op = static_cast<ruleforge::Cmp>(rng.uniform_below(4));
      pred.threshold = rng.uniform(-3.0, 3.0);
      if (quantized) pred.threshold = ruleforge::quantize_threshold(pred.threshold);
      rule.predicates.push_back(std::move(pred));
    }
    list.rules.push_back(std::move(rule));
  }
  return list;
}

/// Random (untrained) boosted-trees oracle over cols features in [0,1].
inline ruleforge::BoostedTreesModel random_gbdt(ruleforge::Rng& rng, std::size_t cols,
                                                int n_trees, int depth) {
  ruleforge::BoostedTreesModel model;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < cols; ++c) names.push_back("f" + std::to_string(c));
  model.set_feature_names(names);
  model.base_score = rng.uniform(-1.0, 1.0);
  model.learning_rate = 0.3;
  model.depth_limit = depth;
  model.lambda = 1.0;
  for (int t = 0; t < n_trees; ++t) {
    ruleforge::BoostedTreesModel::Tree tree;
    const auto grow = [&](const auto& self, int level) -> int {
      const int id = static_cast<int>(tree.size());
      tree.emplace_back();
      if (level >= depth || rng.bernoulli(0.3)) {
        tree[static_cast<std::size_t>(id)].value = rng.uniform(-0.8, 0.8);
        return id;
      }
      tree[static_cast<std::size_t>(id)].feature = static_cast<int>(rng.uniform_below(cols));
      tree[static_cast<std::size_t>(id)].threshold = rng.uniform(0.0, 1.0);
      const int l = self(self, level + 1);
      const int r = self(self, level + 1);
      tree[static_cast<std::size_t>(id)].left = l;
      tree[static_cast<std::size_t>(id)].right = r;
      return id;
    };
    grow(grow, 0);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Filesystem

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ruleforge_" + tag + "_" + std::to_string(++counter));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::filesystem::path path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport

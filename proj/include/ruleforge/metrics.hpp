#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "ruleforge/errors.hpp"

namespace ruleforge {

struct Confusion {
  long long tp = 0;
  long long fp = 0;
  long long tn = 0;
  long long fn = 0;

  double sensitivity() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double specificity() const { return tn + fp == 0 ? 0.0 : double(tn) / double(tn + fp); }
};

inline Confusion confusion(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw ContractError("confusion: y_true and y_pred lengths differ");
  Confusion c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] == 1)
      (y_pred[i] == 1 ? c.tp : c.fn)++;
    else
      (y_pred[i] == 1 ? c.fp : c.tn)++;
  }
  return c;
}

inline bool has_both_classes(std::span<const int> y) {
  bool any0 = false, any1 = false;
  for (int v : y) (v == 1 ? any1 : any0) = true;
  return any0 && any1;
}

inline double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw ContractError("accuracy: y_true and y_pred lengths differ");
  if (y_true.empty()) throw ContractError("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i)
    if (y_true[i] == y_pred[i]) ++hits;
  return double(hits) / double(y_true.size());
}

/// Mean of sensitivity and specificity. y_true must contain both classes.
inline double balanced_accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size())
    throw ContractError("balanced_accuracy: y_true and y_pred lengths differ");
  if (!has_both_classes(y_true))
    throw ContractError("balanced_accuracy: y_true is single-class");
  const Confusion c = confusion(y_true, y_pred);
  return 0.5 * (c.sensitivity() + c.specificity());
}

// Average precision: AP = sum_k (R_k - R_{k-1}) * P_k over descending score
// thresholds, with tied scores processed as one block.
inline double pr_auc(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size())
    throw ContractError("pr_auc: y_true and scores lengths differ");
  long long positives = 0;
  for (int v : y_true) positives += (v == 1);
  if (positives == 0) throw ContractError("pr_auc: no positive labels");

  std::vector<std::size_t> order(y_true.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double prev_recall = 0.0;
  long long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double block_score = scores[order[i]];
    while (i < order.size() && scores[order[i]] == block_score) {
      (y_true[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    const double recall = double(tp) / double(positives);
    const double precision = double(tp) / double(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

struct ThresholdCalibration {
  double threshold = 0.5;  // in (0, 1)
  double gmean = 0.0;
};

// G-mean-maximizing decision threshold. Candidates are midpoints between
// consecutive sorted unique scores plus one below the minimum and one above
// the maximum, clamped into (0, 1). Positive prediction: score >= threshold.
// Ties are broken by the lowest threshold.
inline ThresholdCalibration gmean_threshold(std::span<const int> y_true,
                                            std::span<const double> scores) {
  if (y_true.size() != scores.size())
    throw ContractError("gmean_threshold: y_true and scores lengths differ");
  if (!has_both_classes(y_true))
    throw ContractError("gmean_threshold: y_true is single-class");

  std::vector<double> unique(scores.begin(), scores.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());

  const auto clamp01 = [](double t) { return std::clamp(t, 1e-12, 1.0 - 1e-12); };
  std::vector<double> candidates;
  candidates.push_back(clamp01(unique.front() - 0.5));
  for (std::size_t i = 0; i + 1 < unique.size(); ++i)
    candidates.push_back(clamp01(0.5 * (unique[i] + unique[i + 1])));
  candidates.push_back(clamp01(unique.back() + 0.5));
  std::sort(candidates.begin(), candidates.end());

  long long p = 0, n = 0;
  for (int v : y_true) (v == 1 ? p : n)++;

  ThresholdCalibration best;
  best.threshold = candidates.front();
  best.gmean = -1.0;
  for (double t : candidates) {
    long long tp = 0, tn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        if (y_true[i] == 1) ++tp;
      } else {
        if (y_true[i] == 0) ++tn;
      }
    }
    const double g = std::sqrt((double(tp) / double(p)) * (double(tn) / double(n)));
    if (g > best.gmean) {
      best.gmean = g;
      best.threshold = t;
    }
  }
  return best;
}

}  // namespace ruleforge

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ruleforge/errors.hpp"

namespace ruleforge {

/// Global feature-importance ranking: mean contextual importance per feature
/// over a reference sample, normalized to sum to 1.
struct GlobalImportance {
  std::vector<std::string> features;
  std::vector<double> mean_ci;  // raw mean CI per feature
  std::vector<double> weight;   // normalized shares, sum to 1
  std::size_t sample_size = 0;
  bool degenerate = false;  // constant oracle: uniform fallback was emitted

  double weight_of(std::string_view feature) const {
    for (std::size_t i = 0; i < features.size(); ++i)
      if (features[i] == feature) return weight[i];
    throw DataError("feature not covered by importance ranking: " + std::string(feature));
  }

  bool covers(std::string_view feature) const {
    for (const auto& f : features)
      if (f == feature) return true;
    return false;
  }

  static GlobalImportance uniform(std::vector<std::string> names) {
    GlobalImportance g;
    g.features = std::move(names);
    const double share = g.features.empty() ? 0.0 : 1.0 / double(g.features.size());
    g.mean_ci.assign(g.features.size(), 0.0);
    g.weight.assign(g.features.size(), share);
    return g;
  }
};

}  // namespace ruleforge

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ruleforge/dataset.hpp"
#include "ruleforge/errors.hpp"
#include "ruleforge/feature_matrix.hpp"
#include "ruleforge/importance.hpp"
#include "ruleforge/models.hpp"
#include "ruleforge/parallel.hpp"
#include "ruleforge/rng.hpp"

namespace ruleforge {

/// Perturbation ranges per feature: observed [min, max] for numeric columns,
/// the set of observed codes for ordinal-encoded categoricals.
struct FeatureDomain {
  struct Entry {
    ColumnKind kind = ColumnKind::numeric;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> codes;  // categorical only, sorted
  };
  std::vector<std::string> names;
  std::vector<Entry> entries;
};

inline FeatureDomain build_feature_domain(const FeatureMatrix& reference) {
  if (reference.n_rows == 0) throw DataError("build_feature_domain: empty reference");
  FeatureDomain domain;
  domain.names = reference.names;
  domain.entries.resize(reference.n_cols);
  for (std::size_t c = 0; c < reference.n_cols; ++c) {
    auto& e = domain.entries[c];
    e.kind = reference.kinds[c];
    if (e.kind == ColumnKind::numeric) {
      e.lo = e.hi = reference.at(0, c);
      for (std::size_t r = 0; r < reference.n_rows; ++r) {
        e.lo = std::min(e.lo, reference.at(r, c));
        e.hi = std::max(e.hi, reference.at(r, c));
      }
    } else {
      std::set<double> codes;
      for (std::size_t r = 0; r < reference.n_rows; ++r) codes.insert(reference.at(r, c));
      e.codes.assign(codes.begin(), codes.end());
    }
  }
  return domain;
}

inline FeatureDomain build_feature_domain(const TabularDataset& reference) {
  return build_feature_domain(reference.feature_matrix());
}

/// Per-instance contextual importance (CI) and utility (CU) per feature.
struct CiuProfile {
  std::size_t instance_id = 0;
  std::vector<double> ci;  // in [0,1]
  std::vector<double> cu;  // in [0,1]
  double output = 0.0;     // oracle output at the instance
};

// One-feature-at-a-time perturbation against a live oracle. For feature j the
// perturbation set is a uniform n_grid grid over [lo, hi] (numeric) or all
// observed codes (categorical), always including x_j itself; with ymin/ymax
// the extreme outputs over that set:
//   CI_j = ymax - ymin            (oracle range is fixed to [0,1])
//   CU_j = (f(x) - ymin)/(ymax - ymin), or 0.5 when the span is zero.
inline CiuProfile ciu_instance(const PredictionOracle& oracle, std::span<const double> x,
                               const FeatureDomain& domain, int n_grid) {
  if (n_grid < 2) throw ContractError("ciu_instance: n_grid must be at least 2");
  if (x.size() != domain.names.size())
    throw ContractError("ciu_instance: row width does not match the feature domain");

  const auto checked = [&](double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ContractError("oracle returned a probability outside [0,1]");
    return p;
  };

  CiuProfile profile;
  profile.output = checked(oracle.predict(x));
  profile.ci.resize(x.size());
  profile.cu.resize(x.size());

  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t j = 0; j < x.size(); ++j) {
    double ymin = profile.output, ymax = profile.output;
    const auto eval_at = [&](double value) {
      probe[j] = value;
      const double p = checked(oracle.predict(probe));
      ymin = std::min(ymin, p);
      ymax = std::max(ymax, p);
    };
    const auto& e = domain.entries[j];
    if (e.kind == ColumnKind::numeric) {
      if (e.hi > e.lo) {
        for (int k = 0; k < n_grid; ++k)
          eval_at(e.lo + (e.hi - e.lo) * double(k) / double(n_grid - 1));
      } else {
        eval_at(e.lo);
      }
    } else {
      for (double code : e.codes) eval_at(code);
    }
    probe[j] = x[j];

    const double span = ymax - ymin;
    profile.ci[j] = span;
    profile.cu[j] = span == 0.0 ? 0.5 : (profile.output - ymin) / span;
  }
  return profile;
}

// Mean CI per feature over a seeded uniform sample of reference rows,
// normalized to sum to 1. A constant oracle (all CI zero) yields a uniform
// vector with the degenerate flag set instead of an error. Instances may be
// evaluated concurrently; the reduction order is fixed, so results are
// bit-identical to a sequential run.
inline GlobalImportance ciu_global(const PredictionOracle& oracle,
                                   const FeatureMatrix& reference,
                                   std::size_t sample_size, int n_grid,
                                   std::uint64_t seed) {
  if (reference.n_rows == 0) throw DataError("ciu_global: empty reference");
  if (sample_size == 0) throw ContractError("ciu_global: sample_size must be positive");
  const FeatureDomain domain = build_feature_domain(reference);

  // Seeded sample without replacement (all rows when sample_size >= n_rows).
  std::vector<std::size_t> rows(reference.n_rows);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  if (sample_size < reference.n_rows) {
    Rng rng = Rng::stream(seed, 11);
    rng.shuffle(rows);
    rows.resize(sample_size);
    std::sort(rows.begin(), rows.end());
  }

  std::vector<CiuProfile> profiles(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    profiles[k] = ciu_instance(oracle, reference.row(rows[k]), domain, n_grid);
    profiles[k].instance_id = rows[k];
  });

  GlobalImportance g;
  g.features = reference.names;
  g.sample_size = rows.size();
  g.mean_ci.assign(reference.n_cols, 0.0);
  for (const auto& profile : profiles)
    for (std::size_t j = 0; j < reference.n_cols; ++j) g.mean_ci[j] += profile.ci[j];
  for (double& v : g.mean_ci) v /= double(rows.size());

  double total = 0.0;
  for (double v : g.mean_ci) total += v;
  if (total > 0.0) {
    g.weight.resize(reference.n_cols);
    for (std::size_t j = 0; j < reference.n_cols; ++j) g.weight[j] = g.mean_ci[j] / total;
  } else {
    g.degenerate = true;
    g.weight.assign(reference.n_cols, reference.n_cols ? 1.0 / double(reference.n_cols) : 0.0);
  }
  return g;
}

inline GlobalImportance ciu_global(const PredictionOracle& oracle,
                                   const TabularDataset& reference,
                                   std::size_t sample_size, int n_grid,
                                   std::uint64_t seed) {
  return ciu_global(oracle, reference.feature_matrix(), sample_size, n_grid, seed);
}

}  // namespace ruleforge

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ruleforge/errors.hpp"

namespace ruleforge {

enum class ColumnKind { numeric, categorical };
enum class ColumnRole { feature, excluded };

/// Dense row-major matrix of fully numeric feature values.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  std::vector<double> values;  // row-major, n_rows * n_cols
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;

  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * n_cols, n_cols};
  }

  double at(std::size_t r, std::size_t c) const { return values[r * n_cols + c]; }

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }

  std::unordered_map<std::string, int> column_index() const {
    std::unordered_map<std::string, int> index;
    index.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i)
      index.emplace(names[i], static_cast<int>(i));
    return index;
  }
};

/// Per-feature summary statistics used by genome initialization and mutation.
struct FeatureStats {
  std::vector<double> min, max, mean, stddev;  // aligned with matrix columns

  static FeatureStats compute(const FeatureMatrix& m) {
    FeatureStats s;
    s.min.assign(m.n_cols, 0.0);
    s.max.assign(m.n_cols, 0.0);
    s.mean.assign(m.n_cols, 0.0);
    s.stddev.assign(m.n_cols, 0.0);
    if (m.n_rows == 0) return s;
    for (std::size_t c = 0; c < m.n_cols; ++c) {
      double lo = m.at(0, c), hi = m.at(0, c), sum = 0.0;
      for (std::size_t r = 0; r < m.n_rows; ++r) {
        const double v = m.at(r, c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      const double mean = sum / double(m.n_rows);
      double ss = 0.0;
      for (std::size_t r = 0; r < m.n_rows; ++r) {
        const double d = m.at(r, c) - mean;
        ss += d * d;
      }
      s.min[c] = lo;
      s.max[c] = hi;
      s.mean[c] = mean;
      s.stddev[c] = std::sqrt(ss / double(m.n_rows));
    }
    return s;
  }
};

}  // namespace ruleforge

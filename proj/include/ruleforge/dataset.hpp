#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ruleforge/csv.hpp"
#include "ruleforge/errors.hpp"
#include "ruleforge/feature_matrix.hpp"
#include "ruleforge/rng.hpp"
#include "ruleforge/rules.hpp"

namespace ruleforge {

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  ColumnRole role = ColumnRole::feature;
  bool context_flag = false;  // macro/contextual column (the D2 exclusion set)

  bool operator==(const ColumnMeta&) const = default;
};

// Firm-year panel. Numeric cells use NaN for missing values; categorical
// columns hold raw strings until the preprocessor encodes them to codes.
struct TabularDataset {
  struct Column {
    ColumnMeta meta;
    std::vector<double> num;
    std::vector<std::string> text;
    bool encoded = false;  // categorical columns only
  };

  std::vector<Column> cols;
  std::vector<int> labels;             // 1 = default
  std::vector<std::string> group_id;   // firm identifier
  std::vector<int> time_index;         // year

  std::size_t n_rows() const { return labels.size(); }

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i].meta.name == name) return static_cast<int>(i);
    return -1;
  }

  void check_invariants() const {
    const std::size_t n = labels.size();
    if (group_id.size() != n || time_index.size() != n)
      throw ContractError("dataset invariant: row-aligned vectors differ in length");
    std::set<std::string> names;
    for (const auto& col : cols) {
      if (!names.insert(col.meta.name).second)
        throw DataError("duplicate column name: " + col.meta.name);
      const bool numeric_storage = col.meta.kind == ColumnKind::numeric || col.encoded;
      if (numeric_storage ? col.num.size() != n : col.text.size() != n)
        throw ContractError("dataset invariant: column length mismatch: " + col.meta.name);
      if (col.meta.context_flag && col.meta.role != ColumnRole::feature)
        throw ContractError("dataset invariant: context flag on non-feature column");
    }
    for (int v : labels)
      if (v != 0 && v != 1) throw DataError("invalid label: labels must be 0 or 1");
  }

  TabularDataset subset(const std::vector<std::size_t>& rows) const {
    TabularDataset out;
    out.cols.reserve(cols.size());
    for (const auto& col : cols) {
      Column c;
      c.meta = col.meta;
      c.encoded = col.encoded;
      if (!col.num.empty())
        for (std::size_t r : rows) c.num.push_back(col.num[r]);
      if (!col.text.empty())
        for (std::size_t r : rows) c.text.push_back(col.text[r]);
      out.cols.push_back(std::move(c));
    }
    for (std::size_t r : rows) {
      out.labels.push_back(labels[r]);
      out.group_id.push_back(group_id[r]);
      out.time_index.push_back(time_index[r]);
    }
    return out;
  }

  /// Feature-role columns as a dense numeric matrix. Requires encoded
  /// categoricals and no missing values.
  FeatureMatrix feature_matrix() const {
    FeatureMatrix m;
    m.n_rows = n_rows();
    for (const auto& col : cols) {
      if (col.meta.role != ColumnRole::feature) continue;
      if (col.meta.kind == ColumnKind::categorical && !col.encoded)
        throw DataError("categorical column not encoded: " + col.meta.name +
                        " (apply a preprocessor first)");
      m.names.push_back(col.meta.name);
      m.kinds.push_back(col.meta.kind);
    }
    m.n_cols = m.names.size();
    m.values.resize(m.n_rows * m.n_cols);
    std::size_t out_c = 0;
    for (const auto& col : cols) {
      if (col.meta.role != ColumnRole::feature) continue;
      for (std::size_t r = 0; r < m.n_rows; ++r) {
        const double v = col.num[r];
        if (!std::isfinite(v))
          throw DataError("missing value in feature column " + col.meta.name +
                          " (apply a preprocessor first)");
        m.values[r * m.n_cols + out_c] = v;
      }
      ++out_c;
    }
    return m;
  }
};

// ---------------------------------------------------------------------------
// Schema sidecar

struct DatasetSchema {
  std::string label_col;
  std::string group_col;
  std::string time_col;
  // Accepted string pair for the label column (negative, positive); numeric
  // 0/1 is always accepted.
  std::optional<std::pair<std::string, std::string>> label_values;
  std::vector<ColumnMeta> columns;       // feature/excluded columns
  std::vector<std::string> capped;       // columns capped at the 99.5th pct
  std::vector<std::string> signed_log;   // columns receiving sign(x)ln(1+|x|)
};

// ---------------------------------------------------------------------------
// CSV loading

inline TabularDataset load_csv(const std::string& path, const DatasetSchema& schema) {
  const CsvTable table = read_csv(path);

  std::set<std::string> header_set;
  for (const auto& name : table.header)
    if (!header_set.insert(name).second)
      throw DataError(path + ": duplicate column name in header: " + name);

  std::set<std::string> expected{schema.label_col, schema.group_col, schema.time_col};
  for (const auto& col : schema.columns) {
    if (!expected.insert(col.name).second)
      throw DataError("schema declares duplicate column: " + col.name);
  }
  if (expected != header_set) {
    std::string detail;
    for (const auto& name : expected)
      if (!header_set.count(name)) detail += " missing:" + name;
    for (const auto& name : header_set)
      if (!expected.count(name)) detail += " unexpected:" + name;
    throw DataError(path + ": header does not match schema;" + detail);
  }

  const int label_idx = table.column(schema.label_col);
  const int group_idx = table.column(schema.group_col);
  const int time_idx = table.column(schema.time_col);

  TabularDataset ds;
  ds.cols.reserve(schema.columns.size());
  std::vector<int> col_idx;
  for (const auto& meta : schema.columns) {
    TabularDataset::Column c;
    c.meta = meta;
    ds.cols.push_back(std::move(c));
    col_idx.push_back(table.column(meta.name));
  }

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string& raw_label = row[static_cast<std::size_t>(label_idx)];
    int label = -1;
    if (schema.label_values) {
      if (raw_label == schema.label_values->first) label = 0;
      else if (raw_label == schema.label_values->second) label = 1;
    }
    if (label < 0) {
      const double v = parse_double_or_nan(raw_label);
      if (v == 0.0) label = 0;
      else if (v == 1.0) label = 1;
      else
        throw DataError(path + ": invalid label '" + raw_label + "' at data row " +
                        std::to_string(r + 1));
    }
    ds.labels.push_back(label);
    ds.group_id.push_back(row[static_cast<std::size_t>(group_idx)]);

    const std::string& raw_time = row[static_cast<std::size_t>(time_idx)];
    const double t = parse_double_or_nan(raw_time);
    if (!std::isfinite(t) || t != std::floor(t))
      throw DataError(path + ": invalid time index '" + raw_time + "' at data row " +
                      std::to_string(r + 1));
    ds.time_index.push_back(static_cast<int>(t));

    for (std::size_t c = 0; c < ds.cols.size(); ++c) {
      const std::string& cell = row[static_cast<std::size_t>(col_idx[c])];
      if (ds.cols[c].meta.kind == ColumnKind::numeric)
        ds.cols[c].num.push_back(parse_double_or_nan(cell));
      else
        ds.cols[c].text.push_back(cell);
    }
  }

  ds.check_invariants();
  return ds;
}

inline void write_dataset_csv(const TabularDataset& ds, const DatasetSchema& schema,
                              const std::string& path) {
  std::string out = schema.group_col + "," + schema.time_col;
  for (const auto& col : ds.cols) out += "," + col.meta.name;
  out += "," + schema.label_col + "\n";
  for (std::size_t r = 0; r < ds.n_rows(); ++r) {
    out += ds.group_id[r];
    out += ",";
    out += std::to_string(ds.time_index[r]);
    for (const auto& col : ds.cols) {
      out += ",";
      if (col.meta.kind == ColumnKind::numeric || col.encoded) {
        const double v = col.num[r];
        if (std::isfinite(v)) out += format_double(v);
      } else {
        out += col.text[r];
      }
    }
    out += ",";
    out += std::to_string(ds.labels[r]);
    out += "\n";
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double train = 0.7;
  double validation = 0.2;
  double test = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    for (double f : {train, validation, test})
      if (!(f > 0.0 && f < 1.0)) throw ContractError("split fractions must lie in (0,1)");
    if (std::abs(train + validation + test - 1.0) > 1e-9)
      throw ContractError("split fractions must sum to 1");
  }
};

struct Split {
  TabularDataset train;
  TabularDataset validation;
  TabularDataset test;
};

namespace detail {

// Largest-remainder apportionment of n items over the three fractions.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitSpec& spec) {
  const double quota[3] = {spec.train * double(n), spec.validation * double(n),
                           spec.test * double(n)};
  std::array<std::size_t, 3> counts{};
  double remainder[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    counts[i] = static_cast<std::size_t>(std::floor(quota[i]));
    remainder[i] = quota[i] - double(counts[i]);
    assigned += counts[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (remainder[i] > remainder[best]) best = i;
    counts[best]++;
    remainder[best] = -1.0;
    ++assigned;
  }
  return counts;
}

}  // namespace detail

// Firm-level stratified split: every row of a group lands in exactly one
// subset; default/active groups are apportioned to the fractions separately.
// A group is "default" if any of its rows has label 1.
inline Split stratified_group_split(const TabularDataset& data, const SplitSpec& spec) {
  spec.validate();

  std::vector<std::string> group_order;
  std::unordered_map<std::string, int> status;  // group -> 0/1
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    auto [it, inserted] = status.try_emplace(data.group_id[r], 0);
    if (inserted) group_order.push_back(data.group_id[r]);
    if (data.labels[r] == 1) it->second = 1;
  }

  std::array<std::vector<std::string>, 2> by_status;
  for (const auto& g : group_order) by_status[static_cast<std::size_t>(status[g])].push_back(g);
  for (int s = 0; s < 2; ++s) {
    if (by_status[static_cast<std::size_t>(s)].size() < 2)
      throw DataError("too few groups for stratified split: status class " +
                      std::to_string(s) + " has " +
                      std::to_string(by_status[static_cast<std::size_t>(s)].size()) +
                      " group(s)");
  }

  std::unordered_map<std::string, int> assignment;  // group -> subset 0/1/2
  for (int s = 0; s < 2; ++s) {
    auto& groups = by_status[static_cast<std::size_t>(s)];
    Rng rng = Rng::stream(spec.seed, static_cast<std::uint64_t>(s));
    rng.shuffle(groups);
    const auto counts = detail::apportion(groups.size(), spec);
    std::size_t cursor = 0;
    for (int subset = 0; subset < 3; ++subset)
      for (std::size_t i = 0; i < counts[static_cast<std::size_t>(subset)]; ++i)
        assignment[groups[cursor++]] = subset;
  }

  std::array<std::vector<std::size_t>, 3> rows;
  for (std::size_t r = 0; r < data.n_rows(); ++r)
    rows[static_cast<std::size_t>(assignment[data.group_id[r]])].push_back(r);

  return {data.subset(rows[0]), data.subset(rows[1]), data.subset(rows[2])};
}

// ---------------------------------------------------------------------------
// Transforms

/// sign(x) * ln(1 + |x|): odd, strictly increasing, tames heavy tails while
/// preserving sign.
inline double signed_log(double x) {
  if (!std::isfinite(x)) throw ContractError("signed_log: non-finite input");
  return x < 0.0 ? -std::log1p(-x) : std::log1p(x);
}

/// Percentile with linear interpolation between order statistics, h = n*p + 1/2
/// (R type 5). p is in [0, 100]; values need not be sorted, NaNs are ignored.
inline double percentile(std::vector<double> values, double p) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.empty()) throw DataError("percentile of an all-missing column");
  std::sort(values.begin(), values.end());
  const double n = double(values.size());
  const double h = std::clamp(n * (p / 100.0) + 0.5, 1.0, n);
  const double lo = std::floor(h);
  const std::size_t i = static_cast<std::size_t>(lo) - 1;
  const double frac = h - lo;
  if (frac == 0.0 || i + 1 >= values.size()) return values[i];
  return values[i] + frac * (values[i + 1] - values[i]);
}

inline double median(const std::vector<double>& values) { return percentile(values, 50.0); }

// Train-fitted column transforms: median imputation, upper capping at the
// 99.5th training percentile, signed-log, and first-appearance ordinal codes
// with a reserved integer for unseen categories. All statistics come from the
// training subset exclusively.
struct Preprocessor {
  std::vector<std::pair<std::string, ColumnKind>> signature;  // feature columns
  std::map<std::string, double> medians;
  std::map<std::string, double> caps;
  std::vector<std::string> signed_log_columns;
  std::map<std::string, std::vector<std::string>> categories;

  static constexpr double kCapPercentile = 99.5;

  int unseen_code(const std::string& column) const {
    return static_cast<int>(categories.at(column).size());
  }
};

inline Preprocessor fit_preprocessor(const TabularDataset& train,
                                     const std::vector<std::string>& capped_columns,
                                     const std::vector<std::string>& signed_log_columns) {
  Preprocessor p;
  const auto require_numeric = [&](const std::string& name) {
    const int idx = train.column(name);
    if (idx < 0) throw DataError("column not found: " + name);
    const auto& col = train.cols[static_cast<std::size_t>(idx)];
    if (col.meta.kind != ColumnKind::numeric || col.meta.role != ColumnRole::feature)
      throw DataError("column is not a numeric feature: " + name);
    return idx;
  };

  for (const auto& col : train.cols) {
    if (col.meta.role != ColumnRole::feature) continue;
    p.signature.emplace_back(col.meta.name, col.meta.kind);
    if (col.meta.kind == ColumnKind::numeric) {
      bool any = false;
      for (double v : col.num) any = any || std::isfinite(v);
      if (!any) throw DataError("all-missing numeric column: " + col.meta.name);
      p.medians[col.meta.name] = median(col.num);
    } else {
      auto& cats = p.categories[col.meta.name];
      std::set<std::string> seen;
      for (const auto& v : col.text)
        if (seen.insert(v).second) cats.push_back(v);
    }
  }

  for (const auto& name : capped_columns) {
    const int idx = require_numeric(name);
    p.caps[name] = percentile(train.cols[static_cast<std::size_t>(idx)].num,
                              Preprocessor::kCapPercentile);
  }
  for (const auto& name : signed_log_columns) {
    require_numeric(name);
    p.signed_log_columns.push_back(name);
  }
  return p;
}

// Per numeric column: impute median -> cap (min(value, cap)) -> signed-log
// where configured. Categorical columns become integer codes. No missing
// values remain in feature columns afterwards.
inline TabularDataset apply_preprocessor(const Preprocessor& p, const TabularDataset& data) {
  std::vector<std::pair<std::string, ColumnKind>> signature;
  for (const auto& col : data.cols)
    if (col.meta.role == ColumnRole::feature)
      signature.emplace_back(col.meta.name, col.meta.kind);
  if (signature != p.signature)
    throw DataError("dataset schema does not match the fitted preprocessor");

  TabularDataset out = data;
  for (auto& col : out.cols) {
    if (col.meta.role != ColumnRole::feature) continue;
    if (col.meta.kind == ColumnKind::numeric) {
      const double med = p.medians.at(col.meta.name);
      const auto cap_it = p.caps.find(col.meta.name);
      const bool do_log =
          std::find(p.signed_log_columns.begin(), p.signed_log_columns.end(),
                    col.meta.name) != p.signed_log_columns.end();
      for (double& v : col.num) {
        if (!std::isfinite(v)) v = med;
        if (cap_it != p.caps.end()) v = std::min(v, cap_it->second);
        if (do_log) v = signed_log(v);
      }
    } else if (!col.encoded) {
      const auto& cats = p.categories.at(col.meta.name);
      std::unordered_map<std::string, int> code;
      for (std::size_t i = 0; i < cats.size(); ++i) code.emplace(cats[i], static_cast<int>(i));
      col.num.reserve(col.text.size());
      for (const auto& v : col.text) {
        const auto it = code.find(v);
        col.num.push_back(it == code.end() ? double(cats.size()) : double(it->second));
      }
      col.text.clear();
      col.encoded = true;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// EWM history features

// Appends <col>_ewm_mean and <col>_ewm_std per selected column: per group, in
// chronological order, weights w_i = 0.5^((t - t_i)/half_life) over that
// group's observations with t_i <= t. Std is the population (biased) weighted
// form. Only information at or before t is used.
inline TabularDataset ewm_features(const TabularDataset& data,
                                   const std::vector<std::string>& columns,
                                   double half_life) {
  if (!(half_life > 0.0)) throw ContractError("ewm_features: half_life must be positive");

  std::set<std::pair<std::string, int>> keys;
  for (std::size_t r = 0; r < data.n_rows(); ++r)
    if (!keys.emplace(data.group_id[r], data.time_index[r]).second)
      throw DataError("duplicate (group, time) pair: " + data.group_id[r] + ", " +
                      std::to_string(data.time_index[r]));

  std::vector<int> src;
  for (const auto& name : columns) {
    const int idx = data.column(name);
    if (idx < 0) throw DataError("column not found: " + name);
    if (data.cols[static_cast<std::size_t>(idx)].meta.kind != ColumnKind::numeric)
      throw DataError("ewm_features requires a numeric column: " + name);
    src.push_back(idx);
  }

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < data.n_rows(); ++r) groups[data.group_id[r]].push_back(r);
  for (auto& [g, rows] : groups)
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      return data.time_index[a] < data.time_index[b];
    });

  TabularDataset out = data;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    const auto& values = data.cols[static_cast<std::size_t>(src[k])].num;
    TabularDataset::Column mean_col, std_col;
    mean_col.meta = {columns[k] + "_ewm_mean", ColumnKind::numeric, ColumnRole::feature, false};
    std_col.meta = {columns[k] + "_ewm_std", ColumnKind::numeric, ColumnRole::feature, false};
    if (out.column(mean_col.meta.name) >= 0 || out.column(std_col.meta.name) >= 0)
      throw DataError("ewm column name collision for " + columns[k]);
    mean_col.num.assign(data.n_rows(), std::nan(""));
    std_col.num.assign(data.n_rows(), std::nan(""));

    for (const auto& [g, rows] : groups) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const int t = data.time_index[rows[i]];
        double wsum = 0.0, wx = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          const double x = values[rows[j]];
          if (!std::isfinite(x)) continue;
          const double w = std::pow(0.5, double(t - data.time_index[rows[j]]) / half_life);
          wsum += w;
          wx += w * x;
        }
        if (wsum == 0.0) continue;  // no observations yet; imputed downstream
        const double mean = wx / wsum;
        double wss = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          const double x = values[rows[j]];
          if (!std::isfinite(x)) continue;
          const double w = std::pow(0.5, double(t - data.time_index[rows[j]]) / half_life);
          wss += w * (x - mean) * (x - mean);
        }
        mean_col.num[rows[i]] = mean;
        std_col.num[rows[i]] = std::sqrt(wss / wsum);
      }
    }
    out.cols.push_back(std::move(mean_col));
    out.cols.push_back(std::move(std_col));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset variants

enum class Variant { d1, d2, d3 };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::d1: return "d1";
    case Variant::d2: return "d2";
    case Variant::d3: return "d3";
  }
  return "d1";
}

inline Variant parse_variant(std::string_view text) {
  if (text == "d1" || text == "D1") return Variant::d1;
  if (text == "d2" || text == "D2") return Variant::d2;
  if (text == "d3" || text == "D3") return Variant::d3;
  throw UsageError("unknown variant: " + std::string(text) + " (expected d1, d2 or d3)");
}

inline bool is_ewm_derived(std::string_view name) {
  return name.ends_with("_ewm_mean") || name.ends_with("_ewm_std");
}

/// D1 = unchanged; D2 = drop context columns; D3 = D1 plus EWM mean/std
/// (half-life 2) for every numeric non-context feature column.
inline TabularDataset build_variant(const TabularDataset& data, Variant variant) {
  switch (variant) {
    case Variant::d1: return data;
    case Variant::d2: {
      bool any_context = false;
      for (const auto& col : data.cols) any_context = any_context || col.meta.context_flag;
      if (!any_context)
        throw DataError("variant d2 requires context_flag metadata on at least one column");
      TabularDataset out = data;
      out.cols.erase(std::remove_if(out.cols.begin(), out.cols.end(),
                                    [](const auto& c) { return c.meta.context_flag; }),
                     out.cols.end());
      return out;
    }
    case Variant::d3: {
      std::vector<std::string> ratio_columns;
      for (const auto& col : data.cols) {
        if (col.meta.role == ColumnRole::feature && col.meta.kind == ColumnKind::numeric &&
            !col.meta.context_flag && !is_ewm_derived(col.meta.name))
          ratio_columns.push_back(col.meta.name);
      }
      if (ratio_columns.empty())
        throw DataError("variant d3 requires numeric non-context feature columns");
      return ewm_features(data, ratio_columns, 2.0);
    }
  }
  throw ContractError("unreachable variant");
}

// ---------------------------------------------------------------------------
// Synthetic panel generator

struct SynthConfig {
  std::size_t n_firms = 200;
  int years = 5;
  double firm_default_rate = 0.3;
  double noise_rate = 0.02;
  std::uint64_t seed = 1;
  // Time-drifting mode: CF_TO_ASSETS becomes a noisy observation of a latent
  // health level that the label rule actually uses, so EWM features (D3) add
  // ranking signal over D1.
  bool drift = false;
};

struct SynthPanel {
  TabularDataset data;
  DecisionList planted;
  DatasetSchema schema;
};

inline DecisionList planted_rule_list() {
  DecisionList list;
  list.rules.push_back({{{"CF_TO_ASSETS", Cmp::le, 0.02}, {"AGE", Cmp::ge, 9.0}}});
  list.rules.push_back({{{"RETAINED/TA", Cmp::lt, -0.08},
                         {"AGE", Cmp::ge, 9.0},
                         {"AGE", Cmp::lt, 41.0}}});
  return list;
}

inline DatasetSchema synth_schema() {
  DatasetSchema s;
  s.label_col = "label";
  s.group_col = "firm";
  s.time_col = "year";
  const auto feature = [](std::string name, bool context) {
    return ColumnMeta{std::move(name), ColumnKind::numeric, ColumnRole::feature, context};
  };
  s.columns = {feature("AGE", false),
               feature("ln_TA", false),
               feature("CF_TO_ASSETS", false),
               feature("RETAINED/TA", false),
               feature("NWC/TA", false),
               feature("DEBT/EQUITY", false),
               feature("TURNOVER_RATIO", false),
               feature("INFLATION", true),
               feature("GDP_GROWTH", true),
               feature("SECTOR_DEFAULT_RATE", true),
               feature("SECTOR_VA_GROWTH", true)};
  s.capped = {"DEBT/EQUITY"};
  s.signed_log = {"DEBT/EQUITY"};
  return s;
}

// Desk-scale stand-in for a firm-year accounting panel. The ground-truth label
// is 1 iff (CF_TO_ASSETS <= 0.02 AND AGE >= 9) OR (RETAINED/TA < -0.08 AND
// 9 <= AGE < 41), then flipped with probability noise_rate. Default firms are
// truncated at their default year; stressed-but-young and old negative-equity
// active firms make both AGE bounds identifiable.
inline SynthPanel synth_panel(const SynthConfig& cfg) {
  if (cfg.n_firms < 10) throw DataError("synth config: n_firms must be >= 10");
  if (cfg.years < 2) throw DataError("synth config: years must be >= 2");
  if (cfg.firm_default_rate < 0.0 || cfg.firm_default_rate > 0.5)
    throw DataError("synth config: firm_default_rate must lie in [0, 0.5]");
  if (cfg.noise_rate < 0.0 || cfg.noise_rate > 0.5)
    throw DataError("synth config: noise_rate must lie in [0, 0.5]");

  constexpr int kStartYear = 2015;
  constexpr int kRegions = 5;
  constexpr int kSectors = 8;

  SynthPanel panel;
  panel.schema = synth_schema();
  panel.planted = planted_rule_list();

  TabularDataset& ds = panel.data;
  for (const auto& meta : panel.schema.columns) {
    TabularDataset::Column c;
    c.meta = meta;
    ds.cols.push_back(std::move(c));
  }

  // Macro/context series: exogenous noise shared within region/sector cells.
  std::vector<double> inflation(static_cast<std::size_t>(cfg.years));
  std::vector<std::vector<double>> gdp(kRegions), sector_def(kSectors), sector_va(kSectors);
  {
    Rng rng = Rng::stream(cfg.seed, 2);
    for (int t = 0; t < cfg.years; ++t)
      inflation[static_cast<std::size_t>(t)] = 2.0 + 1.5 * std::sin(0.8 * t) + rng.normal(0.0, 0.4);
    Rng rng_gdp = Rng::stream(cfg.seed, 3);
    for (auto& series : gdp) {
      series.resize(static_cast<std::size_t>(cfg.years));
      for (auto& v : series) v = rng_gdp.normal(1.2, 1.3);
    }
    Rng rng_def = Rng::stream(cfg.seed, 4);
    for (auto& series : sector_def) {
      series.resize(static_cast<std::size_t>(cfg.years));
      for (auto& v : series) v = std::clamp(rng_def.normal(0.02, 0.008), 0.001, 0.08);
    }
    Rng rng_va = Rng::stream(cfg.seed, 5);
    for (auto& series : sector_va) {
      series.resize(static_cast<std::size_t>(cfg.years));
      for (auto& v : series) v = rng_va.normal(1.0, 2.2);
    }
  }

  // Which firms default: exact count, assigned by seeded shuffle.
  const std::size_t n_default =
      static_cast<std::size_t>(std::llround(cfg.firm_default_rate * double(cfg.n_firms)));
  std::vector<std::size_t> firm_order(cfg.n_firms);
  for (std::size_t i = 0; i < cfg.n_firms; ++i) firm_order[i] = i;
  {
    Rng rng = Rng::stream(cfg.seed, 7);
    rng.shuffle(firm_order);
  }
  std::vector<bool> is_default(cfg.n_firms, false);
  for (std::size_t i = 0; i < n_default; ++i) is_default[firm_order[i]] = true;

  const auto clip = [](double v, double lo, double hi) { return std::clamp(v, lo, hi); };

  for (std::size_t firm = 0; firm < cfg.n_firms; ++firm) {
    Rng rng = Rng::stream(cfg.seed, 1'000'000 + firm);
    const int region = static_cast<int>(rng.uniform_below(kRegions));
    const int sector = static_cast<int>(rng.uniform_below(kSectors));
    const double ln_ta_base = rng.normal(7.0, 1.2);

    int rows = cfg.years;
    int distress_from = cfg.years + 1;  // first distressed row offset
    bool mech_cf = true;
    enum class ActiveKind { standard, young_stressed, old_negative_ret };
    ActiveKind active_kind = ActiveKind::standard;
    long long age0 = 0;

    if (is_default[firm]) {
      mech_cf = rng.bernoulli(0.6);
      rows = static_cast<int>(rng.uniform_int(2, cfg.years));
      const int window = static_cast<int>(rng.uniform_int(2, 3));
      distress_from = rows - std::min(rows, window);
      if (mech_cf) {
        age0 = rng.uniform_int(9, 45);
      } else {
        age0 = rng.uniform_int(9, std::max<long long>(9, 41 - rows));
      }
    } else {
      const double u = rng.uniform();
      if (u < 0.15) {
        active_kind = ActiveKind::young_stressed;
        age0 = rng.uniform_int(0, std::max<long long>(0, 8 - (cfg.years - 1)));
      } else if (u < 0.25) {
        active_kind = ActiveKind::old_negative_ret;
        age0 = rng.uniform_int(41, 60);
      } else {
        age0 = rng.uniform_int(7, 45);
      }
    }

    double health = clip(rng.normal(0.12, 0.04), 0.05, 0.30);  // latent CF level

    for (int t = 0; t < rows; ++t) {
      const double age = double(age0 + t);
      const bool distress = is_default[firm] && t >= distress_from;
      const bool young_stress =
          active_kind == ActiveKind::young_stressed && age < 9.0;

      double cf, ret;
      bool latent_low = false;
      if (distress && mech_cf) {
        cf = rng.uniform(-0.06, 0.015);
        ret = clip(rng.normal(0.05, 0.08), -0.06, 0.5);
        latent_low = true;
      } else if (distress && !mech_cf) {
        cf = clip(rng.normal(0.08, 0.04), 0.035, 0.30);
        ret = rng.uniform(-0.45, -0.12);
      } else if (young_stress) {
        cf = rng.uniform(-0.06, 0.015);
        ret = rng.bernoulli(0.5) ? rng.uniform(-0.45, -0.12)
                                 : clip(rng.normal(0.10, 0.10), -0.06, 0.6);
        latent_low = true;
      } else if (active_kind == ActiveKind::old_negative_ret) {
        cf = clip(rng.normal(0.12, 0.05), 0.035, 0.35);
        ret = rng.uniform(-0.50, -0.12);
      } else {
        cf = clip(rng.normal(0.12, 0.05), 0.035, 0.35);
        ret = clip(rng.normal(0.15, 0.12), -0.06, 0.6);
      }

      double cf_effective = cf;
      if (cfg.drift) {
        health = latent_low ? rng.uniform(-0.04, 0.015)
                            : clip(health + rng.normal(0.0, 0.01), 0.05, 0.30);
        cf_effective = health;
        cf = health + rng.normal(0.0, 0.05);
      }

      const bool stressed_books = distress || young_stress;
      const double nwc = clip(rng.normal(0.10, 0.15) - (stressed_books ? 0.15 : 0.0), -0.8, 0.8);
      const double dte = clip(std::exp(rng.normal(0.3, 0.7)) * (stressed_books ? 1.6 : 1.0), 0.0, 40.0);
      const double turnover =
          clip(rng.normal(1.1, 0.35) * (stressed_books ? 0.8 : 1.0), 0.05, 3.5);

      const bool rule_true = (cf_effective <= 0.02 && age >= 9.0) ||
                             (ret < -0.08 && age >= 9.0 && age < 41.0);
      const bool flip = rng.bernoulli(cfg.noise_rate);
      const int label = int(rule_true) ^ int(flip);

      char firm_id[16];
      std::snprintf(firm_id, sizeof(firm_id), "F%05zu", firm);
      ds.group_id.emplace_back(firm_id);
      ds.time_index.push_back(kStartYear + t);
      ds.labels.push_back(label);

      const double values[] = {age,
                               ln_ta_base + rng.normal(0.0, 0.15),
                               cf,
                               ret,
                               nwc,
                               dte,
                               turnover,
                               inflation[static_cast<std::size_t>(t)],
                               gdp[static_cast<std::size_t>(region)][static_cast<std::size_t>(t)],
                               sector_def[static_cast<std::size_t>(sector)][static_cast<std::size_t>(t)],
                               sector_va[static_cast<std::size_t>(sector)][static_cast<std::size_t>(t)]};
      for (std::size_t c = 0; c < ds.cols.size(); ++c) ds.cols[c].num.push_back(values[c]);
    }
  }

  ds.check_invariants();
  return panel;
}

inline std::vector<int> labels_of(const TabularDataset& ds) { return ds.labels; }

}  // namespace ruleforge

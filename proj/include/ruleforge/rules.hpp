#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ruleforge/errors.hpp"
#include "ruleforge/feature_matrix.hpp"
#include "ruleforge/importance.hpp"
#include "ruleforge/metrics.hpp"

namespace ruleforge {

enum class Cmp { le, lt, ge, gt };

inline std::string_view cmp_text(Cmp op) {
  switch (op) {
    case Cmp::le: return "<=";
    case Cmp::lt: return "<";
    case Cmp::ge: return ">=";
    case Cmp::gt: return ">";
  }
  return "<=";
}

inline bool cmp_apply(Cmp op, double value, double threshold) {
  switch (op) {
    case Cmp::le: return value <= threshold;
    case Cmp::lt: return value < threshold;
    case Cmp::ge: return value >= threshold;
    case Cmp::gt: return value > threshold;
  }
  return false;
}

struct Predicate {
  std::string feature;
  Cmp op = Cmp::le;
  double threshold = 0.0;

  bool operator==(const Predicate&) const = default;
};

/// Conjunction of predicates implying class 1. At least one predicate.
struct Rule {
  std::vector<Predicate> predicates;

  bool operator==(const Rule&) const = default;
};

/// Ordered rule list; every rule predicts class 1, the default class is 0.
struct DecisionList {
  std::vector<Rule> rules;

  bool operator==(const DecisionList&) const = default;

  bool empty() const { return rules.empty(); }
};

inline void check_invariants(const DecisionList& list) {
  for (const auto& rule : list.rules) {
    if (rule.predicates.empty())
      throw ContractError("decision list invariant: rule without predicates");
    for (const auto& pred : rule.predicates) {
      if (pred.feature.empty())
        throw ContractError("decision list invariant: empty feature name");
      if (!std::isfinite(pred.threshold))
        throw ContractError("decision list invariant: non-finite threshold");
    }
  }
}

/// Snaps a threshold to its 6-significant-digit text form, the precision the
/// rules grammar serializes at. Idempotent after one application.
inline double quantize_threshold(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return std::strtod(buf, nullptr);
}

struct EvalResult {
  int label = 0;
  int rule_index = -1;  // first satisfied rule; -1 when the default fired
};

// ---------------------------------------------------------------------------
// Evaluation

/// Decision list bound to a concrete column order for fast batch evaluation.
class CompiledList {
 public:
  CompiledList() = default;

  CompiledList(const DecisionList& list, const std::vector<std::string>& feature_names) {
    std::unordered_map<std::string_view, int> index;
    for (std::size_t i = 0; i < feature_names.size(); ++i)
      index.emplace(feature_names[i], static_cast<int>(i));
    rules_.reserve(list.rules.size());
    for (const auto& rule : list.rules) {
      std::vector<Bound> bounds;
      bounds.reserve(rule.predicates.size());
      for (const auto& pred : rule.predicates) {
        const auto it = index.find(pred.feature);
        if (it == index.end())
          throw DataError("rule references unknown feature: " + pred.feature);
        bounds.push_back({it->second, pred.op, pred.threshold});
      }
      rules_.push_back(std::move(bounds));
    }
  }

  EvalResult evaluate(std::span<const double> row) const {
    for (std::size_t r = 0; r < rules_.size(); ++r) {
      bool all = true;
      for (const auto& b : rules_[r]) {
        if (!cmp_apply(b.op, row[static_cast<std::size_t>(b.column)], b.threshold)) {
          all = false;
          break;
        }
      }
      if (all) return {1, static_cast<int>(r)};
    }
    return {0, -1};
  }

  std::vector<int> predict(const FeatureMatrix& X) const {
    std::vector<int> out(X.n_rows);
    for (std::size_t i = 0; i < X.n_rows; ++i) out[i] = evaluate(X.row(i)).label;
    return out;
  }

 private:
  struct Bound {
    int column;
    Cmp op;
    double threshold;
  };
  std::vector<std::vector<Bound>> rules_;
};

inline EvalResult evaluate(const DecisionList& list, std::span<const double> row,
                           const std::vector<std::string>& feature_names) {
  return CompiledList(list, feature_names).evaluate(row);
}

// ---------------------------------------------------------------------------
// Simplification

namespace detail {

struct Interval {
  // Lower bound: value > lo (strict) or value >= lo.
  std::optional<std::pair<double, bool>> lower;  // (threshold, strict)
  std::optional<std::pair<double, bool>> upper;
  int first_seen = 0;  // order of first appearance in the rule
};

}  // namespace detail

// Merges redundant same-feature predicates, drops unsatisfiable rules and
// exact duplicates. Never changes evaluate() on any row.
inline DecisionList simplify(const DecisionList& list) {
  DecisionList out;
  std::vector<Rule> seen;
  for (const auto& rule : list.rules) {
    std::map<std::string, detail::Interval> bounds;
    int order = 0;
    for (const auto& pred : rule.predicates) {
      auto [it, inserted] = bounds.try_emplace(pred.feature);
      if (inserted) it->second.first_seen = order++;
      auto& iv = it->second;
      const bool strict = pred.op == Cmp::lt || pred.op == Cmp::gt;
      if (pred.op == Cmp::ge || pred.op == Cmp::gt) {
        // Tighter lower bound: larger threshold; strict wins ties.
        if (!iv.lower || pred.threshold > iv.lower->first ||
            (pred.threshold == iv.lower->first && strict && !iv.lower->second))
          iv.lower = {pred.threshold, strict};
      } else {
        if (!iv.upper || pred.threshold < iv.upper->first ||
            (pred.threshold == iv.upper->first && strict && !iv.upper->second))
          iv.upper = {pred.threshold, strict};
      }
    }

    bool satisfiable = true;
    for (const auto& [feature, iv] : bounds) {
      if (iv.lower && iv.upper) {
        const auto& [lo, lo_strict] = *iv.lower;
        const auto& [hi, hi_strict] = *iv.upper;
        if (lo > hi || (lo == hi && (lo_strict || hi_strict))) {
          satisfiable = false;
          break;
        }
      }
    }
    if (!satisfiable) continue;

    std::vector<const std::pair<const std::string, detail::Interval>*> ordered;
    ordered.reserve(bounds.size());
    for (const auto& entry : bounds) ordered.push_back(&entry);
    std::sort(ordered.begin(), ordered.end(),
              [](const auto* a, const auto* b) { return a->second.first_seen < b->second.first_seen; });

    Rule merged;
    for (const auto* entry : ordered) {
      const auto& [feature, iv] = *entry;
      if (iv.lower)
        merged.predicates.push_back({feature, iv.lower->second ? Cmp::gt : Cmp::ge, iv.lower->first});
      if (iv.upper)
        merged.predicates.push_back({feature, iv.upper->second ? Cmp::lt : Cmp::le, iv.upper->first});
    }
    if (merged.predicates.empty()) continue;

    if (std::find(seen.begin(), seen.end(), merged) != seen.end()) continue;
    seen.push_back(merged);
    out.rules.push_back(std::move(merged));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Complexity

struct Complexity {
  std::size_t n_rules = 0;
  std::size_t n_predicates = 0;

  bool operator==(const Complexity&) const = default;
};

inline Complexity complexity(const DecisionList& list) {
  Complexity c;
  c.n_rules = list.rules.size();
  for (const auto& rule : list.rules) c.n_predicates += rule.predicates.size();
  return c;
}

inline std::vector<std::string> features_used(const DecisionList& list) {
  std::set<std::string> names;
  for (const auto& rule : list.rules)
    for (const auto& pred : rule.predicates) names.insert(pred.feature);
  return {names.begin(), names.end()};
}

// ---------------------------------------------------------------------------
// Objectives

/// Balanced-accuracy agreement between the list's predictions and the black
/// box's hard labels. Falls back to plain accuracy (flagged) when y_hat is
/// single-class so degenerate oracles do not abort a run.
inline double fidelity(const DecisionList& list, const FeatureMatrix& X,
                       std::span<const int> y_hat, bool* degraded = nullptr) {
  if (X.n_rows != y_hat.size())
    throw ContractError("fidelity: row count and y_hat length differ");
  const std::vector<int> preds = CompiledList(list, X.names).predict(X);
  if (has_both_classes(y_hat)) {
    if (degraded) *degraded = false;
    return balanced_accuracy(y_hat, preds);
  }
  if (degraded) *degraded = true;
  return accuracy(y_hat, preds);
}

// Importance coverage of the features the list uses, normalized by the best
// attainable coverage at the same feature count:
//   alignment = sum_{f in F} g(f) / sum_{f in top-|F|(g)} g(f)
// Top-k ties are broken by feature name for determinism. Empty list -> 0.
inline double ciu_alignment(const DecisionList& list, const GlobalImportance& g) {
  const std::vector<std::string> used = features_used(list);
  if (used.empty()) return 0.0;

  double numerator = 0.0;
  for (const auto& f : used) numerator += g.weight_of(f);

  std::vector<std::size_t> order(g.features.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (g.weight[a] != g.weight[b]) return g.weight[a] > g.weight[b];
    return g.features[a] < g.features[b];
  });
  const std::size_t k = std::min(used.size(), order.size());
  double denominator = 0.0;
  for (std::size_t i = 0; i < k; ++i) denominator += g.weight[order[i]];
  if (denominator <= 0.0) return 0.0;
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

struct RuleSetScore {
  double fidelity = 0.0;
  double ciu_alignment = 0.0;
  std::size_t n_rules = 0;
  std::size_t n_predicates = 0;
};

// ---------------------------------------------------------------------------
// Text format
//
//   ruleset   := rule_line* else_line
//   rule_line := '(' predicate (' AND ' predicate)* ')' ' -> DEFAULT' NEWLINE
//   predicate := IDENT OP NUMBER ;  OP := '<='|'<'|'>='|'>'
//   else_line := 'ELSE -> ACTIVE'
//
// Thresholds print at 6 significant digits.

inline std::string format_threshold(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

inline std::string format_rules(const DecisionList& list) {
  std::string out;
  for (const auto& rule : list.rules) {
    out += '(';
    for (std::size_t i = 0; i < rule.predicates.size(); ++i) {
      if (i > 0) out += " AND ";
      const auto& pred = rule.predicates[i];
      out += pred.feature;
      out += ' ';
      out += cmp_text(pred.op);
      out += ' ';
      out += format_threshold(pred.threshold);
    }
    out += ") -> DEFAULT\n";
  }
  out += "ELSE -> ACTIVE\n";
  return out;
}

namespace detail {

class RuleParser {
 public:
  RuleParser(std::string_view text, const std::vector<std::string>* valid_features)
      : text_(text), valid_(valid_features) {}

  DecisionList parse() {
    DecisionList list;
    bool saw_else = false;
    while (pos_ < text_.size()) {
      const std::size_t line_start = pos_;
      std::size_t line_end = text_.find('\n', pos_);
      if (line_end == std::string_view::npos) line_end = text_.size();
      std::string_view line = text_.substr(line_start, line_end - line_start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (saw_else) {
        if (!line.empty()) fail(1, "content after ELSE line");
      } else if (line == "ELSE -> ACTIVE") {
        saw_else = true;
      } else {
        list.rules.push_back(parse_rule_line(line));
      }
      pos_ = line_end + 1;
      ++line_no_;
    }
    if (!saw_else) throw DataError("rules parse error: missing 'ELSE -> ACTIVE' line");
    return list;
  }

 private:
  [[noreturn]] void fail(std::size_t col, const std::string& message) const {
    throw DataError("rules parse error at line " + std::to_string(line_no_) + ", col " +
                    std::to_string(col) + ": " + message);
  }

  Rule parse_rule_line(std::string_view line) {
    std::size_t col = 0;
    const auto expect = [&](std::string_view token) {
      if (line.substr(col, token.size()) != token)
        fail(col + 1, "expected '" + std::string(token) + "'");
      col += token.size();
    };

    Rule rule;
    expect("(");
    while (true) {
      rule.predicates.push_back(parse_predicate(line, col));
      if (line.substr(col, 5) == " AND ") {
        col += 5;
        continue;
      }
      break;
    }
    expect(") -> DEFAULT");
    if (col != line.size()) fail(col + 1, "trailing characters");
    return rule;
  }

  Predicate parse_predicate(std::string_view line, std::size_t& col) {
    Predicate pred;
    const std::size_t ident_start = col;
    while (col < line.size() && is_ident_char(line[col])) ++col;
    if (col == ident_start) fail(col + 1, "expected feature name");
    pred.feature = std::string(line.substr(ident_start, col - ident_start));
    if (valid_ && std::find(valid_->begin(), valid_->end(), pred.feature) == valid_->end())
      fail(ident_start + 1, "unknown feature name: " + pred.feature);

    if (col >= line.size() || line[col] != ' ') fail(col + 1, "expected ' ' before comparator");
    ++col;
    if (line.substr(col, 2) == "<=") {
      pred.op = Cmp::le;
      col += 2;
    } else if (line.substr(col, 2) == ">=") {
      pred.op = Cmp::ge;
      col += 2;
    } else if (col < line.size() && line[col] == '<') {
      pred.op = Cmp::lt;
      ++col;
    } else if (col < line.size() && line[col] == '>') {
      pred.op = Cmp::gt;
      ++col;
    } else {
      fail(col + 1, "expected comparator (<=, <, >=, >)");
    }
    if (col < line.size() && (line[col] == '<' || line[col] == '>' || line[col] == '='))
      fail(col + 1, "malformed comparator");

    if (col >= line.size() || line[col] != ' ') fail(col + 1, "expected ' ' before number");
    ++col;
    const std::size_t num_start = col;
    while (col < line.size() && is_number_char(line[col])) ++col;
    if (col == num_start) fail(col + 1, "expected number");
    const std::string token(line.substr(num_start, col - num_start));
    char* end = nullptr;
    const double value = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(value))
      fail(num_start + 1, "invalid number: " + token);
    pred.threshold = value;
    return pred;
  }

  static bool is_ident_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '/' || c == '.';
  }
  static bool is_number_char(char c) {
    return (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E';
  }

  std::string_view text_;
  const std::vector<std::string>* valid_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 1;
};

}  // namespace detail

/// Parses the rules text grammar. When valid_features is given, unknown
/// feature names are rejected.
inline DecisionList parse_rules(std::string_view text,
                                const std::vector<std::string>* valid_features = nullptr) {
  return detail::RuleParser(text, valid_features).parse();
}

/// Round-trips a list through the text grammar, snapping thresholds to the
/// serialized precision. Reported metrics are computed on this canonical form
/// so they match recomputation from the emitted file.
inline DecisionList canonicalize(const DecisionList& list) {
  return parse_rules(format_rules(list));
}

}  // namespace ruleforge

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "ruleforge/dataset.hpp"
#include "ruleforge/importance.hpp"
#include "ruleforge/rng.hpp"
#include "ruleforge/rules.hpp"
#include "test_support.hpp"

using namespace ruleforge;

namespace {

const std::vector<std::string> kFeatures{"RETAINED/TA", "AGE", "CF_TO_ASSETS"};

DecisionList paper_rule_one() {
  DecisionList list;
  list.rules.push_back({{{"RETAINED/TA", Cmp::lt, -0.08},
                         {"AGE", Cmp::ge, 9.0},
                         {"AGE", Cmp::lt, 41.0}}});
  list.rules.push_back({{{"AGE", Cmp::ge, 9.0}, {"CF_TO_ASSETS", Cmp::le, 0.02}}});
  return list;
}

}  // namespace

TEST_CASE("evaluate: default rule, boundary inclusivity, first-rule attribution") {
  const std::vector<std::string> names{"x1", "x2"};
  const std::vector<double> row{0.5, 3.0};

  const DecisionList empty;
  CHECK(evaluate(empty, row, names).label == 0);
  CHECK(evaluate(empty, row, names).rule_index == -1);

  DecisionList le_rule;
  le_rule.rules.push_back({{{"x1", Cmp::le, 0.5}}});
  CHECK(evaluate(le_rule, row, names).label == 1);

  const DecisionList rule1 = paper_rule_one();
  const std::vector<double> firm_row{-0.1, 20.0, 0.05};
  const EvalResult res = evaluate(rule1, firm_row, kFeatures);
  CHECK(res.label == 1);
  CHECK(res.rule_index == 0);
}

TEST_CASE("evaluate rejects unknown features") {
  DecisionList list;
  list.rules.push_back({{{"nope", Cmp::le, 1.0}}});
  CHECK_THROWS_AS(evaluate(list, std::vector<double>{1.0}, {"x1"}), DataError);
}

TEST_CASE("prediction is invariant under rule order") {
  Rng rng(11);
  const std::vector<std::string> names{"f0", "f1", "f2", "f3"};
  for (int trial = 0; trial < 100; ++trial) {
    DecisionList list = testsupport::random_list(rng, names);
    DecisionList shuffled = list;
    rng.shuffle(shuffled.rules);
    for (int r = 0; r < 20; ++r) {
      std::vector<double> row(names.size());
      for (auto& v : row) v = rng.uniform(-4.0, 4.0);
      CHECK(evaluate(list, row, names).label == evaluate(shuffled, row, names).label);
    }
  }
}

TEST_CASE("fidelity: memorization, empty list, degraded single-class mode") {
  Rng rng(5);
  const FeatureMatrix X = testsupport::random_matrix(rng, 60, 3);
  DecisionList list;
  list.rules.push_back({{{"f0", Cmp::le, 0.2}}});
  list.rules.push_back({{{"f1", Cmp::gt, 0.9}, {"f2", Cmp::le, 0.0}}});

  const std::vector<int> y_hat = CompiledList(list, X.names).predict(X);
  REQUIRE(has_both_classes(y_hat));
  CHECK(fidelity(list, X, y_hat) == 1.0);

  const DecisionList empty;
  CHECK(fidelity(empty, X, y_hat) == 0.5);

  std::vector<int> ones(X.n_rows, 1);
  bool degraded = false;
  const double f = fidelity(empty, X, ones, &degraded);
  CHECK(degraded);
  CHECK(f == 0.0);  // plain accuracy of an all-zero predictor on all-one labels
}

TEST_CASE("planted rules reproduce noise-free planted labels") {
  SynthConfig cfg;
  cfg.n_firms = 150;
  cfg.noise_rate = 0.0;
  cfg.seed = 9;
  const SynthPanel panel = synth_panel(cfg);
  const FeatureMatrix X = panel.data.feature_matrix();
  const std::vector<int> preds = CompiledList(panel.planted, X.names).predict(X);
  CHECK(preds == panel.data.labels);
  CHECK(fidelity(panel.planted, X, panel.data.labels) == 1.0);
}

TEST_CASE("ciu alignment: coverage formula and edge cases") {
  GlobalImportance g;
  g.features = {"A", "B", "C"};
  g.mean_ci = {0.5, 0.3, 0.2};
  g.weight = {0.5, 0.3, 0.2};

  DecisionList top1;
  top1.rules.push_back({{{"A", Cmp::le, 1.0}}});
  CHECK(ciu_alignment(top1, g) == 1.0);

  CHECK(ciu_alignment(DecisionList{}, g) == 0.0);

  DecisionList ac;
  ac.rules.push_back({{{"A", Cmp::le, 1.0}, {"C", Cmp::gt, 0.0}}});
  CHECK_THAT(ciu_alignment(ac, g), Catch::Matchers::WithinAbs(0.7 / 0.8, 1e-15));

  DecisionList unknown;
  unknown.rules.push_back({{{"Z", Cmp::le, 1.0}}});
  CHECK_THROWS_AS(ciu_alignment(unknown, g), DataError);
}

TEST_CASE("alignment never decreases when adding the best unused feature") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t nf = 3 + rng.uniform_below(4);
    GlobalImportance g;
    double total = 0.0;
    for (std::size_t i = 0; i < nf; ++i) {
      g.features.push_back("f" + std::to_string(i));
      g.weight.push_back(rng.uniform(0.0, 1.0));
      total += g.weight.back();
    }
    for (auto& w : g.weight) w /= total;
    g.mean_ci = g.weight;

    DecisionList list = testsupport::random_list(rng, g.features);
    if (list.rules.empty()) continue;
    const auto used = features_used(list);
    std::string best_unused;
    double best_w = -1.0;
    for (std::size_t i = 0; i < nf; ++i) {
      if (std::find(used.begin(), used.end(), g.features[i]) != used.end()) continue;
      if (g.weight[i] > best_w || (g.weight[i] == best_w && g.features[i] < best_unused)) {
        best_w = g.weight[i];
        best_unused = g.features[i];
      }
    }
    if (best_unused.empty()) continue;

    const double before = ciu_alignment(list, g);
    DecisionList extended = list;
    extended.rules[0].predicates.push_back({best_unused, Cmp::le, 0.0});
    CHECK(ciu_alignment(extended, g) >= before - 1e-12);
  }
}

TEST_CASE("complexity counts rules and predicates") {
  CHECK(complexity(DecisionList{}) == Complexity{0, 0});
  CHECK(complexity(paper_rule_one()) == Complexity{2, 5});
  DecisionList one;
  one.rules.push_back({{{"AGE", Cmp::ge, 9.0}}});
  CHECK(complexity(one) == Complexity{1, 1});
}

TEST_CASE("rules grammar: frozen strings") {
  const std::string text = "(CF_TO_ASSETS <= 0.02 AND AGE >= 9) -> DEFAULT\nELSE -> ACTIVE\n";
  const DecisionList list = parse_rules(text);
  REQUIRE(list.rules.size() == 1);
  REQUIRE(list.rules[0].predicates.size() == 2);
  CHECK(list.rules[0].predicates[0].feature == "CF_TO_ASSETS");
  CHECK(list.rules[0].predicates[0].op == Cmp::le);
  CHECK(list.rules[0].predicates[0].threshold == 0.02);
  CHECK(list.rules[0].predicates[1].feature == "AGE");
  CHECK(format_rules(list) == text);

  CHECK(parse_rules("ELSE -> ACTIVE").rules.empty());
  CHECK(format_rules(DecisionList{}) == "ELSE -> ACTIVE\n");
}

TEST_CASE("rules grammar: errors carry line and column") {
  try {
    parse_rules("(AGE >> 9) -> DEFAULT\nELSE -> ACTIVE\n");
    FAIL("expected a parse error");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 1") != std::string::npos);
    CHECK(msg.find("col") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_rules("(AGE >= 9) -> DEFAULT\n"), DataError);  // missing ELSE
  const std::vector<std::string> valid{"AGE"};
  CHECK_THROWS_AS(parse_rules("(YEARS >= 9) -> DEFAULT\nELSE -> ACTIVE\n", &valid), DataError);
}

TEST_CASE("parse(format()) is the identity on fuzzed lists") {
  Rng rng(23);
  const std::vector<std::string> names{"AGE", "ln_TA", "CF_TO_ASSETS", "RETAINED/TA", "x_9"};
  for (int trial = 0; trial < 500; ++trial) {
    const DecisionList list = testsupport::random_list(rng, names, /*quantized=*/true);
    CHECK(parse_rules(format_rules(list)) == list);
  }
}

TEST_CASE("canonicalize is idempotent for arbitrary thresholds") {
  Rng rng(29);
  const std::vector<std::string> names{"a", "b"};
  for (int trial = 0; trial < 200; ++trial) {
    const DecisionList list = testsupport::random_list(rng, names, /*quantized=*/false);
    const DecisionList canon = canonicalize(list);
    CHECK(canonicalize(canon) == canon);
    CHECK(format_rules(canon) == format_rules(list));
  }
}

TEST_CASE("quantize_threshold is idempotent") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const double x = rng.uniform(-1e7, 1e7) * std::pow(10.0, rng.uniform_int(-6, 6));
    const double q = quantize_threshold(x);
    CHECK(quantize_threshold(q) == q);
  }
}

TEST_CASE("simplify: merge, unsatisfiable removal, deduplication") {
  SECTION("x > a AND x <= b with a >= b is removed") {
    DecisionList list;
    list.rules.push_back({{{"x", Cmp::gt, 5.0}, {"x", Cmp::le, 3.0}}});
    list.rules.push_back({{{"x", Cmp::gt, 2.0}, {"x", Cmp::le, 2.0}}});
    CHECK(simplify(list).rules.empty());
  }
  SECTION("x >= a AND x <= a survives as a point interval") {
    DecisionList list;
    list.rules.push_back({{{"x", Cmp::ge, 2.0}, {"x", Cmp::le, 2.0}}});
    CHECK(simplify(list).rules.size() == 1);
  }
  SECTION("redundant bounds merge to the tightest pair") {
    DecisionList list;
    list.rules.push_back({{{"x", Cmp::le, 5.0},
                           {"x", Cmp::le, 3.0},
                           {"x", Cmp::gt, 0.0},
                           {"x", Cmp::ge, 1.0}}});
    const DecisionList s = simplify(list);
    REQUIRE(s.rules.size() == 1);
    REQUIRE(s.rules[0].predicates.size() == 2);
    CHECK(s.rules[0].predicates[0] == Predicate{"x", Cmp::ge, 1.0});
    CHECK(s.rules[0].predicates[1] == Predicate{"x", Cmp::le, 3.0});
  }
  SECTION("identical rules deduplicate") {
    DecisionList list;
    list.rules.push_back({{{"x", Cmp::le, 1.0}}});
    list.rules.push_back({{{"x", Cmp::le, 1.0}}});
    CHECK(simplify(list).rules.size() == 1);
  }
}

TEST_CASE("simplify never changes evaluation") {
  Rng rng(37);
  const std::vector<std::string> names{"f0", "f1", "f2"};
  for (int trial = 0; trial < 200; ++trial) {
    DecisionList list = testsupport::random_list(rng, names);
    // Inject extra same-feature predicates so merging actually happens.
    if (!list.rules.empty()) {
      auto& rule = list.rules[0];
      const Predicate extra{rule.predicates[0].feature,
                            static_cast<Cmp>(rng.uniform_below(4)),
                            quantize_threshold(rng.uniform(-3.0, 3.0))};
      rule.predicates.push_back(extra);
    }
    const DecisionList simplified = simplify(list);
    check_invariants(simplified);
    for (int r = 0; r < 40; ++r) {
      std::vector<double> row(names.size());
      for (auto& v : row) v = rng.uniform(-4.0, 4.0);
      CHECK(evaluate(list, row, names).label == evaluate(simplified, row, names).label);
    }
  }
}

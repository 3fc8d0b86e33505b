#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "ruleforge/commands.hpp"
#include "ruleforge/json_io.hpp"
#include "ruleforge/models.hpp"
#include "ruleforge/rng.hpp"
#include "test_support.hpp"

using namespace ruleforge;

namespace {

FeatureMatrix two_blob_matrix(std::vector<int>& y, std::size_t n, Rng& rng) {
  FeatureMatrix X;
  X.names = {"u", "v"};
  X.kinds = {ColumnKind::numeric, ColumnKind::numeric};
  X.n_cols = 2;
  X.n_rows = n;
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    y[i] = pos ? 1 : 0;
    X.values.push_back(rng.normal(pos ? 2.0 : -2.0, 0.4));
    X.values.push_back(rng.normal(pos ? 1.0 : -1.0, 0.4));
  }
  return X;
}

}  // namespace

TEST_CASE("logistic training separates separable data") {
  Rng rng(1);
  std::vector<int> y;
  const FeatureMatrix X = two_blob_matrix(y, 80, rng);
  LogisticSettings settings;
  const LogisticModel model = train_logistic(X, y, settings);
  std::vector<int> pred(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i) pred[i] = model.predict(X.row(i)) >= 0.5 ? 1 : 0;
  CHECK(balanced_accuracy(y, pred) == 1.0);
}

TEST_CASE("logistic training rejects single-class data") {
  Rng rng(2);
  std::vector<int> y;
  const FeatureMatrix X = two_blob_matrix(y, 20, rng);
  std::fill(y.begin(), y.end(), 1);
  CHECK_THROWS_AS(train_logistic(X, y, LogisticSettings{}), DataError);
}

TEST_CASE("logistic loss is non-increasing with the default settings") {
  Rng rng(3);
  std::vector<int> y;
  const FeatureMatrix X = two_blob_matrix(y, 60, rng);
  std::vector<double> history;
  train_logistic(X, y, LogisticSettings{}, &history);
  REQUIRE(history.size() == 501);
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1] + 1e-12);
}

TEST_CASE("analytic logistic gradient matches central finite differences") {
  Rng rng(4);
  const FeatureMatrix X = testsupport::random_matrix(rng, 30, 4);
  std::vector<int> y(X.n_rows);
  for (auto& v : y) v = rng.bernoulli(0.5);
  const double l2 = 1e-3, step = 1e-5;

  for (int point = 0; point < 10; ++point) {
    std::vector<double> w(X.n_cols);
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);
    const double b = rng.uniform(-1.0, 1.0);

    std::vector<double> grad(X.n_cols);
    double grad_b = 0.0;
    logistic_gradient(X, y, w, b, l2, grad, grad_b);

    double max_diff = 0.0;
    for (std::size_t j = 0; j < X.n_cols; ++j) {
      std::vector<double> hi = w, lo = w;
      hi[j] += step;
      lo[j] -= step;
      const double fd =
          (logistic_loss(X, y, hi, b, l2) - logistic_loss(X, y, lo, b, l2)) / (2.0 * step);
      max_diff = std::max(max_diff, std::abs(fd - grad[j]));
    }
    const double fd_b =
        (logistic_loss(X, y, w, b + step, l2) - logistic_loss(X, y, w, b - step, l2)) /
        (2.0 * step);
    max_diff = std::max(max_diff, std::abs(fd_b - grad_b));
    CHECK(max_diff < 1e-5);
  }
}

TEST_CASE("gbdt represents a single-threshold concept exactly") {
  Rng rng(6);
  FeatureMatrix X = testsupport::random_matrix(rng, 200, 2);
  std::vector<int> y(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i) y[i] = X.at(i, 0) <= 0.5 ? 1 : 0;
  GbdtSettings settings;
  settings.n_trees = 10;
  settings.depth = 1;
  const BoostedTreesModel model = train_gbdt(X, y, settings);
  std::vector<int> pred(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i) pred[i] = model.predict(X.row(i)) >= 0.5 ? 1 : 0;
  CHECK(balanced_accuracy(y, pred) == 1.0);
}

TEST_CASE("extreme L2 leaf regularization collapses to the base score") {
  Rng rng(7);
  FeatureMatrix X = testsupport::random_matrix(rng, 100, 3);
  std::vector<int> y(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i) y[i] = X.at(i, 1) > 0.0 ? 1 : 0;
  GbdtSettings settings;
  settings.lambda = 1e9;
  const BoostedTreesModel model = train_gbdt(X, y, settings);
  const double base_prob = sigmoid(model.base_score);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> row{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                            rng.uniform(-2.0, 2.0)};
    CHECK_THAT(model.predict(row), Catch::Matchers::WithinAbs(base_prob, 1e-3));
  }
}

TEST_CASE("boosting loss is non-increasing across rounds") {
  Rng rng(8);
  FeatureMatrix X = testsupport::random_matrix(rng, 150, 3);
  std::vector<int> y(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i)
    y[i] = (X.at(i, 0) + 0.5 * X.at(i, 2) > 0.2) ? 1 : 0;
  std::vector<double> history;
  GbdtSettings settings;
  settings.n_trees = 40;
  train_gbdt(X, y, settings, &history);
  REQUIRE(history.size() >= 2);
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1] + 1e-12);
}

TEST_CASE("gbdt reaches the planted-rule regime on a held-out split") {
  SynthConfig cfg;
  cfg.n_firms = 1000;
  cfg.years = 5;
  cfg.noise_rate = 0.05;
  cfg.seed = 42;
  const SynthPanel panel = synth_panel(cfg);
  TrainOptions opts;
  opts.kind = "gbdt";
  opts.variant = Variant::d1;
  opts.seed = 42;
  const TrainOutcome outcome = run_training(panel.data, panel.schema, opts);
  CHECK(outcome.test_balanced_accuracy >= 0.85);
}

TEST_CASE("snapshot oracles answer stored rows verbatim and nothing else") {
  testsupport::TempDir dir("snapshot");
  const auto features = (dir.path() / "features.csv").string();
  const auto preds = (dir.path() / "preds.csv").string();
  write_text_file(features, "a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n");

  SECTION("verbatim lookup") {
    write_text_file(preds,
                    "row_id,probability\n0,0.1\n1,0.9\n2,0.5\n3,0.25\n4,0.75\n");
    const OracleSnapshot snap = load_oracle_snapshot(features, preds);
    CHECK(snap.data.n_rows() == 5);
    CHECK(snap.oracle->predict(std::vector<double>{3.0, 4.0}) == 0.9);
    CHECK(snap.oracle->predict(std::vector<double>{9.0, 10.0}) == 0.75);
    CHECK_THROWS_AS(snap.oracle->predict(std::vector<double>{1.0, 99.0}), ContractError);
  }
  SECTION("out-of-range probability") {
    write_text_file(preds, "row_id,probability\n0,0.1\n1,1.2\n2,0.5\n3,0.2\n4,0.7\n");
    CHECK_THROWS_AS(load_oracle_snapshot(features, preds), DataError);
  }
  SECTION("count mismatch") {
    write_text_file(preds, "row_id,probability\n0,0.1\n1,0.9\n2,0.5\n3,0.2\n");
    CHECK_THROWS_WITH(load_oracle_snapshot(features, preds),
                      Catch::Matchers::ContainsSubstring("count mismatch"));
  }
}

TEST_CASE("model JSON round-trips keep predictions bit-exact") {
  Rng rng(9);
  FeatureMatrix X = testsupport::random_matrix(rng, 120, 4);
  std::vector<int> y(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i)
    y[i] = (X.at(i, 0) > 0.0) != (X.at(i, 3) > 0.5) ? 1 : 0;

  SECTION("logistic") {
    const LogisticModel model = train_logistic(X, y, LogisticSettings{});
    const Json j = Json::parse(logistic_to_json(model).dump());
    const LogisticModel back = logistic_from_json(j, model.feature_names());
    for (int i = 0; i < 100; ++i) {
      std::vector<double> row(X.n_cols);
      for (auto& v : row) v = rng.uniform(-3.0, 3.0);
      CHECK(model.predict(row) == back.predict(row));
    }
  }
  SECTION("boosted trees") {
    GbdtSettings settings;
    settings.n_trees = 25;
    const BoostedTreesModel model = train_gbdt(X, y, settings);
    const Json j = Json::parse(gbdt_to_json(model).dump());
    const BoostedTreesModel back = gbdt_from_json(j, model.feature_names());
    for (int i = 0; i < 100; ++i) {
      std::vector<double> row(X.n_cols);
      for (auto& v : row) v = rng.uniform(-3.0, 3.0);
      CHECK(model.predict(row) == back.predict(row));
    }
  }
}

TEST_CASE("trained oracles stay inside [0,1] on random rows") {
  Rng rng(10);
  FeatureMatrix X = testsupport::random_matrix(rng, 100, 3);
  std::vector<int> y(X.n_rows);
  for (std::size_t i = 0; i < X.n_rows; ++i) y[i] = X.at(i, 2) > 0.1 ? 1 : 0;
  const LogisticModel logit = train_logistic(X, y, LogisticSettings{});
  GbdtSettings settings;
  settings.n_trees = 30;
  const BoostedTreesModel gbdt = train_gbdt(X, y, settings);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> row{rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0),
                            rng.uniform(-50.0, 50.0)};
    const double pl = logit.predict(row);
    const double pg = gbdt.predict(row);
    CHECK(pl >= 0.0);
    CHECK(pl <= 1.0);
    CHECK(pg >= 0.0);
    CHECK(pg <= 1.0);
  }
}

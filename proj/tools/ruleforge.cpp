// ruleforge CLI: synthesize panels, train or ingest black boxes, compute CIU
// rankings, extract decision-list rules (dexire / dexire-evo) and report.
//
// Exit codes: 0 success, 1 usage error, 2 data/contract error.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ruleforge/commands.hpp"
#include "ruleforge/errors.hpp"
#include "ruleforge/version.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string token = text.substr(pos, next - pos);
    try {
      seeds.push_back(std::stoull(token));
    } catch (const std::exception&) {
      throw ruleforge::UsageError("invalid seed list entry: " + token);
    }
    pos = next + 1;
  }
  if (seeds.empty()) throw ruleforge::UsageError("empty seed list");
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ruleforge;

  CLI::App app{"rule extraction from black-box default-prediction models"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SynthOptions synth_opts;
  std::uint64_t synth_seed = 0;
  bool synth_seed_set = false;
  auto* synth = app.add_subcommand("synth", "generate a synthetic firm-year panel");
  synth->add_option("--config", synth_opts.config_path, "generator config JSON");
  synth->add_option("--out-dir", synth_opts.out_dir, "output directory")->required();
  synth->add_option("--seed", synth_seed, "override the config seed")
      ->each([&](const std::string&) { synth_seed_set = true; });

  TrainOptions train_opts;
  std::string train_variant = "d1";
  auto* train = app.add_subcommand("train", "train a classifier and calibrate its threshold");
  train->add_option("--data", train_opts.data_path, "panel CSV")->required();
  train->add_option("--schema", train_opts.schema_path, "schema sidecar JSON")->required();
  train->add_option("--kind", train_opts.kind, "model kind: gbdt or logit");
  train->add_option("--variant", train_variant, "dataset variant: d1, d2 or d3");
  train->add_option("--seed", train_opts.seed, "split/train seed");
  train->add_flag("--grid", train_opts.grid, "small validation-set hyperparameter grid search");
  train->add_option("--out-dir", train_opts.out_dir, "output directory")->required();

  CiuOptions ciu_opts;
  auto* ciu = app.add_subcommand("ciu", "global CIU feature-importance ranking");
  ciu->add_option("--model", ciu_opts.model_path, "model JSON")->required();
  ciu->add_option("--data", ciu_opts.data_path, "panel CSV")->required();
  ciu->add_option("--schema", ciu_opts.schema_path, "schema sidecar JSON")->required();
  ciu->add_option("--sample-size", ciu_opts.sample_size, "reference sample size");
  ciu->add_option("--grid-points", ciu_opts.n_grid, "perturbation grid size");
  ciu->add_option("--seed", ciu_opts.seed, "sampling seed");
  ciu->add_option("--out-dir", ciu_opts.out_dir, "output directory")->required();

  ExtractOptions extract_opts;
  std::string compare_seeds = "1,2,3,4,5";
  auto* extract = app.add_subcommand("extract", "extract a decision-list rule set");
  extract->add_option("--method", extract_opts.method, "dexire or dexire-evo")->required();
  extract->add_option("--model", extract_opts.model_path, "model JSON (live oracle)");
  extract->add_option("--data", extract_opts.data_path,
                      "panel CSV (or features CSV with --predictions)")
      ->required();
  extract->add_option("--schema", extract_opts.schema_path, "schema sidecar JSON");
  extract->add_option("--predictions", extract_opts.predictions_path,
                      "snapshot predictions CSV (row_id,probability)");
  extract->add_option("--threshold", extract_opts.snapshot_threshold,
                      "hard-label threshold in snapshot mode");
  extract->add_option("--seed", extract_opts.seed, "search seed");
  extract->add_option("--config", extract_opts.evo_config_path, "evolution params JSON");
  extract->add_option("--importance", extract_opts.importance_path,
                      "reuse an importance.csv instead of recomputing CIU");
  extract->add_option("--cart-depth", extract_opts.cart_max_depth,
                      "surrogate tree depth (<=0: unbounded)");
  extract->add_option("--cart-min-leaf", extract_opts.cart_min_leaf,
                      "surrogate minimum rows per leaf");
  extract->add_option("--ciu-sample", extract_opts.ciu_sample, "CIU reference sample size");
  extract->add_option("--ciu-grid", extract_opts.ciu_grid, "CIU perturbation grid size");
  extract->add_flag("--compare", extract_opts.compare,
                    "loop variants d1/d2/d3 and seeds, training a gbdt per cell");
  extract->add_option("--seeds", compare_seeds, "comma-separated seeds for --compare");
  extract->add_option("--out-dir", extract_opts.out_dir, "output directory")->required();

  ReportOptions report_opts;
  auto* report = app.add_subcommand("report", "aggregate run metrics into a table");
  report->add_option("--run-dir", report_opts.run_dir, "directory of command outputs")
      ->required();
  report->add_option("--out", report_opts.out_csv, "report CSV path (default <run-dir>/report.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) {
      if (synth_seed_set) synth_opts.seed = synth_seed;
      cmd_synth(synth_opts);
    } else if (*train) {
      train_opts.variant = parse_variant(train_variant);
      cmd_train(train_opts);
    } else if (*ciu) {
      cmd_ciu(ciu_opts);
    } else if (*extract) {
      if (extract_opts.compare) extract_opts.compare_seeds = parse_seed_list(compare_seeds);
      if (!extract_opts.predictions_path.empty()) {
        if (!extract_opts.model_path.empty())
          throw UsageError("extract: --model and --predictions are mutually exclusive");
      } else if (extract_opts.schema_path.empty()) {
        throw UsageError("extract: --schema is required unless --predictions is given");
      }
      cmd_extract(extract_opts);
    } else if (*report) {
      cmd_report(report_opts);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmfuse/csv.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/experiment.hpp"
#include "mmfuse/kernels.hpp"
#include "mmfuse/rng.hpp"
#include "mmfuse/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mmfuse;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
  int jobs = 0;
};

ExperimentConfig load_config(const Globals& g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig c = ExperimentConfig::load(g.config);
  if (g.seed) c.seeds = {*g.seed};
  if (!g.output.empty()) c.output = g.output;
  return c;
}

fs::path source_dir(const Globals& g, const std::string& from) {
  if (!from.empty()) return from;
  if (!g.output.empty()) return g.output;
  throw ConfigError("pass --from <run dir> or --output");
}

fs::path target_dir(const Globals& g, const fs::path& from) { return g.output.empty() ? from : fs::path(g.output); }

int cmd_synth(const Globals& g, const std::string& kind, std::size_t n) {
  const fs::path dir = g.output.empty() ? fs::path("synthetic_" + kind) : fs::path(g.output);
  const auto manifest = make_synthetic(synthetic_from_string(kind), n, g.seed.value_or(0), dir);
  std::cout << manifest.string() << "\n";
  return 0;
}

int cmd_search(const Globals& g, const std::vector<std::string>& strategies, int budget, const std::string& sampler) {
  ExperimentConfig c = load_config(g);
  if (!sampler.empty()) c.ensemble.sampler.kind = sampler_from_string(sampler);
  c.validate();
  const auto data = load_dataset(load_manifest(c.manifest));
  const std::uint64_t seed = c.seeds.front();
  const auto split = make_folds(data, c.folds, c.valid_fraction, seed);

  std::vector<Strategy> chosen;
  for (const auto& s : strategies) chosen.push_back(strategy_from_string(s));
  if (chosen.empty()) chosen = c.ensemble.strategies;

  fs::create_directories(c.output);
  CsvTable trials;
  trials.header = {"strategy", "trial", "status", "score", "fold_scores", "config", "error"};
  nlohmann::json boards = nlohmann::json::object();
  for (Strategy s : chosen) {
    const auto space = default_space(s, data.embedding_names());
    const auto it = c.ensemble.budgets.find(s);
    const int b = budget > 0 ? budget : (it != c.ensemble.budgets.end() ? it->second : c.ensemble.default_budget);
    const auto board = run_search(space, dataset_objective(space, data, split.folds), split.folds.size(), b,
                                  derive_seed(seed, {static_cast<std::uint64_t>(s)}), c.ensemble.sampler);
    boards[to_string(s)] = board.to_json(space);
    for (const auto& t : board.trials()) {
      std::string scores;
      for (std::size_t f = 0; f < t.fold_scores.size(); ++f) scores += (f ? ";" : "") + format_double(t.fold_scores[f]);
      trials.rows.push_back({to_string(s), std::to_string(t.id), t.failed ? "failed" : "ok", format_double(t.score),
                             scores, space.describe(t.config).dump(), t.error});
    }
    std::cout << to_string(s) << ": best validation log-loss " << format_double(board.best().score) << " (trial "
              << board.best().id << ")\n";
  }
  write_csv(c.output / "trials.csv", trials);
  std::ofstream(c.output / "leaderboard.json") << boards.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const Globals& g) {
  const auto report = run_experiment(load_config(g));
  const auto& metrics = report.report.at("metrics");
  for (auto it = metrics.begin(); it != metrics.end(); ++it) {
    const auto& acc = it.value().at("summary").at("accuracy");
    std::cout << it.key() << ": accuracy " << format_double(acc.at("mean").get<double>()) << " +/- "
              << format_double(acc.at("std").get<double>()) << "\n";
  }
  if (report.vertex_violations > 0) {
    std::cerr << "error: " << report.vertex_violations << " of " << report.weight_fits
              << " weight fits exceed their best member loss\n";
    return 1;
  }
  return 0;
}

int cmd_conformal(const Globals& g, const std::string& from, std::optional<double> alpha,
                  std::optional<double> lambda, std::optional<int> k_reg) {
  const fs::path dir = source_dir(g, from);
  const auto run = load_run(dir);
  ConformalConfig cfg = run.config.conformal;
  if (alpha) cfg.alpha = *alpha;
  if (lambda) cfg.lambda = *lambda;
  if (k_reg) cfg.k_reg = *k_reg;
  CsvTable t;
  t.header = {"seed", "fold", "model", "tau", "coverage", "mean_set_size"};
  for (const auto& r : conformal_study(run, cfg))
    t.rows.push_back({std::to_string(r.seed), std::to_string(r.fold), r.model, format_double(r.tau),
                      format_double(r.coverage), format_double(r.mean_set_size)});
  const fs::path out = target_dir(g, dir);
  fs::create_directories(out);
  write_csv(out / "conformal.csv", t);
  std::cout << (out / "conformal.csv").string() << "\n";
  return 0;
}

int cmd_acquire(const Globals& g, const std::string& from, const std::string& tabular, const std::string& multimodal,
                std::vector<double> grid) {
  const fs::path dir = source_dir(g, from);
  const auto run = load_run(dir);
  if (grid.empty()) grid = run.config.fraction_grid;
  CsvTable t;
  t.header = {"seed", "fold", "policy", "fraction", "acquired", "accuracy", "balanced_accuracy"};
  for (const auto& row : acquisition_study(run, run.config.conformal, grid, tabular, multimodal))
    for (const auto& p : row.curve.points)
      t.rows.push_back({std::to_string(row.seed), std::to_string(row.fold), to_string(row.curve.policy),
                        format_double(p.fraction), std::to_string(p.acquired), format_double(p.accuracy),
                        format_double(p.balanced_accuracy)});
  const fs::path out = target_dir(g, dir);
  fs::create_directories(out);
  write_csv(out / "curves.csv", t);
  std::cout << (out / "curves.csv").string() << "\n";
  return 0;
}

int cmd_explain(const Globals& g, const std::string& from, const std::string& model, int repeats, bool per_feature) {
  const fs::path dir = source_dir(g, from);
  const auto run = load_run(dir);
  ImportanceOptions opts{repeats, !per_feature, g.seed.value_or(0)};
  CsvTable t;
  t.header = {"seed", "fold", "block", "feature", "name", "mean_drop"};
  for (const auto& r : importance_study(run, model, opts))
    t.rows.push_back({std::to_string(r.seed), std::to_string(r.fold), r.entry.block, std::to_string(r.entry.feature),
                      r.entry.name, format_double(r.entry.mean_drop)});
  const fs::path out = target_dir(g, dir);
  fs::create_directories(out);
  write_csv(out / "importance.csv", t);
  std::cout << (out / "importance.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal AutoML: search, fusion, ensembles and conformal uncertainty"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--seed", g.seed, "Seed; overrides the config seeds");
  app.add_option("--output", g.output, "Output directory");
  app.add_option("--jobs", g.jobs, "Worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);

  std::string kind = "cross_modal_xor";
  std::size_t n = 400;
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (manifest + CSVs)");
  synth->add_option("--kind", kind, "cross_modal_xor | ambiguous_half | exchangeable");
  synth->add_option("--n", n, "Number of rows")->check(CLI::Range(40, 10000000));

  std::vector<std::string> strategies;
  int budget = 0;
  std::string sampler;
  auto* search = app.add_subcommand("search", "Run the configuration search across folds");
  search->add_option("--strategy", strategies, "Strategies to search (default: config strategies)");
  search->add_option("--budget", budget, "Trials per strategy (default: config budgets)");
  search->add_option("--sampler", sampler, "density_ratio | uniform");

  auto* evaluate = app.add_subcommand("evaluate", "Cross-validated run of every strategy and the ensemble");

  std::string from;
  std::optional<double> alpha, lambda;
  std::optional<int> k_reg;
  auto* conformal = app.add_subcommand("conformal", "Conformal coverage of the saved models of a run");
  conformal->add_option("--from", from, "Run directory written by evaluate");
  conformal->add_option("--alpha", alpha, "Miscoverage level");
  conformal->add_option("--lambda", lambda, "Rank penalty");
  conformal->add_option("--k-reg", k_reg, "Unpenalized ranks");

  std::string tabular_model = "tabular", multimodal_model = kEnsembleModel;
  std::vector<double> grid;
  auto* acquire = app.add_subcommand("acquire", "Selective acquisition curves from a saved run");
  acquire->add_option("--from", from, "Run directory written by evaluate");
  acquire->add_option("--tabular-model", tabular_model, "Model used before acquisition");
  acquire->add_option("--multimodal-model", multimodal_model, "Model used after acquisition");
  acquire->add_option("--grid", grid, "Acquired fractions, from 0 to 1");

  std::string model = kEnsembleModel;
  int repeats = 5;
  bool per_feature = false;
  auto* explain = app.add_subcommand("explain", "Permutation importance of a saved model");
  explain->add_option("--from", from, "Run directory written by evaluate");
  explain->add_option("--model", model, "Model name");
  explain->add_option("--repeats", repeats, "Permutations per feature")->check(CLI::PositiveNumber);
  explain->add_flag("--per-feature", per_feature, "Single columns instead of whole modality blocks");

  for (auto* sub : {synth, search, evaluate, conformal, acquire, explain}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (g.jobs > 0) kernels::set_threads(g.jobs);
  try {
    if (*synth) return cmd_synth(g, kind, n);
    if (*search) return cmd_search(g, strategies, budget, sampler);
    if (*evaluate) return cmd_evaluate(g);
    if (*conformal) return cmd_conformal(g, from, alpha, lambda, k_reg);
    if (*acquire) return cmd_acquire(g, from, tabular_model, multimodal_model, grid);
    if (*explain) return cmd_explain(g, from, model, repeats, per_feature);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

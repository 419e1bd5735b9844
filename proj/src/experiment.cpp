#include "mmfuse/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "mmfuse/csv.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (manifest.empty()) throw ConfigError("config needs a manifest path");
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) throw ConfigError("valid_fraction must lie in (0, 1)");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (ensemble.strategies.empty()) throw ConfigError("at least one strategy is required");
  std::set<Strategy> unique(ensemble.strategies.begin(), ensemble.strategies.end());
  if (unique.size() != ensemble.strategies.size()) throw ConfigError("strategies must be distinct");
  if (ensemble.default_budget < 1) throw ConfigError("default_budget must be at least 1");
  for (const auto& [s, b] : ensemble.budgets)
    if (b < 1) throw ConfigError("budget for '" + to_string(s) + "' must be at least 1");
  if (ensemble.top_k < 1) throw ConfigError("top_k must be at least 1");
  if (ensemble.weight_budget < 0) throw ConfigError("weight_budget must be non-negative");
  if (ensemble.sampler.warmup < 0 || ensemble.sampler.candidates < 1) throw ConfigError("invalid sampler settings");
  conformal.validate();
  if (fraction_grid.size() < 2 || fraction_grid.front() != 0.0 || fraction_grid.back() != 1.0)
    throw ConfigError("fraction_grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < fraction_grid.size(); ++i)
    if (!(fraction_grid[i] > fraction_grid[i - 1])) throw ConfigError("fraction_grid must be strictly increasing");
  if (importance_options.repeats < 1) throw ConfigError("importance repeats must be at least 1");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json strategies = nlohmann::json::array();
  for (Strategy s : ensemble.strategies) strategies.push_back(to_string(s));
  nlohmann::json budgets = nlohmann::json::object();
  for (const auto& [s, b] : ensemble.budgets) budgets[to_string(s)] = b;
  nlohmann::json j = {{"manifest", fs::absolute(manifest).lexically_normal().generic_string()},
                      {"folds", folds},
                      {"valid_fraction", valid_fraction},
                      {"seeds", seeds},
                      {"strategies", strategies},
                      {"budgets", budgets},
                      {"default_budget", ensemble.default_budget},
                      {"top_k", ensemble.top_k},
                      {"weight_budget", ensemble.weight_budget},
                      {"sampler", to_string(ensemble.sampler.kind)},
                      {"warmup", ensemble.sampler.warmup},
                      {"candidates", ensemble.sampler.candidates},
                      {"conformal", {{"alpha", conformal.alpha}, {"lambda", conformal.lambda}, {"k_reg", conformal.k_reg}}},
                      {"fraction_grid", fraction_grid},
                      {"importance",
                       {{"enabled", importance},
                        {"repeats", importance_options.repeats},
                        {"per_block", importance_options.per_block}}},
                      {"output", output.generic_string()}};
  if (task) j["task"] = mmfuse::to_string(*task);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  static const std::set<std::string> known{"manifest", "task", "folds", "valid_fraction", "seeds", "seed",
                                           "strategies", "budgets", "default_budget", "top_k", "weight_budget",
                                           "sampler", "warmup", "candidates", "conformal", "fraction_grid",
                                           "importance", "output"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    if (j.contains("manifest")) c.manifest = resolve(j.at("manifest").get<std::string>());
    if (j.contains("task")) c.task = task_from_string(j.at("task").get<std::string>());
    if (j.contains("folds")) c.folds = j.at("folds").get<int>();
    if (j.contains("valid_fraction")) c.valid_fraction = j.at("valid_fraction").get<double>();
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("seed")) c.seeds = {j.at("seed").get<std::uint64_t>()};
    if (j.contains("strategies")) {
      c.ensemble.strategies.clear();
      for (const auto& s : j.at("strategies")) c.ensemble.strategies.push_back(strategy_from_string(s.get<std::string>()));
    }
    if (j.contains("budgets")) {
      const auto& b = j.at("budgets");
      if (b.is_number_integer()) {
        c.ensemble.default_budget = b.get<int>();
      } else {
        for (auto it = b.begin(); it != b.end(); ++it)
          c.ensemble.budgets[strategy_from_string(it.key())] = it.value().get<int>();
      }
    }
    if (j.contains("default_budget")) c.ensemble.default_budget = j.at("default_budget").get<int>();
    if (j.contains("top_k")) c.ensemble.top_k = j.at("top_k").get<int>();
    if (j.contains("weight_budget")) c.ensemble.weight_budget = j.at("weight_budget").get<int>();
    if (j.contains("sampler")) c.ensemble.sampler.kind = sampler_from_string(j.at("sampler").get<std::string>());
    if (j.contains("warmup")) c.ensemble.sampler.warmup = j.at("warmup").get<int>();
    if (j.contains("candidates")) c.ensemble.sampler.candidates = j.at("candidates").get<int>();
    if (j.contains("conformal")) {
      const auto& cf = j.at("conformal");
      c.conformal.alpha = cf.value("alpha", c.conformal.alpha);
      c.conformal.lambda = cf.value("lambda", c.conformal.lambda);
      c.conformal.k_reg = cf.value("k_reg", c.conformal.k_reg);
    }
    if (j.contains("fraction_grid")) c.fraction_grid = j.at("fraction_grid").get<std::vector<double>>();
    if (j.contains("importance")) {
      const auto& imp = j.at("importance");
      if (imp.is_boolean()) {
        c.importance = imp.get<bool>();
      } else {
        c.importance = imp.value("enabled", true);
        c.importance_options.repeats = imp.value("repeats", c.importance_options.repeats);
        c.importance_options.per_block = imp.value("per_block", c.importance_options.per_block);
      }
    }
    if (j.contains("output")) c.output = resolve(j.at("output").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// One (seed, fold) task

namespace {

FoldRun run_fold(const MultimodalDataset& data, const ExperimentConfig& config, MetaEnsembleOptions options,
                 std::uint64_t seed, int fold, const Fold& split) {
  FoldRun r;
  r.seed = seed;
  r.fold = fold;
  r.split = split;
  r.meta = build_meta_ensemble(data, split, options, derive_seed(seed, {static_cast<std::uint64_t>(fold)}));

  for (const auto& ens : r.meta.ensemble.strategies) {
    const auto name = to_string(ens.strategy);
    r.model_names.push_back(name);
    r.models[name] = ens.model;
    r.valid_loss[name] = ens.valid_loss;
  }
  r.model_names.push_back(kEnsembleModel);
  r.models[kEnsembleModel] = r.meta.ensemble.model;
  r.valid_loss[kEnsembleModel] = r.meta.ensemble.valid_loss;

  const FeatureBlocks test = data.blocks(split.test);
  const FeatureBlocks valid = data.blocks(split.valid);
  const auto y_test = data.labels(split.test);
  const auto y_valid = data.labels(split.valid);
  std::map<std::string, ProbabilityMatrix> test_p;
  for (const auto& name : r.model_names) {
    test_p[name] = r.models[name]->predict_proba(test);
    r.test_metrics[name] = evaluate_predictions(test_p[name], y_test);
    const auto cal = calibrate(r.models[name]->predict_proba(valid), y_valid, config.conformal);
    const auto sets = predict_sets(test_p[name], cal);
    r.calibration[name] = cal;
    r.coverage[name] = coverage(sets, y_test);
    r.set_size[name] = mean_set_size(sets);
  }

  const std::string tab = to_string(Strategy::tabular);
  if (r.models.count(tab)) {
    for (auto policy : {AcquisitionPolicy::uncertainty, AcquisitionPolicy::random})
      r.curves.push_back(acquisition_curve(test_p[tab], test_p[kEnsembleModel], y_test, r.calibration[tab],
                                           config.fraction_grid, policy,
                                           derive_seed(seed, {static_cast<std::uint64_t>(fold), 7}),
                                           data.num_classes()));
  }

  if (config.importance) {
    const auto model = r.models[kEnsembleModel];
    auto opts = config.importance_options;
    opts.seed = derive_seed(seed, {static_cast<std::uint64_t>(fold), 8});
    r.importance = permutation_importance(
        [&](const FeatureBlocks& x) { return model->predict_proba(x); }, test, y_test,
        [](const ProbabilityMatrix& p, std::span<const int> y) { return evaluate_predictions(p, y).accuracy; }, opts,
        data.schema.feature_names());
  }
  return r;
}

std::string fmt(double v) { return format_double(v); }

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string model_file(std::uint64_t seed, int fold, const std::string& name) {
  return "models/seed" + std::to_string(seed) + "_fold" + std::to_string(fold) + "_" + name + ".json";
}

nlohmann::json fold_json(const Fold& f) { return {{"train", f.train}, {"valid", f.valid}, {"test", f.test}}; }

Fold fold_from_json(const nlohmann::json& j) {
  return {j.at("train").get<std::vector<std::size_t>>(), j.at("valid").get<std::vector<std::size_t>>(),
          j.at("test").get<std::vector<std::size_t>>()};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFile("cannot write " + path.string());
  out << text;
}

CsvTable metrics_table(const ExperimentConfig& config, const std::vector<FoldRun>& runs) {
  CsvTable t;
  t.header = {"seed", "fold", "model", "status", "n_test", "valid_log_loss", "accuracy", "balanced_accuracy",
              "macro_f1", "mcc", "auroc", "coverage", "mean_set_size"};
  for (const auto& r : runs) {
    std::vector<std::string> names;
    for (Strategy s : config.ensemble.strategies) names.push_back(to_string(s));
    names.push_back(kEnsembleModel);
    for (const auto& name : names) {
      std::vector<std::string> row{std::to_string(r.seed), std::to_string(r.fold), name};
      const auto it = r.test_metrics.find(name);
      if (it == r.test_metrics.end()) {
        row.insert(row.end(), {"dropped", std::to_string(r.split.test.size()), "", "", "", "", "", "", "", ""});
      } else {
        const auto& m = it->second;
        row.insert(row.end(), {"ok", std::to_string(r.split.test.size()), fmt(r.valid_loss.at(name)), fmt(m.accuracy),
                               fmt(m.balanced_accuracy), fmt(m.macro_f1), fmt(m.mcc), fmt_opt(m.auroc),
                               fmt(r.coverage.at(name)), fmt(r.set_size.at(name))});
      }
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

CsvTable trials_table(const std::vector<FoldRun>& runs) {
  CsvTable t;
  t.header = {"seed", "fold", "strategy", "trial", "status", "score", "fold_scores", "accuracy", "config", "error"};
  for (const auto& r : runs) {
    for (const auto& [s, board] : r.meta.leaderboards) {
      const auto& space = r.meta.spaces.at(s);
      std::vector<const Trial*> by_id;
      for (const auto& trial : board.trials()) by_id.push_back(&trial);
      std::sort(by_id.begin(), by_id.end(), [](const Trial* a, const Trial* b) { return a->id < b->id; });
      for (const Trial* trial : by_id) {
        std::string scores, acc;
        for (std::size_t f = 0; f < trial->fold_scores.size(); ++f) {
          scores += (f ? ";" : "") + fmt(trial->fold_scores[f]);
          acc += (f ? ";" : "") + fmt(trial->fold_accuracy[f]);
        }
        t.rows.push_back({std::to_string(r.seed), std::to_string(r.fold), to_string(s), std::to_string(trial->id),
                          trial->failed ? "failed" : "ok", fmt(trial->score), scores, acc,
                          space.describe(trial->config).dump(), trial->error});
      }
    }
  }
  return t;
}

CsvTable curves_table(const std::vector<CurveRow>& rows) {
  CsvTable t;
  t.header = {"seed", "fold", "policy", "fraction", "acquired", "accuracy", "balanced_accuracy"};
  for (const auto& row : rows)
    for (const auto& p : row.curve.points)
      t.rows.push_back({std::to_string(row.seed), std::to_string(row.fold), to_string(row.curve.policy),
                        fmt(p.fraction), std::to_string(p.acquired), fmt(p.accuracy), fmt(p.balanced_accuracy)});
  return t;
}

nlohmann::json curve_json(const AcquisitionCurve& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : c.points)
    pts.push_back({{"fraction", p.fraction},
                   {"acquired", p.acquired},
                   {"accuracy", p.accuracy},
                   {"balanced_accuracy", p.balanced_accuracy}});
  return {{"policy", to_string(c.policy)}, {"points", pts}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Experiment

RunReport run_experiment(const ExperimentConfig& config) {
  const fs::path out = config.output;
  try {
    config.validate();
    const auto manifest = load_manifest(config.manifest);
    if (config.task && *config.task != manifest.task) throw ConfigError("config task differs from the manifest task");
    const MultimodalDataset data = load_dataset(manifest);

    MetaEnsembleOptions options = config.ensemble;
    if (data.embeddings.empty()) {
      // Only the tabular strategy is defined without an embedding.
      std::erase_if(options.strategies, [](Strategy s) { return s != Strategy::tabular; });
      if (options.strategies.empty()) throw ConfigError("dataset has no embeddings and tabular is not selected");
    }

    struct FoldTask {
      std::uint64_t seed;
      int fold;
      Fold split;
    };
    std::vector<FoldTask> tasks;
    nlohmann::json splits = nlohmann::json::array();
    for (std::uint64_t seed : config.seeds) {
      const auto split = make_folds(data, config.folds, config.valid_fraction, seed);
      for (std::size_t f = 0; f < split.folds.size(); ++f) tasks.push_back({seed, static_cast<int>(f), split.folds[f]});
    }

    std::vector<FoldRun> runs(tasks.size());
    std::vector<std::string> errors(tasks.size());
    const long n_tasks = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < n_tasks; ++t) {
      const auto& task = tasks[static_cast<std::size_t>(t)];
      try {
        runs[static_cast<std::size_t>(t)] = run_fold(data, config, options, task.seed, task.fold, task.split);
      } catch (const std::exception& e) {
        errors[static_cast<std::size_t>(t)] = "seed " + std::to_string(task.seed) + " fold " +
                                              std::to_string(task.fold) + ": " + e.what();
      }
    }
    for (const auto& e : errors)
      if (!e.empty()) throw Error(e);

    // Single writer from here on.
    fs::create_directories(out / "models");
    RunReport result;
    nlohmann::json run_entries = nlohmann::json::array();
    nlohmann::json weight_fits = nlohmann::json::array();
    std::vector<CurveRow> curve_rows;
    std::map<std::string, MetricReport> reports;
    for (const auto& r : runs) {
      nlohmann::json models = nlohmann::json::object();
      for (const auto& name : r.model_names) {
        const auto file = model_file(r.seed, r.fold, name);
        write_text(out / file, r.models.at(name)->to_json().dump() + "\n");
        models[name] = file;
        reports[name].model = name;
        reports[name].folds.push_back(r.test_metrics.at(name));
      }
      nlohmann::json fits = nlohmann::json::array();
      for (const auto& w : r.meta.weight_fits) {
        ++result.weight_fits;
        if (!w.vertex_recovered()) {
          ++result.vertex_violations;
          std::cerr << "warning: weight fit '" << w.context << "' (seed " << r.seed << ", fold " << r.fold
                    << ") exceeds its best member loss\n";
        }
        fits.push_back(w.to_json());
      }
      nlohmann::json leaderboards = nlohmann::json::object();
      for (const auto& [s, board] : r.meta.leaderboards)
        leaderboards[to_string(s)] = board.to_json(r.meta.spaces.at(s));
      nlohmann::json strategy_weights = nlohmann::json::object();
      for (const auto& ens : r.meta.ensemble.strategies)
        strategy_weights[to_string(ens.strategy)] = {{"trials", ens.trial_ids}, {"weights", ens.model->weights()}};
      nlohmann::json dropped = nlohmann::json::array();
      for (Strategy s : r.meta.ensemble.dropped) dropped.push_back(to_string(s));
      nlohmann::json conformal = nlohmann::json::object();
      for (const auto& name : r.model_names)
        conformal[name] = {{"calibration", r.calibration.at(name).to_json()},
                           {"coverage", r.coverage.at(name)},
                           {"mean_set_size", r.set_size.at(name)}};
      nlohmann::json curves = nlohmann::json::array();
      for (const auto& c : r.curves) {
        curves.push_back(curve_json(c));
        curve_rows.push_back({r.seed, r.fold, c});
      }
      nlohmann::json entry = {{"seed", r.seed},
                              {"fold", r.fold},
                              {"split", fold_json(r.split)},
                              {"models", models},
                              {"valid_loss", r.valid_loss},
                              {"strategy_ensembles", strategy_weights},
                              {"outer_weights", r.meta.ensemble.outer_weights},
                              {"dropped", dropped},
                              {"weight_fits", fits},
                              {"leaderboards", leaderboards},
                              {"conformal", conformal},
                              {"acquisition", curves}};
      if (!r.importance.empty()) {
        nlohmann::json imp = nlohmann::json::array();
        for (const auto& e : r.importance)
          imp.push_back({{"block", e.block}, {"feature", e.feature}, {"name", e.name}, {"mean_drop", e.mean_drop}});
        entry["importance"] = imp;
      }
      run_entries.push_back(std::move(entry));
    }

    nlohmann::json metric_reports = nlohmann::json::object();
    for (const auto& [name, rep] : reports) metric_reports[name] = rep.to_json();
    result.report = {{"status", "ok"},
                     {"config", config.to_json()},
                     {"dataset",
                      {{"rows", data.size()},
                       {"classes", data.class_names},
                       {"task", mmfuse::to_string(data.task)},
                       {"tabular_features", data.schema.feature_names()},
                       {"embeddings", data.embedding_names()}}},
                     {"metrics", metric_reports},
                     {"vertex_recovery",
                      {{"weight_fits", result.weight_fits}, {"violations", result.vertex_violations}}},
                     {"runs", run_entries}};

    write_text(out / "report.json", result.report.dump(2) + "\n");
    write_csv(out / "metrics.csv", metrics_table(config, runs));
    write_csv(out / "trials.csv", trials_table(runs));
    write_csv(out / "curves.csv", curves_table(curve_rows));
    result.runs = std::move(runs);
    return result;
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!ec) {
      const nlohmann::json failed = {{"status", "failed"}, {"error", e.what()}, {"partial", true}};
      std::ofstream report(out / "report.json");
      report << failed.dump(2) << "\n";
    }
    throw;
  }
}

// ---------------------------------------------------------------------------
// Reloading a finished run

SavedRun load_run(const fs::path& output_dir) {
  std::ifstream in(output_dir / "report.json");
  if (!in) throw MissingFile((output_dir / "report.json").string());
  nlohmann::json report;
  try {
    report = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("report.json: ") + e.what());
  }
  if (report.value("status", "") != "ok") throw SchemaError("report.json does not describe a finished run");
  SavedRun run;
  run.config = ExperimentConfig::from_json(report.at("config"));
  run.data = load_dataset(load_manifest(run.config.manifest));
  for (const auto& e : report.at("runs")) {
    SavedRun::Entry entry;
    entry.seed = e.at("seed").get<std::uint64_t>();
    entry.fold = e.at("fold").get<int>();
    entry.split = fold_from_json(e.at("split"));
    for (auto it = e.at("models").begin(); it != e.at("models").end(); ++it) {
      std::ifstream model_in(output_dir / it.value().get<std::string>());
      if (!model_in) throw MissingFile((output_dir / it.value().get<std::string>()).string());
      entry.models[it.key()] = predictor_from_json(nlohmann::json::parse(model_in));
    }
    run.entries.push_back(std::move(entry));
  }
  return run;
}

std::vector<ConformalRow> conformal_study(const SavedRun& run, const ConformalConfig& config) {
  config.validate();
  std::vector<ConformalRow> rows;
  for (const auto& e : run.entries) {
    const auto valid = run.data.blocks(e.split.valid);
    const auto test = run.data.blocks(e.split.test);
    const auto y_valid = run.data.labels(e.split.valid);
    const auto y_test = run.data.labels(e.split.test);
    for (const auto& [name, model] : e.models) {
      const auto cal = calibrate(model->predict_proba(valid), y_valid, config);
      const auto sets = predict_sets(model->predict_proba(test), cal);
      rows.push_back({e.seed, e.fold, name, cal.tau, coverage(sets, y_test), mean_set_size(sets)});
    }
  }
  return rows;
}

std::vector<CurveRow> acquisition_study(const SavedRun& run, const ConformalConfig& config,
                                        std::span<const double> grid, const std::string& tabular_model,
                                        const std::string& multimodal_model) {
  std::vector<CurveRow> rows;
  for (const auto& e : run.entries) {
    const auto tab = e.models.find(tabular_model);
    const auto mm = e.models.find(multimodal_model);
    if (tab == e.models.end() || mm == e.models.end())
      throw ConfigError("run has no model named '" + (tab == e.models.end() ? tabular_model : multimodal_model) + "'");
    const auto valid = run.data.blocks(e.split.valid);
    const auto test = run.data.blocks(e.split.test);
    const auto cal = calibrate(tab->second->predict_proba(valid), run.data.labels(e.split.valid), config);
    const auto p_tab = tab->second->predict_proba(test);
    const auto p_mm = mm->second->predict_proba(test);
    for (auto policy : {AcquisitionPolicy::uncertainty, AcquisitionPolicy::random})
      rows.push_back({e.seed, e.fold,
                      acquisition_curve(p_tab, p_mm, run.data.labels(e.split.test), cal, grid, policy,
                                        derive_seed(e.seed, {static_cast<std::uint64_t>(e.fold), 7}),
                                        run.data.num_classes())});
  }
  return rows;
}

std::vector<ImportanceRow> importance_study(const SavedRun& run, const std::string& model,
                                            const ImportanceOptions& options) {
  std::vector<ImportanceRow> rows;
  for (const auto& e : run.entries) {
    const auto it = e.models.find(model);
    if (it == e.models.end()) throw ConfigError("run has no model named '" + model + "'");
    const auto predictor = it->second;
    auto opts = options;
    opts.seed = derive_seed(options.seed, {e.seed, static_cast<std::uint64_t>(e.fold)});
    const auto entries = permutation_importance(
        [&](const FeatureBlocks& x) { return predictor->predict_proba(x); }, run.data.blocks(e.split.test),
        run.data.labels(e.split.test),
        [](const ProbabilityMatrix& p, std::span<const int> y) { return evaluate_predictions(p, y).accuracy; }, opts,
        run.data.schema.feature_names());
    for (const auto& entry : entries) rows.push_back({e.seed, e.fold, entry});
  }
  return rows;
}

}  // namespace mmfuse

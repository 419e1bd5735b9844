#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmfuse/conformal.hpp"
#include "mmfuse/dataset.hpp"
#include "mmfuse/metrics.hpp"
#include "mmfuse/search.hpp"

namespace mmfuse {

struct ExperimentConfig {
  std::filesystem::path manifest;
  std::optional<Task> task;  // when set, must agree with the manifest
  int folds = 5;
  double valid_fraction = 0.2;
  std::vector<std::uint64_t> seeds{0};
  MetaEnsembleOptions ensemble;
  ConformalConfig conformal;
  std::vector<double> fraction_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  bool importance = false;  // block permutation importance of the final ensemble
  ImportanceOptions importance_options{5, true, 0};
  std::filesystem::path output = "mmfuse_out";

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  // Relative paths inside the document resolve against base_dir.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
};

// Name of the final ensemble row in metrics.csv.
inline constexpr const char* kEnsembleModel = "ensemble";

struct FoldRun {
  std::uint64_t seed = 0;
  int fold = 0;
  Fold split;
  MetaEnsembleResult meta;
  std::vector<std::string> model_names;  // strategies in order, then the ensemble
  std::map<std::string, PredictorPtr> models;
  std::map<std::string, MetricValues> test_metrics;
  std::map<std::string, double> valid_loss;
  std::map<std::string, ConformalCalibration> calibration;  // per model, on the validation rows
  std::map<std::string, double> coverage;                   // per model, on the test rows
  std::map<std::string, double> set_size;
  std::vector<AcquisitionCurve> curves;
  std::vector<ImportanceEntry> importance;
};

struct RunReport {
  nlohmann::json report;
  std::vector<FoldRun> runs;
  std::size_t weight_fits = 0;
  std::size_t vertex_violations = 0;
};

// Cross-validated run of every strategy and the final ensemble. Writes
// report.json, metrics.csv, trials.csv, curves.csv and models/ into
// config.output. (seed, fold) tasks run in parallel; every file is written
// afterwards by the calling thread in a fixed order. On failure report.json
// records the error and the exception propagates.
RunReport run_experiment(const ExperimentConfig& config);

// Conformal calibration and coverage of each model on the test rows; the
// calibration set is the fold's validation carve-out.
struct ConformalRow {
  std::uint64_t seed = 0;
  int fold = 0;
  std::string model;
  double tau = 0.0;
  double coverage = 0.0;
  double mean_set_size = 0.0;
};

// A finished run reloaded from disk: dataset, folds and serialized models.
struct SavedRun {
  ExperimentConfig config;
  MultimodalDataset data;
  struct Entry {
    std::uint64_t seed = 0;
    int fold = 0;
    Fold split;
    std::map<std::string, PredictorPtr> models;
  };
  std::vector<Entry> entries;
};

SavedRun load_run(const std::filesystem::path& output_dir);

std::vector<ConformalRow> conformal_study(const SavedRun& run, const ConformalConfig& config);
struct CurveRow {
  std::uint64_t seed = 0;
  int fold = 0;
  AcquisitionCurve curve;
};

std::vector<CurveRow> acquisition_study(const SavedRun& run, const ConformalConfig& config,
                                        std::span<const double> grid, const std::string& tabular_model,
                                        const std::string& multimodal_model);

struct ImportanceRow {
  std::uint64_t seed = 0;
  int fold = 0;
  ImportanceEntry entry;
};

// Permutation importance of one saved model on each fold's test rows, scored
// by accuracy.
std::vector<ImportanceRow> importance_study(const SavedRun& run, const std::string& model,
                                            const ImportanceOptions& options);

}  // namespace mmfuse

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmfuse/dataset.hpp"
#include "mmfuse/matrix.hpp"

namespace mmfuse {

struct ConfusionMetrics {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;  // mean recall over classes present in y
  double macro_f1 = 0.0;
  double mcc = 0.0;                // 0 when the denominator vanishes
};

// Throws LengthMismatch on unequal lengths and ShapeMismatch on labels
// outside [0, classes).
ConfusionMetrics confusion_metrics(std::span<const int> predicted, std::span<const int> y, int classes);

// Mann-Whitney statistic: P(score+ > score-) + P(tie) / 2. Throws
// UndefinedMetric when either class is absent.
double auroc_binary(std::span<const double> scores, std::span<const int> positive);

// Binary tasks use column 1; multiclass tasks average one-vs-rest AUROC over
// the classes present in y (and absent from nowhere else).
double auroc(const ProbabilityMatrix& p, std::span<const int> y);

struct MetricValues {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double macro_f1 = 0.0;
  double mcc = 0.0;
  std::optional<double> auroc;  // absent when undefined on the sample

  nlohmann::json to_json() const;
};

MetricValues evaluate_predictions(const ProbabilityMatrix& p, std::span<const int> y);

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"accuracy", "balanced_accuracy", "macro_f1", "mcc", "auroc"};
  return names;
}

std::optional<double> metric_value(const MetricValues& m, const std::string& name);

// Per-fold values of one model with mean and sample std per metric.
struct MetricReport {
  std::string model;
  std::vector<MetricValues> folds;

  nlohmann::json to_json() const;
};

// Higher is better; the importance is the drop from the unpermuted score.
using ScoreFn = std::function<double(const ProbabilityMatrix& p, std::span<const int> y)>;
using PredictFn = std::function<ProbabilityMatrix(const FeatureBlocks& x)>;

struct ImportanceEntry {
  std::string block;
  int feature = -1;  // -1 for a whole block
  std::string name;
  double mean_drop = 0.0;
  std::vector<double> drops;  // one per repeat
};

struct ImportanceOptions {
  int repeats = 5;
  bool per_block = false;  // permute whole modality blocks instead of single columns
  std::uint64_t seed = 0;
};

// Shuffles rows of one column (or one whole block) with a seeded permutation
// and records the score drop. Feature names for the tabular block may be
// given; other blocks use "<block>[j]".
std::vector<ImportanceEntry> permutation_importance(const PredictFn& predict, const FeatureBlocks& x,
                                                    std::span<const int> y, const ScoreFn& score,
                                                    const ImportanceOptions& options,
                                                    std::span<const std::string> tabular_names = {});

}  // namespace mmfuse

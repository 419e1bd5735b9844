#include "mmfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mmfuse/errors.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

ConfusionMetrics confusion_metrics(std::span<const int> predicted, std::span<const int> y, int classes) {
  if (predicted.size() != y.size()) throw LengthMismatch("metrics: predictions and labels differ in length");
  const auto C = static_cast<std::size_t>(classes);
  std::vector<double> cm(C * C, 0.0);  // row = truth, column = prediction
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= classes || predicted[i] < 0 || predicted[i] >= classes)
      throw ShapeMismatch("metrics: label outside [0, classes)");
    cm[static_cast<std::size_t>(y[i]) * C + static_cast<std::size_t>(predicted[i])] += 1.0;
  }
  ConfusionMetrics m;
  const double n = static_cast<double>(y.size());
  if (y.empty()) return m;

  std::vector<double> t(C, 0.0), p(C, 0.0);
  double correct = 0.0;
  for (std::size_t a = 0; a < C; ++a)
    for (std::size_t b = 0; b < C; ++b) {
      t[a] += cm[a * C + b];
      p[b] += cm[a * C + b];
    }
  for (std::size_t k = 0; k < C; ++k) correct += cm[k * C + k];
  m.accuracy = correct / n;

  double recall_sum = 0.0, f1_sum = 0.0;
  int present = 0, scored = 0;
  for (std::size_t k = 0; k < C; ++k) {
    const double tp = cm[k * C + k];
    if (t[k] > 0) {
      recall_sum += tp / t[k];
      ++present;
    }
    if (t[k] > 0 || p[k] > 0) {
      const double fp = p[k] - tp, fn = t[k] - tp;
      f1_sum += 2.0 * tp / (2.0 * tp + fp + fn);
      ++scored;
    }
  }
  m.balanced_accuracy = present ? recall_sum / present : 0.0;
  m.macro_f1 = scored ? f1_sum / scored : 0.0;

  double pt = 0.0, pp = 0.0, tt = 0.0;
  for (std::size_t k = 0; k < C; ++k) {
    pt += p[k] * t[k];
    pp += p[k] * p[k];
    tt += t[k] * t[k];
  }
  const double denom = (n * n - pp) * (n * n - tt);
  m.mcc = denom > 0.0 ? (correct * n - pt) / std::sqrt(denom) : 0.0;
  return m;
}

double auroc_binary(std::span<const double> scores, std::span<const int> positive) {
  if (scores.size() != positive.size()) throw LengthMismatch("auroc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of mid-ranks of the positives (ranks start at 1).
  double rank_sum = 0.0, n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        rank_sum += mid;
        n_pos += 1.0;
      }
    i = j;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw UndefinedMetric("auroc needs both positive and negative samples");
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double auroc(const ProbabilityMatrix& p, std::span<const int> y) {
  if (p.rows() != y.size()) throw LengthMismatch("auroc: predictions and labels differ in length");
  std::vector<double> col(p.rows());
  std::vector<int> pos(p.rows());
  auto one_vs_rest = [&](std::size_t c) {
    for (std::size_t i = 0; i < p.rows(); ++i) {
      col[i] = p(i, c);
      pos[i] = y[i] == static_cast<int>(c) ? 1 : 0;
    }
    return auroc_binary(col, pos);
  };
  if (p.cols() == 2) return one_vs_rest(1);
  const std::set<int> present(y.begin(), y.end());
  if (present.size() < 2) throw UndefinedMetric("auroc needs at least two classes in the labels");
  double total = 0.0;
  for (int c : present) total += one_vs_rest(static_cast<std::size_t>(c));
  return total / static_cast<double>(present.size());
}

nlohmann::json MetricValues::to_json() const {
  nlohmann::json j = {{"accuracy", accuracy}, {"balanced_accuracy", balanced_accuracy}, {"macro_f1", macro_f1},
                      {"mcc", mcc}};
  j["auroc"] = auroc ? nlohmann::json(*auroc) : nlohmann::json(nullptr);
  return j;
}

MetricValues evaluate_predictions(const ProbabilityMatrix& p, std::span<const int> y) {
  const auto c = confusion_metrics(argmax_rows(p), y, static_cast<int>(p.cols()));
  MetricValues m{c.accuracy, c.balanced_accuracy, c.macro_f1, c.mcc, std::nullopt};
  try {
    m.auroc = auroc(p, y);
  } catch (const UndefinedMetric&) {
  }
  return m;
}

std::optional<double> metric_value(const MetricValues& m, const std::string& name) {
  if (name == "accuracy") return m.accuracy;
  if (name == "balanced_accuracy") return m.balanced_accuracy;
  if (name == "macro_f1") return m.macro_f1;
  if (name == "mcc") return m.mcc;
  if (name == "auroc") return m.auroc;
  throw ConfigError("unknown metric '" + name + "'");
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json per_fold = nlohmann::json::array();
  for (const auto& f : folds) per_fold.push_back(f.to_json());
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& name : metric_names()) {
    std::vector<double> v;
    for (const auto& f : folds)
      if (auto x = metric_value(f, name)) v.push_back(*x);
    if (v.empty()) {
      summary[name] = nullptr;
      continue;
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    summary[name] = {{"mean", mean}, {"std", sd}, {"n", v.size()}};
  }
  return {{"model", model}, {"folds", per_fold}, {"summary", summary}};
}

std::vector<ImportanceEntry> permutation_importance(const PredictFn& predict, const FeatureBlocks& x,
                                                    std::span<const int> y, const ScoreFn& score,
                                                    const ImportanceOptions& options,
                                                    std::span<const std::string> tabular_names) {
  if (options.repeats < 1) throw ConfigError("permutation importance needs at least one repeat");
  const double baseline = score(predict(x), y);

  std::vector<std::string> blocks{kTabular};
  for (const auto& [name, m] : x.embeddings) blocks.push_back(name);
  std::vector<ImportanceEntry> entries;
  for (const auto& b : blocks) {
    const Matrix& m = x.block(b);
    if (options.per_block) {
      entries.push_back({b, -1, b, 0.0, {}});
      continue;
    }
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::string name = b == kTabular && j < tabular_names.size() ? tabular_names[j]
                                                                   : b + "[" + std::to_string(j) + "]";
      entries.push_back({b, static_cast<int>(j), std::move(name), 0.0, {}});
    }
  }

  const std::size_t n = x.rows();
  const long total = static_cast<long>(entries.size());
  std::vector<std::string> errors(entries.size());
#pragma omp parallel for schedule(dynamic)
  for (long e = 0; e < total; ++e) {
    auto& entry = entries[static_cast<std::size_t>(e)];
    try {
      const auto block_index = static_cast<std::uint64_t>(
          std::find(blocks.begin(), blocks.end(), entry.block) - blocks.begin());
      for (int r = 0; r < options.repeats; ++r) {
        Rng rng(derive_seed(options.seed, {block_index, static_cast<std::uint64_t>(entry.feature + 1),
                                           static_cast<std::uint64_t>(r)}));
        const auto perm = rng.permutation(n);
        FeatureBlocks shuffled = x;
        Matrix& target = shuffled.block(entry.block);
        const Matrix& source = x.block(entry.block);
        for (std::size_t i = 0; i < n; ++i) {
          if (entry.feature < 0) {
            std::copy(source.row(perm[i]).begin(), source.row(perm[i]).end(), target.row(i).begin());
          } else {
            const auto j = static_cast<std::size_t>(entry.feature);
            target(i, j) = source(perm[i], j);
          }
        }
        entry.drops.push_back(baseline - score(predict(shuffled), y));
      }
      entry.mean_drop = std::accumulate(entry.drops.begin(), entry.drops.end(), 0.0) /
                        static_cast<double>(entry.drops.size());
    } catch (const std::exception& ex) {
      errors[static_cast<std::size_t>(e)] = ex.what();
    }
  }
  for (const auto& err : errors)
    if (!err.empty()) throw Error(err);
  return entries;
}

}  // namespace mmfuse

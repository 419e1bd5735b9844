#include "mmfuse/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmfuse/errors.hpp"
#include "mmfuse/metrics.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

namespace {

// ceil(x) that ignores representation error just above an integer.
std::size_t ceil_index(double x) { return static_cast<std::size_t>(std::ceil(x - 1e-9)); }

void check_row(std::span<const double> p) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= -1e-6)) throw InvalidProbability("probability row has a negative or NaN entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw InvalidProbability("probability row does not sum to one");
}

// Class indices by decreasing probability; ties keep the lower index first.
std::vector<std::size_t> rank_order(std::span<const double> p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  return order;
}

}  // namespace

void ConformalConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (k_reg < 1) throw ConfigError("k_reg must be at least 1");
}

double raps_score(std::span<const double> p, int y, double lambda, int k_reg) {
  check_row(p);
  if (y < 0 || static_cast<std::size_t>(y) >= p.size()) throw ShapeMismatch("label outside the probability row");
  const auto order = rank_order(p);
  double mass = 0.0;
  int rank = 0;
  for (std::size_t c : order) {
    mass += p[c];
    ++rank;
    if (static_cast<int>(c) == y) break;
  }
  return mass + lambda * static_cast<double>(std::max(0, rank - k_reg));
}

std::vector<double> raps_scores(const ProbabilityMatrix& p, std::span<const int> y, const ConformalConfig& config) {
  if (p.rows() != y.size()) throw LengthMismatch("scores: predictions and labels differ in length");
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = raps_score(p.row(i), y[i], config.lambda, config.k_reg);
  return out;
}

double calibrate(std::span<const double> scores, double alpha) {
  const std::size_t n = scores.size();
  if (n == 0) throw ConfigError("calibration needs at least one score");
  const std::size_t index = ceil_index(static_cast<double>(n + 1) * (1.0 - alpha));
  if (index > n) return std::numeric_limits<double>::infinity();
  std::vector<double> sorted(scores.begin(), scores.end());
  const auto k = static_cast<std::ptrdiff_t>(std::max<std::size_t>(index, 1) - 1);
  std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
  return sorted[static_cast<std::size_t>(k)];
}

nlohmann::json ConformalCalibration::to_json() const {
  return {{"alpha", config.alpha},
          {"lambda", config.lambda},
          {"k_reg", config.k_reg},
          {"tau", std::isfinite(tau) ? nlohmann::json(tau) : nlohmann::json("inf")},
          {"n_cal", n_cal}};
}

ConformalCalibration calibrate(const ProbabilityMatrix& p_cal, std::span<const int> y_cal,
                               const ConformalConfig& config) {
  config.validate();
  ConformalCalibration cal;
  cal.config = config;
  cal.n_cal = y_cal.size();
  cal.tau = calibrate(raps_scores(p_cal, y_cal, config), config.alpha);
  return cal;
}

std::vector<int> predict_set(std::span<const double> p, const ConformalCalibration& calibration) {
  check_row(p);
  const auto order = rank_order(p);
  std::vector<int> set;
  double mass = 0.0;
  int rank = 0;
  for (std::size_t c : order) {
    mass += p[c];
    ++rank;
    const double score = mass + calibration.config.lambda * static_cast<double>(std::max(0, rank - calibration.config.k_reg));
    if (score <= calibration.tau) set.push_back(static_cast<int>(c));
  }
  std::sort(set.begin(), set.end());
  return set;
}

std::vector<std::vector<int>> predict_sets(const ProbabilityMatrix& p, const ConformalCalibration& calibration) {
  std::vector<std::vector<int>> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = predict_set(p.row(i), calibration);
  return out;
}

double coverage(const std::vector<std::vector<int>>& sets, std::span<const int> y) {
  if (sets.size() != y.size()) throw LengthMismatch("coverage: sets and labels differ in length");
  if (y.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    hits += std::find(sets[i].begin(), sets[i].end(), y[i]) != sets[i].end() ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

double mean_set_size(const std::vector<std::vector<int>>& sets) {
  if (sets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : sets) total += static_cast<double>(s.size());
  return total / static_cast<double>(sets.size());
}

std::string to_string(AcquisitionPolicy p) { return p == AcquisitionPolicy::random ? "random" : "uncertainty"; }

AcquisitionPolicy policy_from_string(const std::string& s) {
  if (s == "random") return AcquisitionPolicy::random;
  if (s == "uncertainty") return AcquisitionPolicy::uncertainty;
  throw ConfigError("unknown acquisition policy '" + s + "'");
}

std::vector<std::size_t> acquisition_order(const ProbabilityMatrix& p_tabular, const ConformalCalibration& calibration,
                                           AcquisitionPolicy policy, std::uint64_t seed) {
  const std::size_t n = p_tabular.rows();
  if (policy == AcquisitionPolicy::random) {
    Rng rng(seed);
    return rng.permutation(n);
  }
  std::vector<std::size_t> size(n);
  std::vector<double> top(n);
  for (std::size_t i = 0; i < n; ++i) {
    size[i] = predict_set(p_tabular.row(i), calibration).size();
    top[i] = p_tabular(i, argmax(p_tabular.row(i)));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (size[a] != size[b]) return size[a] > size[b];
    return top[a] < top[b];
  });
  return order;
}

AcquisitionCurve acquisition_curve(const ProbabilityMatrix& p_tabular, const ProbabilityMatrix& p_multimodal,
                                   std::span<const int> y, const ConformalCalibration& calibration,
                                   std::span<const double> grid, AcquisitionPolicy policy, std::uint64_t seed,
                                   int classes) {
  if (p_tabular.rows() != y.size() || p_multimodal.rows() != y.size())
    throw LengthMismatch("acquisition: predictions and labels differ in length");
  if (p_tabular.cols() != p_multimodal.cols()) throw ShapeMismatch("acquisition: predictors disagree on classes");
  if (grid.size() < 2 || grid.front() != 0.0 || grid.back() != 1.0)
    throw ConfigError("acquisition grid must start at 0 and end at 1");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("acquisition grid must be strictly increasing");

  const std::size_t n = y.size();
  const auto order = acquisition_order(p_tabular, calibration, policy, seed);
  const auto tab = argmax_rows(p_tabular);
  const auto mm = argmax_rows(p_multimodal);
  AcquisitionCurve curve;
  curve.policy = policy;
  for (double u : grid) {
    const std::size_t k = std::min(n, ceil_index(u * static_cast<double>(n)));
    std::vector<int> pred = tab;
    for (std::size_t i = 0; i < k; ++i) pred[order[i]] = mm[order[i]];
    const auto m = confusion_metrics(pred, y, classes);
    curve.points.push_back({u, k, m.accuracy, m.balanced_accuracy});
  }
  return curve;
}

}  // namespace mmfuse

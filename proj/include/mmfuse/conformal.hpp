#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmfuse/matrix.hpp"

namespace mmfuse {

struct ConformalConfig {
  double alpha = 0.1;   // miscoverage level
  double lambda = 0.01; // rank penalty strength
  int k_reg = 2;        // ranks up to k_reg are not penalized

  void validate() const;  // throws ConfigError
};

// Cumulative sorted probability mass up to the rank of y plus
// lambda * max(0, rank - k_reg). Ties in p rank the lower class first.
// Throws InvalidProbability when p leaves the simplex by more than 1e-6.
double raps_score(std::span<const double> p, int y, double lambda, int k_reg);

std::vector<double> raps_scores(const ProbabilityMatrix& p, std::span<const int> y, const ConformalConfig& config);

// The ceil((n + 1)(1 - alpha))-th smallest score, or +inf past n.
double calibrate(std::span<const double> scores, double alpha);

struct ConformalCalibration {
  ConformalConfig config;
  double tau = 0.0;
  std::size_t n_cal = 0;

  nlohmann::json to_json() const;
};

ConformalCalibration calibrate(const ProbabilityMatrix& p_cal, std::span<const int> y_cal,
                               const ConformalConfig& config);

// Every label whose score is at most tau, in increasing class order.
std::vector<int> predict_set(std::span<const double> p, const ConformalCalibration& calibration);
std::vector<std::vector<int>> predict_sets(const ProbabilityMatrix& p, const ConformalCalibration& calibration);

// Fraction of sets containing the true label; throws LengthMismatch.
double coverage(const std::vector<std::vector<int>>& sets, std::span<const int> y);
double mean_set_size(const std::vector<std::vector<int>>& sets);

enum class AcquisitionPolicy { uncertainty, random };

std::string to_string(AcquisitionPolicy p);
AcquisitionPolicy policy_from_string(const std::string& s);

struct AcquisitionPoint {
  double fraction = 0.0;
  std::size_t acquired = 0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
};

struct AcquisitionCurve {
  AcquisitionPolicy policy = AcquisitionPolicy::uncertainty;
  std::vector<AcquisitionPoint> points;
};

// Order in which samples receive the second modality. The uncertainty policy
// ranks by RAPS set size under the tabular predictor, larger first, then by
// lower top-1 probability, then by index; the random policy is a seeded
// permutation.
std::vector<std::size_t> acquisition_order(const ProbabilityMatrix& p_tabular, const ConformalCalibration& calibration,
                                           AcquisitionPolicy policy, std::uint64_t seed);

// For each fraction u the first ceil(u * n) samples of the acquisition order
// use the multimodal prediction and the rest the tabular one. The grid must
// be strictly increasing, within [0, 1], and contain both endpoints.
AcquisitionCurve acquisition_curve(const ProbabilityMatrix& p_tabular, const ProbabilityMatrix& p_multimodal,
                                   std::span<const int> y, const ConformalCalibration& calibration,
                                   std::span<const double> grid, AcquisitionPolicy policy, std::uint64_t seed,
                                   int classes);

}  // namespace mmfuse

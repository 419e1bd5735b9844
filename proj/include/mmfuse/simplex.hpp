#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmfuse/matrix.hpp"

namespace mmfuse {

// Σ_i w_i P_i. Throws ShapeMismatch unless every member has the same shape
// and LengthMismatch when the weight count differs from the member count.
ProbabilityMatrix mix_predictions(std::span<const ProbabilityMatrix> members, std::span<const double> weights);

double mixture_log_loss(std::span<const ProbabilityMatrix> members, std::span<const double> weights,
                        std::span<const int> y);

struct SimplexFit {
  std::vector<double> weights;
  double loss = 0.0;                 // validation log-loss of the mix
  std::vector<double> member_loss;   // log-loss of every vertex
};

// Minimizes validation log-loss over the probability simplex. Starts from
// uniform weights, tries every vertex, then `budget` seeded Dirichlet(1)
// draws, then pairwise mass-transfer line searches. A candidate replaces the
// incumbent only on a strict improvement, so identical members keep uniform
// weights and the result is never worse than the best vertex.
SimplexFit optimize_simplex_weights(std::span<const ProbabilityMatrix> members, std::span<const int> y,
                                    int budget = 64, std::uint64_t seed = 0);

}  // namespace mmfuse

#include "mmfuse/simplex.hpp"

#include <algorithm>
#include <cmath>

#include "mmfuse/errors.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

namespace {

constexpr double kClip = 1e-15;
constexpr double kImprovement = 1e-12;

void check_members(std::span<const ProbabilityMatrix> members) {
  if (members.empty()) throw ShapeMismatch("no ensemble members");
  for (const auto& m : members)
    if (m.rows() != members[0].rows() || m.cols() != members[0].cols())
      throw ShapeMismatch("ensemble members differ in shape");
}

// Probability each member assigns to the true label, one vector per member.
std::vector<std::vector<double>> true_class_mass(std::span<const ProbabilityMatrix> members, std::span<const int> y) {
  std::vector<std::vector<double>> a(members.size(), std::vector<double>(y.size()));
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t n = 0; n < y.size(); ++n) a[i][n] = members[i](n, static_cast<std::size_t>(y[n]));
  return a;
}

double loss_of(const std::vector<std::vector<double>>& a, std::span<const double> w) {
  const std::size_t n = a[0].size();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double q = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) q += w[i] * a[i][r];
    total -= std::log(std::max(q, kClip));
  }
  return total / static_cast<double>(n);
}

void normalize(std::vector<double>& w) {
  double s = 0.0;
  for (double& v : w) {
    v = std::max(v, 0.0);
    s += v;
  }
  for (double& v : w) v /= s;
}

}  // namespace

ProbabilityMatrix mix_predictions(std::span<const ProbabilityMatrix> members, std::span<const double> weights) {
  check_members(members);
  if (weights.size() != members.size()) throw LengthMismatch("weight count differs from member count");
  ProbabilityMatrix out(members[0].rows(), members[0].cols());
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& src = members[i].values();
    auto& dst = out.values();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += weights[i] * src[k];
  }
  return out;
}

double mixture_log_loss(std::span<const ProbabilityMatrix> members, std::span<const double> weights,
                        std::span<const int> y) {
  return log_loss(mix_predictions(members, weights), y);
}

SimplexFit optimize_simplex_weights(std::span<const ProbabilityMatrix> members, std::span<const int> y, int budget,
                                    std::uint64_t seed) {
  check_members(members);
  if (members[0].rows() != y.size()) throw LengthMismatch("predictions and labels differ in length");
  const std::size_t m = members.size();
  const auto a = true_class_mass(members, y);

  SimplexFit fit;
  fit.member_loss.resize(m);
  std::vector<double> best(m, 1.0 / static_cast<double>(m));
  double best_loss = loss_of(a, best);
  auto consider = [&](const std::vector<double>& w) {
    const double l = loss_of(a, w);
    if (l < best_loss - kImprovement) {
      best = w;
      best_loss = l;
    }
  };

  for (std::size_t i = 0; i < m; ++i) {
    std::vector<double> vertex(m, 0.0);
    vertex[i] = 1.0;
    fit.member_loss[i] = loss_of(a, vertex);
    consider(vertex);
  }
  if (m == 1) {
    fit.weights = best;
    fit.loss = best_loss;
    return fit;
  }

  Rng rng(seed);
  for (int b = 0; b < budget; ++b) {
    std::vector<double> w(m);
    for (double& v : w) v = rng.gamma(1.0);
    normalize(w);
    consider(w);
  }

  // Coordinate refinement: move mass t from member j to member i. The loss
  // is convex in t, so golden-section search finds the line minimum.
  const std::size_t n = y.size();
  std::vector<double> base(n);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 50; ++sweep) {
    const double sweep_start = best_loss;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        for (std::size_t r = 0; r < n; ++r) {
          double q = 0.0;
          for (std::size_t k = 0; k < m; ++k) q += best[k] * a[k][r];
          base[r] = q;
        }
        auto line = [&](double t) {
          double total = 0.0;
          for (std::size_t r = 0; r < n; ++r)
            total -= std::log(std::max(base[r] + t * (a[i][r] - a[j][r]), kClip));
          return total;
        };
        double lo = -best[i], hi = best[j];
        if (hi - lo <= 0.0) continue;
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double f1 = line(x1), f2 = line(x2);
        for (int it = 0; it < 60; ++it) {
          if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = line(x1);
          } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = line(x2);
          }
        }
        for (double t : {0.5 * (lo + hi), -best[i], best[j]}) {
          std::vector<double> w = best;
          w[i] += t;
          w[j] -= t;
          normalize(w);
          consider(w);
        }
      }
    }
    if (!(best_loss < sweep_start - kImprovement)) break;
  }
  fit.weights = best;
  fit.loss = best_loss;
  return fit;
}

}  // namespace mmfuse

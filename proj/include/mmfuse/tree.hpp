#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "mmfuse/matrix.hpp"

namespace mmfuse {

class Rng;

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class distribution or a single regression value
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  std::span<const double> leaf_value(std::span<const double> x) const;
  std::size_t depth() const;
};

struct TreeParams {
  int max_depth = 0;  // 0 = unlimited
  int min_leaf = 1;
  std::size_t max_features = 0;  // features examined per split, 0 = all
};

// CART on Gini impurity. Leaves hold class frequencies. When none of the
// sampled features yields a valid split, the remaining features are tried.
DecisionTree fit_classification_tree(const Matrix& x, std::span<const int> y, int classes,
                                     std::span<const std::size_t> rows, const TreeParams& params, Rng& rng);

// Least-squares regression tree on `residual`; each leaf stores the Newton
// step sum(residual) / sum(hessian).
DecisionTree fit_regression_tree(const Matrix& x, std::span<const double> residual, std::span<const double> hessian,
                                 std::span<const std::size_t> rows, const TreeParams& params);

nlohmann::json to_json(const DecisionTree& t);
DecisionTree tree_from_json(const nlohmann::json& j);

}  // namespace mmfuse

#include "mmfuse/tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "mmfuse/errors.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

std::span<const double> DecisionTree::leaf_value(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].value;
}

std::size_t DecisionTree::depth() const {
  std::function<std::size_t(std::size_t)> rec = [&](std::size_t i) -> std::size_t {
    if (nodes[i].feature < 0) return 0;
    return 1 + std::max(rec(static_cast<std::size_t>(nodes[i].left)), rec(static_cast<std::size_t>(nodes[i].right)));
  };
  return nodes.empty() ? 0 : rec(0);
}

namespace {

constexpr double kMinGain = 1e-12;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Sorted (value, row) pairs of one feature over `rows`.
std::vector<std::pair<double, std::size_t>> sorted_column(const Matrix& x, std::span<const std::size_t> rows,
                                                          std::size_t f) {
  std::vector<std::pair<double, std::size_t>> v;
  v.reserve(rows.size());
  for (std::size_t r : rows) v.emplace_back(x(r, f), r);
  std::sort(v.begin(), v.end());
  return v;
}

double gini(const std::vector<double>& counts, double n) {
  if (n <= 0) return 0.0;
  double s = 1.0;
  for (double c : counts) s -= (c / n) * (c / n);
  return s;
}

Split best_gini_split(const Matrix& x, std::span<const int> y, int classes, std::span<const std::size_t> rows,
                      std::size_t f, int min_leaf) {
  Split best;
  auto col = sorted_column(x, rows, f);
  const double n = static_cast<double>(rows.size());
  std::vector<double> total(static_cast<std::size_t>(classes), 0.0), left(total.size(), 0.0);
  for (std::size_t r : rows) total[static_cast<std::size_t>(y[r])] += 1.0;
  const double parent = gini(total, n);
  for (std::size_t i = 0; i + 1 < col.size(); ++i) {
    left[static_cast<std::size_t>(y[col[i].second])] += 1.0;
    if (col[i].first == col[i + 1].first) continue;
    const double nl = static_cast<double>(i + 1), nr = n - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    std::vector<double> right(total.size());
    for (std::size_t c = 0; c < total.size(); ++c) right[c] = total[c] - left[c];
    const double gain = parent - (nl * gini(left, nl) + nr * gini(right, nr)) / n;
    if (gain > best.gain + kMinGain) {
      best = {static_cast<int>(f), 0.5 * (col[i].first + col[i + 1].first), gain};
      if (!(best.threshold < col[i + 1].first)) best.threshold = col[i].first;
    }
  }
  return best;
}

Split best_sse_split(const Matrix& x, std::span<const double> residual, std::span<const std::size_t> rows,
                     std::size_t f, int min_leaf) {
  Split best;
  auto col = sorted_column(x, rows, f);
  const double n = static_cast<double>(rows.size());
  double total = 0.0;
  for (std::size_t r : rows) total += residual[r];
  double left = 0.0;
  for (std::size_t i = 0; i + 1 < col.size(); ++i) {
    left += residual[col[i].second];
    if (col[i].first == col[i + 1].first) continue;
    const double nl = static_cast<double>(i + 1), nr = n - nl;
    if (nl < min_leaf || nr < min_leaf) continue;
    const double right = total - left;
    const double gain = left * left / nl + right * right / nr - total * total / n;
    if (gain > best.gain + kMinGain) {
      best = {static_cast<int>(f), 0.5 * (col[i].first + col[i + 1].first), gain};
      if (!(best.threshold < col[i + 1].first)) best.threshold = col[i].first;
    }
  }
  return best;
}

// Depth-first growth shared by both tree kinds.
template <class FindSplit, class MakeLeaf>
DecisionTree grow(const Matrix& x, std::span<const std::size_t> root_rows, const TreeParams& params,
                  FindSplit&& find_split, MakeLeaf&& make_leaf) {
  DecisionTree tree;
  struct Work {
    std::size_t node;
    std::vector<std::size_t> rows;
    int depth;
  };
  tree.nodes.emplace_back();
  std::vector<Work> stack;
  stack.push_back({0, std::vector<std::size_t>(root_rows.begin(), root_rows.end()), 0});
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    Split s;
    const bool can_split = (params.max_depth <= 0 || w.depth < params.max_depth) &&
                           w.rows.size() >= static_cast<std::size_t>(2 * std::max(1, params.min_leaf));
    if (can_split) s = find_split(w.rows);
    if (s.feature < 0) {
      tree.nodes[w.node].value = make_leaf(w.rows);
      continue;
    }
    std::vector<std::size_t> l, r;
    for (std::size_t row : w.rows) (x(row, static_cast<std::size_t>(s.feature)) <= s.threshold ? l : r).push_back(row);
    const std::size_t li = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[w.node];
    node.feature = s.feature;
    node.threshold = s.threshold;
    node.left = static_cast<int>(li);
    node.right = static_cast<int>(li + 1);
    stack.push_back({li + 1, std::move(r), w.depth + 1});
    stack.push_back({li, std::move(l), w.depth + 1});
  }
  return tree;
}

}  // namespace

DecisionTree fit_classification_tree(const Matrix& x, std::span<const int> y, int classes,
                                     std::span<const std::size_t> rows, const TreeParams& params, Rng& rng) {
  if (rows.empty()) throw ShapeMismatch("cannot grow a tree on zero rows");
  const std::size_t p = x.cols();
  const std::size_t m = params.max_features == 0 ? p : std::min(p, params.max_features);
  auto find = [&](const std::vector<std::size_t>& node_rows) {
    std::vector<std::size_t> features(p);
    std::iota(features.begin(), features.end(), std::size_t{0});
    if (m < p) features = rng.permutation(p);
    Split best;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (i >= m && best.feature >= 0) break;
      Split s = best_gini_split(x, y, classes, node_rows, features[i], params.min_leaf);
      if (s.feature >= 0 && (best.feature < 0 || s.gain > best.gain + kMinGain)) best = s;
    }
    return best;
  };
  auto leaf = [&](const std::vector<std::size_t>& node_rows) {
    std::vector<double> dist(static_cast<std::size_t>(classes), 0.0);
    for (std::size_t r : node_rows) dist[static_cast<std::size_t>(y[r])] += 1.0;
    for (double& v : dist) v /= static_cast<double>(node_rows.size());
    return dist;
  };
  return grow(x, rows, params, find, leaf);
}

DecisionTree fit_regression_tree(const Matrix& x, std::span<const double> residual, std::span<const double> hessian,
                                 std::span<const std::size_t> rows, const TreeParams& params) {
  if (rows.empty()) throw ShapeMismatch("cannot grow a tree on zero rows");
  auto find = [&](const std::vector<std::size_t>& node_rows) {
    Split best;
    for (std::size_t f = 0; f < x.cols(); ++f) {
      Split s = best_sse_split(x, residual, node_rows, f, params.min_leaf);
      if (s.feature >= 0 && (best.feature < 0 || s.gain > best.gain + kMinGain)) best = s;
    }
    return best;
  };
  auto leaf = [&](const std::vector<std::size_t>& node_rows) {
    double g = 0.0, h = 0.0;
    for (std::size_t r : node_rows) {
      g += residual[r];
      h += hessian[r];
    }
    return std::vector<double>{g / std::max(h, 1e-12)};
  };
  return grow(x, rows, params, find, leaf);
}

nlohmann::json to_json(const DecisionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    if (n.feature < 0)
      nodes.push_back({{"value", n.value}});
    else
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
  }
  return nodes;
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree t;
  for (const auto& jn : j) {
    TreeNode n;
    if (jn.contains("feature")) {
      n.feature = jn.at("feature").get<int>();
      n.threshold = jn.at("threshold").get<double>();
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
    } else {
      n.value = jn.at("value").get<std::vector<double>>();
    }
    t.nodes.push_back(std::move(n));
  }
  return t;
}

}  // namespace mmfuse

#include "mmfuse/nn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mmfuse/errors.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse::nn {

std::size_t MlpParams::input_width() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
std::size_t MlpParams::output_width() const { return layers.empty() ? 0 : layers.back().weight.cols(); }

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeMismatch("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.bias.size() != layer.weight.cols()) throw ShapeMismatch("bias width differs from layer output");
    if (l > 0 && layers[l - 1].weight.cols() != layer.weight.rows())
      throw ShapeMismatch("layer " + std::to_string(l) + " does not chain with its predecessor");
    for (double v : layer.weight.values())
      if (!std::isfinite(v)) throw DivergenceError("non-finite weight");
    for (double v : layer.bias)
      if (!std::isfinite(v)) throw DivergenceError("non-finite bias");
  }
}

namespace {

std::vector<std::size_t> widths(const Architecture& arch) {
  if (arch.input == 0 || arch.output == 0) throw ShapeMismatch("architecture needs nonzero input and output widths");
  std::vector<std::size_t> w{arch.input};
  w.insert(w.end(), arch.hidden.begin(), arch.hidden.end());
  w.push_back(arch.output);
  return w;
}

bool activated(const MlpParams& p, std::size_t layer) {
  return layer + 1 < p.layers.size() || p.activate_output;
}

}  // namespace

MlpParams zero_mlp(const Architecture& arch) {
  MlpParams p;
  p.activation = arch.activation;
  p.activate_output = arch.activate_output;
  const auto w = widths(arch);
  for (std::size_t l = 0; l + 1 < w.size(); ++l) p.layers.push_back({Matrix(w[l], w[l + 1]), std::vector<double>(w[l + 1], 0.0)});
  return p;
}

MlpParams init_mlp(const Architecture& arch, std::uint64_t seed) {
  MlpParams p = zero_mlp(arch);
  Rng rng(seed);
  for (auto& layer : p.layers) {
    const double a = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    for (double& v : layer.weight.values()) v = rng.uniform(-a, a);
  }
  return p;
}

Matrix forward(const MlpParams& p, const Matrix& x, ForwardCache* cache) {
  if (x.cols() != p.input_width())
    throw ShapeMismatch("input width " + std::to_string(x.cols()) + " != network input " +
                        std::to_string(p.input_width()));
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Matrix a = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    Matrix z = kernels::matmul(a, p.layers[l].weight);
    kernels::add_row_vector(z, p.layers[l].bias);
    if (activated(p, l)) kernels::activate(z, p.activation);
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

MlpGradients backward(const MlpParams& p, const ForwardCache& cache, Matrix d_output, bool input_gradients) {
  if (cache.activations.size() != p.layers.size() + 1) throw ShapeMismatch("forward cache does not match network");
  MlpGradients g;
  g.layers.resize(p.layers.size());
  Matrix grad = std::move(d_output);
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    if (activated(p, li)) kernels::activation_backward(grad, cache.activations[li + 1], p.activation);
    g.layers[li].weight = kernels::matmul_tn(cache.activations[li], grad);
    g.layers[li].bias = kernels::column_sums(grad);
    if (li > 0 || input_gradients) grad = kernels::matmul_nt(grad, p.layers[li].weight);
  }
  if (input_gradients) g.input = std::move(grad);
  return g;
}

ForwardResult mlp_forward(const MlpParams& p, const Matrix& x) {
  ForwardResult r;
  r.logits = forward(p, x);
  r.probabilities = r.logits;
  kernels::softmax_rows(r.probabilities);
  return r;
}

ProbabilityMatrix predict_proba(const MlpParams& p, const Matrix& x) { return mlp_forward(p, x).probabilities; }

namespace {

void check_labels(const Matrix& x, std::span<const int> y, std::size_t classes) {
  if (x.rows() != y.size()) throw ShapeMismatch("rows and labels differ in length");
  for (int v : y)
    if (v < 0 || static_cast<std::size_t>(v) >= classes) throw ShapeMismatch("label outside the output range");
}

// Mean cross-entropy from logits, and (probs - onehot) / n into `d_logits`.
double cross_entropy(const Matrix& logits, std::span<const int> y, Matrix* d_logits) {
  const std::size_t n = logits.rows(), C = logits.cols();
  double loss = 0.0;
  if (d_logits) *d_logits = Matrix(n, C);
  for (std::size_t r = 0; r < n; ++r) {
    auto z = logits.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    const double lse = mx + std::log(s);
    loss += lse - z[static_cast<std::size_t>(y[r])];
    if (d_logits) {
      for (std::size_t c = 0; c < C; ++c) (*d_logits)(r, c) = std::exp(z[c] - lse) / static_cast<double>(n);
      (*d_logits)(r, static_cast<std::size_t>(y[r])) -= 1.0 / static_cast<double>(n);
    }
  }
  return n ? loss / static_cast<double>(n) : 0.0;
}

double decay_penalty(const MlpParams& p, double weight_decay) {
  if (weight_decay == 0.0) return 0.0;
  double s = 0.0;
  for (const auto& l : p.layers)
    for (double w : l.weight.values()) s += w * w;
  return 0.5 * weight_decay * s;
}

void add_decay(const MlpParams& p, MlpGradients& g, double weight_decay) {
  if (weight_decay == 0.0) return;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& gw = g.layers[l].weight.values();
    const auto& w = p.layers[l].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) gw[i] += weight_decay * w[i];
  }
}

}  // namespace

LossAndGradients mlp_gradients(const MlpParams& p, const Matrix& x, std::span<const int> y, double weight_decay,
                               bool input_gradients) {
  check_labels(x, y, p.output_width());
  ForwardCache cache;
  Matrix logits = forward(p, x, &cache);
  Matrix d_logits;
  LossAndGradients out;
  out.loss = cross_entropy(logits, y, &d_logits) + decay_penalty(p, weight_decay);
  out.gradients = backward(p, cache, std::move(d_logits), input_gradients);
  add_decay(p, out.gradients, weight_decay);
  return out;
}

double mlp_loss(const MlpParams& p, const Matrix& x, std::span<const int> y, double weight_decay) {
  check_labels(x, y, p.output_width());
  return cross_entropy(forward(p, x), y, nullptr) + decay_penalty(p, weight_decay);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be nonnegative");
}

// ---------------------------------------------------------------------------
// Optimizer and training loops

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& c, const std::vector<std::span<double>>& params, std::vector<double> scales)
      : config_(c), scales_(std::move(scales)) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }

  void step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads) {
    ++t_;
    const double lr = config_.learning_rate;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double scale = scales_[k];
      auto p = params[k];
      auto g = grads[k];
      if (config_.optimizer == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * scale * g[i];
        continue;
      }
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
        p[i] -= lr * scale * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
      }
    }
  }

 private:
  TrainConfig config_;
  std::vector<double> scales_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

void require_two_classes(std::span<const int> y) {
  std::set<int> classes(y.begin(), y.end());
  if (classes.size() < 2) throw SingleClassError("training labels contain a single class");
}

void require_finite(const std::vector<std::span<double>>& params) {
  for (const auto& p : params)
    for (double v : p)
      if (!std::isfinite(v)) throw DivergenceError("parameters became non-finite");
}

// Shared epoch/minibatch loop. `loss_and_grads(rows)` evaluates the batch
// loss and refreshes the gradient buffers behind `grads`.
template <class BatchFn, class FullLossFn>
void run_training(std::size_t n, const TrainConfig& config, const std::vector<std::span<double>>& params,
                  std::vector<double> scales, BatchFn&& batch_step, FullLossFn&& full_loss, TrainReport* report) {
  config.validate();
  Optimizer opt(config, params, std::move(scales));
  Rng rng(config.seed);
  const double initial = full_loss();
  if (!std::isfinite(initial)) throw DivergenceError("initial loss is non-finite");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const std::size_t batch = config.batch_size == 0 || config.batch_size >= n ? n : config.batch_size;
  if (report) report->epoch_loss.clear();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < n) order = rng.permutation(n);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::span<const std::size_t> rows(order.data() + start, stop - start);
      const double loss = batch_step(rows, opt);
      if (!std::isfinite(loss)) throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch));
      require_finite(params);
      epoch_loss += loss * static_cast<double>(rows.size());
    }
    if (report) report->epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  const double final_loss = full_loss();
  if (!std::isfinite(final_loss)) throw DivergenceError("final loss is non-finite");
  if (report) {
    report->initial_loss = initial;
    report->final_loss = final_loss;
  }
}

bool is_identity(std::span<const std::size_t> rows, std::size_t n) {
  if (rows.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i)
    if (rows[i] != i) return false;
  return true;
}

}  // namespace

std::vector<std::span<double>> parameter_views(MlpParams& p) {
  std::vector<std::span<double>> v;
  for (auto& l : p.layers) {
    v.emplace_back(l.weight.values());
    v.emplace_back(l.bias);
  }
  return v;
}

std::vector<std::span<double>> gradient_views(MlpGradients& g) {
  std::vector<std::span<double>> v;
  for (auto& l : g.layers) {
    v.emplace_back(l.weight.values());
    v.emplace_back(l.bias);
  }
  return v;
}

std::vector<std::span<double>> parameter_views(JointNetwork& net) {
  std::vector<std::span<double>> v;
  for (auto& b : net.branches)
    for (auto s : parameter_views(b)) v.push_back(s);
  for (auto s : parameter_views(net.head)) v.push_back(s);
  return v;
}

std::vector<std::span<double>> gradient_views(JointGradients& g) {
  std::vector<std::span<double>> v;
  for (auto& b : g.branches)
    for (auto s : gradient_views(b)) v.push_back(s);
  for (auto s : gradient_views(g.head)) v.push_back(s);
  return v;
}

MlpParams train_mlp_from(MlpParams params, const Matrix& x, std::span<const int> y, const TrainConfig& config,
                         TrainReport* report) {
  params.validate();
  check_labels(x, y, params.output_width());
  if (x.cols() != params.input_width()) throw ShapeMismatch("input width differs from architecture");
  require_two_classes(y);
  auto views = parameter_views(params);
  MlpGradients grads;
  const std::size_t n = x.rows();
  auto step = [&](std::span<const std::size_t> rows, Optimizer& opt) {
    LossAndGradients lg;
    if (is_identity(rows, n)) {
      lg = mlp_gradients(params, x, y, config.weight_decay);
    } else {
      std::vector<int> yb(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) yb[i] = y[rows[i]];
      lg = mlp_gradients(params, select_rows(x, rows), yb, config.weight_decay);
    }
    grads = std::move(lg.gradients);
    if (std::isfinite(lg.loss)) opt.step(views, gradient_views(grads));
    return lg.loss;
  };
  auto full = [&] { return mlp_loss(params, x, y, config.weight_decay); };
  run_training(n, config, views, std::vector<double>(views.size(), 1.0), step, full, report);
  return params;
}

MlpParams train_mlp(const Matrix& x, std::span<const int> y, const Architecture& arch, const TrainConfig& config,
                    TrainReport* report) {
  if (arch.input != x.cols()) throw ShapeMismatch("architecture input width differs from data width");
  require_two_classes(y);
  return train_mlp_from(init_mlp(arch, config.seed), x, y, config, report);
}

// ---------------------------------------------------------------------------
// Joint network

void JointNetwork::validate() const {
  if (branches.empty()) throw ShapeMismatch("joint network needs at least one branch");
  std::size_t width = 0;
  for (const auto& b : branches) {
    b.validate();
    width += b.output_width();
  }
  head.validate();
  if (head.input_width() != width) throw ShapeMismatch("head input width differs from concatenated branch outputs");
}

namespace {

struct JointCache {
  std::vector<ForwardCache> branches;
  ForwardCache head;
};

Matrix joint_forward(const JointNetwork& net, std::span<const Matrix> inputs, JointCache* cache) {
  if (inputs.size() != net.branches.size()) throw ShapeMismatch("one input block per branch required");
  std::vector<Matrix> reps(inputs.size());
  if (cache) cache->branches.resize(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i)
    reps[i] = forward(net.branches[i], inputs[i], cache ? &cache->branches[i] : nullptr);
  std::vector<const Matrix*> ptrs;
  for (const auto& r : reps) ptrs.push_back(&r);
  Matrix joint = hconcat(ptrs);
  return forward(net.head, joint, cache ? &cache->head : nullptr);
}

JointGradients joint_backward(const JointNetwork& net, const JointCache& cache, Matrix d_logits, bool input_gradients) {
  JointGradients g;
  g.head = backward(net.head, cache.head, std::move(d_logits), true);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    const std::size_t w = net.branches[i].output_width();
    Matrix d_rep(g.head.input.rows(), w);
    for (std::size_t r = 0; r < d_rep.rows(); ++r)
      for (std::size_t c = 0; c < w; ++c) d_rep(r, c) = g.head.input(r, offset + c);
    offset += w;
    g.branches.push_back(backward(net.branches[i], cache.branches[i], std::move(d_rep), input_gradients));
  }
  return g;
}

double joint_decay(const JointNetwork& net, double wd) {
  double s = decay_penalty(net.head, wd);
  for (const auto& b : net.branches) s += decay_penalty(b, wd);
  return s;
}

}  // namespace

Matrix joint_representation(const JointNetwork& net, std::span<const Matrix> inputs) {
  if (inputs.size() != net.branches.size()) throw ShapeMismatch("one input block per branch required");
  std::vector<Matrix> reps;
  for (std::size_t i = 0; i < inputs.size(); ++i) reps.push_back(forward(net.branches[i], inputs[i]));
  std::vector<const Matrix*> ptrs;
  for (const auto& r : reps) ptrs.push_back(&r);
  return hconcat(ptrs);
}

ProbabilityMatrix joint_predict_proba(const JointNetwork& net, std::span<const Matrix> inputs) {
  Matrix p = joint_forward(net, inputs, nullptr);
  kernels::softmax_rows(p);
  return p;
}

double joint_loss(const JointNetwork& net, std::span<const Matrix> inputs, std::span<const int> y,
                  double weight_decay) {
  Matrix logits = joint_forward(net, inputs, nullptr);
  check_labels(logits, y, net.head.output_width());
  return cross_entropy(logits, y, nullptr) + joint_decay(net, weight_decay);
}

double joint_gradients(const JointNetwork& net, std::span<const Matrix> inputs, std::span<const int> y,
                       double weight_decay, bool input_gradients, JointGradients& gradients) {
  JointCache cache;
  Matrix logits = joint_forward(net, inputs, &cache);
  check_labels(logits, y, net.head.output_width());
  Matrix d_logits;
  const double loss = cross_entropy(logits, y, &d_logits) + joint_decay(net, weight_decay);
  gradients = joint_backward(net, cache, std::move(d_logits), input_gradients);
  add_decay(net.head, gradients.head, weight_decay);
  for (std::size_t i = 0; i < net.branches.size(); ++i) add_decay(net.branches[i], gradients.branches[i], weight_decay);
  return loss;
}

JointNetwork train_joint(JointNetwork net, std::span<const Matrix> inputs, std::span<const int> y,
                         const TrainConfig& config, double branch_lr_scale, TrainReport* report) {
  net.validate();
  if (inputs.size() != net.branches.size()) throw ShapeMismatch("one input block per branch required");
  const std::size_t n = y.size();
  for (const auto& m : inputs)
    if (m.rows() != n) throw ShapeMismatch("input blocks and labels differ in length");
  require_two_classes(y);

  auto views = parameter_views(net);
  std::vector<double> scales;
  for (const auto& b : net.branches) scales.insert(scales.end(), 2 * b.layers.size(), branch_lr_scale);
  scales.insert(scales.end(), 2 * net.head.layers.size(), 1.0);

  JointGradients grads;
  auto step = [&](std::span<const std::size_t> rows, Optimizer& opt) {
    double loss;
    if (is_identity(rows, n)) {
      loss = joint_gradients(net, inputs, y, config.weight_decay, false, grads);
    } else {
      std::vector<Matrix> xb;
      for (const auto& m : inputs) xb.push_back(select_rows(m, rows));
      std::vector<int> yb(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) yb[i] = y[rows[i]];
      loss = joint_gradients(net, xb, yb, config.weight_decay, false, grads);
    }
    if (std::isfinite(loss)) opt.step(views, gradient_views(grads));
    return loss;
  };
  auto full = [&] { return joint_loss(net, inputs, y, config.weight_decay); };
  run_training(n, config, views, scales, step, full, report);
  return net;
}

// ---------------------------------------------------------------------------
// Integrated gradients

std::vector<double> integrated_gradients(const BatchGradientFn& f, std::span<const double> x,
                                         std::span<const double> baseline, int steps) {
  if (x.size() != baseline.size()) throw ShapeMismatch("input and baseline widths differ");
  if (steps < 1) throw ConfigError("integrated gradients needs at least one step");
  const std::size_t d = x.size();
  Matrix points(static_cast<std::size_t>(steps), d);
  for (int k = 0; k < steps; ++k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < d; ++i) points(static_cast<std::size_t>(k), i) = baseline[i] + alpha * (x[i] - baseline[i]);
  }
  Matrix grads(points.rows(), d);
  f(points, grads);
  std::vector<double> attr(d, 0.0);
  for (std::size_t k = 0; k < points.rows(); ++k)
    for (std::size_t i = 0; i < d; ++i) attr[i] += grads(k, i);
  for (std::size_t i = 0; i < d; ++i) attr[i] = (x[i] - baseline[i]) * attr[i] / static_cast<double>(steps);
  return attr;
}

namespace {

// dF/d(logits) rows for F = logit_t or softmax_t; returns F per row.
std::vector<double> output_seed(const Matrix& logits, int target, OutputKind kind, Matrix& d_logits) {
  const std::size_t n = logits.rows(), C = logits.cols();
  if (target < 0 || static_cast<std::size_t>(target) >= C) throw ShapeMismatch("target class out of range");
  const auto t = static_cast<std::size_t>(target);
  d_logits = Matrix(n, C);
  std::vector<double> values(n);
  if (kind == OutputKind::logit) {
    for (std::size_t r = 0; r < n; ++r) {
      values[r] = logits(r, t);
      d_logits(r, t) = 1.0;
    }
    return values;
  }
  Matrix p = logits;
  kernels::softmax_rows(p);
  for (std::size_t r = 0; r < n; ++r) {
    const double pt = p(r, t);
    values[r] = pt;
    for (std::size_t c = 0; c < C; ++c) d_logits(r, c) = pt * ((c == t ? 1.0 : 0.0) - p(r, c));
  }
  return values;
}

}  // namespace

BatchGradientFn mlp_output_function(const MlpParams& p, int target, OutputKind kind) {
  return [&p, target, kind](const Matrix& points, Matrix& gradients) {
    ForwardCache cache;
    Matrix logits = forward(p, points, &cache);
    Matrix d_logits;
    auto values = output_seed(logits, target, kind, d_logits);
    gradients = backward(p, cache, std::move(d_logits), true).input;
    return values;
  };
}

BatchGradientFn joint_output_function(const JointNetwork& net, int target, OutputKind kind) {
  return [&net, target, kind](const Matrix& points, Matrix& gradients) {
    std::vector<Matrix> inputs;
    std::size_t offset = 0;
    for (const auto& b : net.branches) {
      const std::size_t w = b.input_width();
      Matrix m(points.rows(), w);
      for (std::size_t r = 0; r < points.rows(); ++r)
        for (std::size_t c = 0; c < w; ++c) m(r, c) = points(r, offset + c);
      offset += w;
      inputs.push_back(std::move(m));
    }
    if (offset != points.cols()) throw ShapeMismatch("concatenated input width differs from branch inputs");
    JointCache cache;
    Matrix logits = joint_forward(net, inputs, &cache);
    Matrix d_logits;
    auto values = output_seed(logits, target, kind, d_logits);
    JointGradients g = joint_backward(net, cache, std::move(d_logits), true);
    gradients = Matrix(points.rows(), points.cols());
    offset = 0;
    for (const auto& bg : g.branches) {
      for (std::size_t r = 0; r < points.rows(); ++r)
        for (std::size_t c = 0; c < bg.input.cols(); ++c) gradients(r, offset + c) = bg.input(r, c);
      offset += bg.input.cols();
    }
    return values;
  };
}

std::vector<double> integrated_gradients(const MlpParams& p, std::span<const double> x,
                                         std::span<const double> baseline, int steps, int target, OutputKind kind) {
  if (x.size() != p.input_width()) throw ShapeMismatch("input width differs from network input");
  if (target < 0) {
    Matrix row(1, x.size());
    std::copy(x.begin(), x.end(), row.row(0).begin());
    target = static_cast<int>(argmax(forward(p, row).row(0)));
  }
  return integrated_gradients(mlp_output_function(p, target, kind), x, baseline, steps);
}

// ---------------------------------------------------------------------------
// Serialization

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw SchemaError("unknown activation '" + s + "'");
}

nlohmann::json to_json(const MlpParams& p) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : p.layers) layers.push_back({{"weight", mmfuse::to_json(l.weight)}, {"bias", l.bias}});
  return {{"activation", to_string(p.activation)}, {"activate_output", p.activate_output}, {"layers", layers}};
}

MlpParams mlp_from_json(const nlohmann::json& j) {
  MlpParams p;
  p.activation = activation_from_string(j.at("activation").get<std::string>());
  p.activate_output = j.at("activate_output").get<bool>();
  for (const auto& jl : j.at("layers"))
    p.layers.push_back({matrix_from_json(jl.at("weight")), jl.at("bias").get<std::vector<double>>()});
  p.validate();
  return p;
}

nlohmann::json to_json(const JointNetwork& net) {
  nlohmann::json branches = nlohmann::json::array();
  for (const auto& b : net.branches) branches.push_back(to_json(b));
  return {{"branches", branches}, {"head", to_json(net.head)}};
}

JointNetwork joint_from_json(const nlohmann::json& j) {
  JointNetwork net;
  for (const auto& b : j.at("branches")) net.branches.push_back(mlp_from_json(b));
  net.head = mlp_from_json(j.at("head"));
  net.validate();
  return net;
}

}  // namespace mmfuse::nn

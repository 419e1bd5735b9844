#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "mmfuse/kernels.hpp"
#include "mmfuse/matrix.hpp"

// Dense feed-forward networks with explicit forward and backward passes. This
// is the engine behind logistic regression, MLP classifiers, the early/joint
// fusion heads and integrated gradients.
namespace mmfuse::nn {

using kernels::Activation;

struct DenseLayer {
  Matrix weight;  // in x out
  std::vector<double> bias;
};

struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::relu;
  // Apply the activation after the last layer too (representation branches);
  // classifiers leave it off and emit raw logits.
  bool activate_output = false;

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t parameter_count() const;
  void validate() const;
};

struct Architecture {
  std::size_t input = 0;
  std::vector<std::size_t> hidden;
  std::size_t output = 0;
  Activation activation = Activation::relu;
  bool activate_output = false;
};

// Glorot-uniform weights, a = sqrt(6 / (fan_in + fan_out)); zero biases.
MlpParams init_mlp(const Architecture& arch, std::uint64_t seed);
MlpParams zero_mlp(const Architecture& arch);

struct ForwardCache {
  // activations[0] is the input; activations[l + 1] the output of layer l.
  std::vector<Matrix> activations;
};

Matrix forward(const MlpParams& p, const Matrix& x, ForwardCache* cache = nullptr);

struct MlpGradients {
  std::vector<DenseLayer> layers;
  Matrix input;  // filled only when requested
};

// Backpropagates dL/d(output) through the cached pass.
MlpGradients backward(const MlpParams& p, const ForwardCache& cache, Matrix d_output, bool input_gradients);

struct ForwardResult {
  Matrix logits;
  ProbabilityMatrix probabilities;
};

// Throws ShapeMismatch on a wrong input width.
ForwardResult mlp_forward(const MlpParams& p, const Matrix& x);
ProbabilityMatrix predict_proba(const MlpParams& p, const Matrix& x);

struct LossAndGradients {
  double loss = 0.0;
  MlpGradients gradients;
};

// Mean cross-entropy plus (weight_decay / 2) * sum of squared weights (biases
// excluded) and its gradient.
LossAndGradients mlp_gradients(const MlpParams& p, const Matrix& x, std::span<const int> y, double weight_decay = 0.0,
                               bool input_gradients = false);
double mlp_loss(const MlpParams& p, const Matrix& x, std::span<const int> y, double weight_decay = 0.0);

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 200;
  std::size_t batch_size = 0;  // 0 = full batch
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

// Throws SingleClassError when y has one class, DivergenceError when the loss
// or the parameters become non-finite.
MlpParams train_mlp(const Matrix& x, std::span<const int> y, const Architecture& arch, const TrainConfig& config,
                    TrainReport* report = nullptr);
MlpParams train_mlp_from(MlpParams init, const Matrix& x, std::span<const int> y, const TrainConfig& config,
                         TrainReport* report = nullptr);

// Per-modality branch networks whose activated outputs are concatenated and
// fed to a shared classification head.
struct JointNetwork {
  std::vector<MlpParams> branches;
  MlpParams head;

  void validate() const;
};

struct JointGradients {
  std::vector<MlpGradients> branches;
  MlpGradients head;
};

Matrix joint_representation(const JointNetwork& net, std::span<const Matrix> inputs);
ProbabilityMatrix joint_predict_proba(const JointNetwork& net, std::span<const Matrix> inputs);
double joint_loss(const JointNetwork& net, std::span<const Matrix> inputs, std::span<const int> y,
                  double weight_decay = 0.0);
// Loss and gradients for every parameter; input gradients land in
// gradients.branches[i].input when requested.
double joint_gradients(const JointNetwork& net, std::span<const Matrix> inputs, std::span<const int> y,
                       double weight_decay, bool input_gradients, JointGradients& gradients);
// One optimization loop updating branches and head together. Branch learning
// rates are scaled by branch_lr_scale (0 freezes the branches).
JointNetwork train_joint(JointNetwork init, std::span<const Matrix> inputs, std::span<const int> y,
                         const TrainConfig& config, double branch_lr_scale = 1.0, TrainReport* report = nullptr);

// Flat views of every parameter / gradient tensor in a fixed order
// (layer by layer, weight then bias).
std::vector<std::span<double>> parameter_views(MlpParams& p);
std::vector<std::span<double>> gradient_views(MlpGradients& g);
std::vector<std::span<double>> parameter_views(JointNetwork& net);
std::vector<std::span<double>> gradient_views(JointGradients& g);

// ---------------------------------------------------------------------------
// Integrated gradients

enum class OutputKind { probability, logit };

// Evaluates F on every row of `points`; returns F per row and writes dF/dx
// rows into `gradients` (same shape as points).
using BatchGradientFn = std::function<std::vector<double>(const Matrix& points, Matrix& gradients)>;

// attribution_i = (x_i - baseline_i) * mean of dF/dx_i over the midpoints
// baseline + (k + 1/2)/steps * (x - baseline), k = 0..steps-1.
std::vector<double> integrated_gradients(const BatchGradientFn& f, std::span<const double> x,
                                         std::span<const double> baseline, int steps);

BatchGradientFn mlp_output_function(const MlpParams& p, int target, OutputKind kind = OutputKind::probability);
// Inputs are the concatenation of every branch input in branch order.
BatchGradientFn joint_output_function(const JointNetwork& net, int target, OutputKind kind = OutputKind::probability);

// Target defaults to the predicted class at x.
std::vector<double> integrated_gradients(const MlpParams& p, std::span<const double> x,
                                         std::span<const double> baseline, int steps, int target = -1,
                                         OutputKind kind = OutputKind::probability);

nlohmann::json to_json(const MlpParams& p);
MlpParams mlp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const JointNetwork& net);
JointNetwork joint_from_json(const nlohmann::json& j);

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

}  // namespace mmfuse::nn

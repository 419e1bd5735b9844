#include "mmfuse/fusion.hpp"

#include <cmath>

#include "mmfuse/errors.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

ProbabilityMatrix predict_late(std::span<const double> weights, std::span<const ProbabilityMatrix> members) {
  return mix_predictions(members, weights);
}

std::vector<double> fit_late_fusion(std::span<const ProbabilityMatrix> valid_members, std::span<const int> y_valid,
                                    int budget, std::uint64_t seed) {
  return optimize_simplex_weights(valid_members, y_valid, budget, seed).weights;
}

Representation fit_representation(const FeatureBlocks& train, const RepresentationSpec& spec) {
  return {spec.source, fit_preprocessor(train.block(spec.source), spec.imputer, spec.scaler, spec.pca_components)};
}

std::vector<double> attribution_baseline(const FeatureBlocks& train, const std::string& block) {
  const Matrix& x = train.block(block);
  std::vector<double> base(x.cols(), 0.0);
  if (block != kTabular) return base;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sum = 0.0, n = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r)
      if (!std::isnan(x(r, c))) {
        sum += x(r, c);
        n += 1.0;
      }
    base[c] = n > 0.0 ? sum / n : 0.0;
  }
  return base;
}

nlohmann::json to_json(const Representation& r) {
  return {{"source", r.source}, {"extractor", to_json(r.extractor)}};
}

Representation representation_from_json(const nlohmann::json& j) {
  return {j.at("source").get<std::string>(), preprocessor_from_json(j.at("extractor"))};
}

namespace {

nlohmann::json representations_json(const std::vector<Representation>& reps) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reps) out.push_back(to_json(r));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Early fusion

EarlyFusionModel::EarlyFusionModel(std::vector<Representation> representations, nn::MlpParams head)
    : representations_(std::move(representations)), head_(std::move(head)) {
  if (representations_.empty()) throw ShapeMismatch("early fusion needs at least one representation");
  std::size_t width = 0;
  for (const auto& r : representations_) width += r.width();
  if (head_.input_width() != width) throw ShapeMismatch("head input width differs from the representation widths");
}

Matrix EarlyFusionModel::represent(const FeatureBlocks& x) const {
  std::vector<Matrix> parts;
  parts.reserve(representations_.size());
  for (const auto& r : representations_) parts.push_back(r.transform(x));
  std::vector<const Matrix*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  return hconcat(ptrs);
}

ProbabilityMatrix EarlyFusionModel::predict_proba(const FeatureBlocks& x) const {
  return nn::predict_proba(head_, represent(x));
}

nlohmann::json EarlyFusionModel::to_json() const {
  return {{"type", kind()}, {"representations", representations_json(representations_)}, {"head", nn::to_json(head_)}};
}

EarlyFusionModel fit_early_fusion(std::vector<Representation> representations, const FeatureBlocks& train,
                                  std::span<const int> y, int classes, const HeadSpec& head) {
  std::size_t width = 0;
  for (const auto& r : representations) width += r.width();
  // Build with a placeholder head to reuse the concatenation.
  EarlyFusionModel staged(representations, nn::zero_mlp({width, {}, static_cast<std::size_t>(classes)}));
  const Matrix z = staged.represent(train);
  nn::Architecture arch{width, head.hidden, static_cast<std::size_t>(classes), head.activation};
  return EarlyFusionModel(std::move(representations), nn::train_mlp(z, y, arch, head.train));
}

EarlyFusionModel fit_early_fusion(const FeatureBlocks& train, std::span<const int> y, int classes,
                                  std::span<const RepresentationSpec> representations, const HeadSpec& head) {
  std::vector<Representation> reps;
  for (const auto& spec : representations) reps.push_back(fit_representation(train, spec));
  return fit_early_fusion(std::move(reps), train, y, classes, head);
}

// ---------------------------------------------------------------------------
// Joint fusion

JointFusionModel::JointFusionModel(std::vector<Representation> inputs, nn::JointNetwork network)
    : inputs_(std::move(inputs)), network_(std::move(network)) {
  network_.validate();
  if (inputs_.size() != network_.branches.size()) throw ShapeMismatch("one branch per input is required");
  for (std::size_t i = 0; i < inputs_.size(); ++i)
    if (inputs_[i].width() != network_.branches[i].input_width())
      throw ShapeMismatch("branch input width differs from its representation");
}

std::vector<Matrix> JointFusionModel::branch_inputs(const FeatureBlocks& x) const {
  std::vector<Matrix> out;
  out.reserve(inputs_.size());
  for (const auto& r : inputs_) out.push_back(r.transform(x));
  return out;
}

ProbabilityMatrix JointFusionModel::predict_proba(const FeatureBlocks& x) const {
  return nn::joint_predict_proba(network_, branch_inputs(x));
}

nlohmann::json JointFusionModel::to_json() const {
  return {{"type", kind()}, {"inputs", representations_json(inputs_)}, {"network", nn::to_json(network_)}};
}

nn::JointNetwork init_joint_network(std::span<const std::size_t> input_widths, const JointFusionSpec& spec,
                                    int classes, std::uint64_t seed) {
  if (input_widths.size() != spec.branches.size()) throw ShapeMismatch("one input width per branch is required");
  nn::JointNetwork net;
  std::size_t joint_width = 0;
  for (std::size_t b = 0; b < spec.branches.size(); ++b) {
    const auto& bs = spec.branches[b];
    nn::Architecture arch{input_widths[b], bs.hidden, bs.output, spec.head.activation, true};
    net.branches.push_back(nn::init_mlp(arch, derive_seed(seed, {1, b})));
    joint_width += bs.output;
  }
  nn::Architecture head{joint_width, spec.head.hidden, static_cast<std::size_t>(classes), spec.head.activation};
  net.head = nn::init_mlp(head, derive_seed(seed, {2}));
  return net;
}

JointFusionModel fit_joint_fusion(const FeatureBlocks& train, std::span<const int> y, int classes,
                                  const JointFusionSpec& spec, nn::TrainReport* report) {
  std::vector<Representation> reps;
  std::vector<std::size_t> widths;
  for (const auto& b : spec.branches) {
    reps.push_back(fit_representation(train, b.input));
    widths.push_back(reps.back().width());
  }
  std::vector<Matrix> inputs;
  for (const auto& r : reps) inputs.push_back(r.transform(train));
  auto init = init_joint_network(widths, spec, classes, spec.head.train.seed);
  auto net = nn::train_joint(std::move(init), inputs, y, spec.head.train, 1.0, report);
  return JointFusionModel(std::move(reps), std::move(net));
}

}  // namespace mmfuse

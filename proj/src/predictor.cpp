#include "mmfuse/predictor.hpp"

#include <cmath>

#include "mmfuse/errors.hpp"
#include "mmfuse/fusion.hpp"
#include "mmfuse/simplex.hpp"

namespace mmfuse {

ProbabilityMatrix PipelinePredictor::predict_proba(const FeatureBlocks& x) const {
  return pipeline_predict_proba(pipeline_, x.block(source_));
}

nlohmann::json PipelinePredictor::to_json() const {
  return {{"type", kind()}, {"source", source_}, {"pipeline", mmfuse::to_json(pipeline_)}};
}

WeightedEnsemble::WeightedEnsemble(std::string label, std::vector<PredictorPtr> members, std::vector<double> weights)
    : label_(std::move(label)), members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty()) throw ShapeMismatch("ensemble without members");
  if (weights_.size() != members_.size()) throw LengthMismatch("weight count differs from member count");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw InvalidProbability("negative ensemble weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidProbability("ensemble weights do not sum to one");
  for (const auto& m : members_)
    if (m->num_classes() != members_[0]->num_classes()) throw ShapeMismatch("ensemble members disagree on classes");
}

int WeightedEnsemble::num_classes() const { return members_[0]->num_classes(); }

ProbabilityMatrix WeightedEnsemble::predict_proba(const FeatureBlocks& x) const {
  std::vector<ProbabilityMatrix> preds;
  preds.reserve(members_.size());
  for (const auto& m : members_) preds.push_back(m->predict_proba(x));
  return mix_predictions(preds, weights_);
}

nlohmann::json WeightedEnsemble::to_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : members_) members.push_back(m->to_json());
  return {{"type", kind()}, {"label", label_}, {"weights", weights_}, {"members", members}};
}

PredictorPtr predictor_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "pipeline")
    return std::make_shared<PipelinePredictor>(j.at("source").get<std::string>(), pipeline_from_json(j.at("pipeline")));
  if (type == "weighted_ensemble") {
    std::vector<PredictorPtr> members;
    for (const auto& m : j.at("members")) members.push_back(predictor_from_json(m));
    return std::make_shared<WeightedEnsemble>(j.at("label").get<std::string>(), std::move(members),
                                              j.at("weights").get<std::vector<double>>());
  }
  if (type == "early_fusion") {
    std::vector<Representation> reps;
    for (const auto& r : j.at("representations")) reps.push_back(representation_from_json(r));
    return std::make_shared<EarlyFusionModel>(std::move(reps), nn::mlp_from_json(j.at("head")));
  }
  if (type == "joint_fusion") {
    std::vector<Representation> reps;
    for (const auto& r : j.at("inputs")) reps.push_back(representation_from_json(r));
    return std::make_shared<JointFusionModel>(std::move(reps), nn::joint_from_json(j.at("network")));
  }
  throw SchemaError("unknown predictor type '" + type + "'");
}

}  // namespace mmfuse

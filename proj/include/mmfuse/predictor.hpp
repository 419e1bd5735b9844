#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmfuse/dataset.hpp"
#include "mmfuse/matrix.hpp"
#include "mmfuse/pipeline.hpp"

namespace mmfuse {

// A fitted model over multimodal feature blocks. Implementations are
// immutable after fitting, so predict_proba is safe to call concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual ProbabilityMatrix predict_proba(const FeatureBlocks& x) const = 0;
  virtual int num_classes() const = 0;
  virtual std::string kind() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using PredictorPtr = std::shared_ptr<const Predictor>;

// Tabular pipeline applied to one block (the tabular table or an embedding).
class PipelinePredictor final : public Predictor {
 public:
  PipelinePredictor(std::string source, FittedTabularPipeline pipeline)
      : source_(std::move(source)), pipeline_(std::move(pipeline)) {}

  ProbabilityMatrix predict_proba(const FeatureBlocks& x) const override;
  int num_classes() const override { return pipeline_.classes(); }
  std::string kind() const override { return "pipeline"; }
  nlohmann::json to_json() const override;

  const std::string& source() const { return source_; }
  const FittedTabularPipeline& pipeline() const { return pipeline_; }

 private:
  std::string source_;
  FittedTabularPipeline pipeline_;
};

// Convex combination of member predictions: late fusion, strategy ensembles
// and the outer ensemble all take this form.
class WeightedEnsemble final : public Predictor {
 public:
  WeightedEnsemble(std::string label, std::vector<PredictorPtr> members, std::vector<double> weights);

  ProbabilityMatrix predict_proba(const FeatureBlocks& x) const override;
  int num_classes() const override;
  std::string kind() const override { return "weighted_ensemble"; }
  nlohmann::json to_json() const override;

  const std::string& label() const { return label_; }
  const std::vector<PredictorPtr>& members() const { return members_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::string label_;
  std::vector<PredictorPtr> members_;
  std::vector<double> weights_;
};

// Rebuilds any predictor written by Predictor::to_json.
PredictorPtr predictor_from_json(const nlohmann::json& j);

}  // namespace mmfuse

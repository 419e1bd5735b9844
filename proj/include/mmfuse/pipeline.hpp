#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mmfuse/matrix.hpp"
#include "mmfuse/nn.hpp"
#include "mmfuse/preprocess.hpp"
#include "mmfuse/tree.hpp"

namespace mmfuse {

struct LogisticSpec {
  double l2 = 1e-3;
  double learning_rate = 0.1;
  int epochs = 200;
};

struct ForestSpec {
  int n_trees = 50;
  int max_depth = 0;  // 0 = unlimited
  int min_leaf = 1;
};

struct BoostingSpec {
  int n_rounds = 50;
  double learning_rate = 0.1;
  int max_depth = 3;
};

struct MlpSpec {
  std::vector<std::size_t> hidden{32};
  double learning_rate = 0.01;
  int epochs = 200;
  double weight_decay = 1e-4;
  nn::Activation activation = nn::Activation::relu;
};

using ClassifierSpec = std::variant<LogisticSpec, ForestSpec, BoostingSpec, MlpSpec>;

enum class ReducerKind { none, pca };

struct TabularPipelineSpec {
  ImputerKind imputer = ImputerKind::mean;
  ScalerKind scaler = ScalerKind::standard;
  ReducerKind reducer = ReducerKind::none;
  std::size_t pca_components = 0;
  ClassifierSpec classifier = LogisticSpec{};

  // Throws ConfigError when a hyperparameter is out of range for p columns.
  void validate(std::size_t p) const;
};

nlohmann::json to_json(const ClassifierSpec& s);
ClassifierSpec classifier_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TabularPipelineSpec& s);
TabularPipelineSpec pipeline_spec_from_json(const nlohmann::json& j);
std::string classifier_name(const ClassifierSpec& s);

struct RandomForest {
  std::vector<DecisionTree> trees;
  int classes = 0;

  ProbabilityMatrix predict_proba(const Matrix& x) const;
};

struct GradientBoosting {
  std::vector<double> init;                       // per-class initial score
  std::vector<std::vector<DecisionTree>> rounds;  // rounds x classes
  std::vector<double> step;                       // accepted step per round
  int classes = 0;
  std::vector<double> train_loss;                 // log-loss after init and each round

  Matrix decision_function(const Matrix& x) const;
  ProbabilityMatrix predict_proba(const Matrix& x) const;
};

struct FittedClassifier {
  std::variant<nn::MlpParams, RandomForest, GradientBoosting> model;
  int classes = 0;

  ProbabilityMatrix predict_proba(const Matrix& x) const;
};

// Throws SingleClassError when y_train holds one class.
FittedClassifier fit_classifier(const Matrix& x, std::span<const int> y, int classes, const ClassifierSpec& spec,
                                std::uint64_t seed);

struct FittedTabularPipeline {
  TabularPipelineSpec spec;
  Preprocessor stages;
  FittedClassifier classifier;

  std::size_t input_width() const { return stages.input_width; }
  int classes() const { return classifier.classes; }
};

FittedTabularPipeline fit_pipeline(const Matrix& x, std::span<const int> y, int classes,
                                   const TabularPipelineSpec& spec, std::uint64_t seed);

// Stages applied in fit order; throws ShapeMismatch on a wrong width.
ProbabilityMatrix pipeline_predict_proba(const FittedTabularPipeline& pipeline, const Matrix& x);

nlohmann::json to_json(const FittedTabularPipeline& p);
FittedTabularPipeline pipeline_from_json(const nlohmann::json& j);

}  // namespace mmfuse

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmfuse/dataset.hpp"
#include "mmfuse/nn.hpp"
#include "mmfuse/predictor.hpp"
#include "mmfuse/preprocess.hpp"
#include "mmfuse/simplex.hpp"

namespace mmfuse {

// Late fusion: Σ_i w_i P_i over member predictions.
ProbabilityMatrix predict_late(std::span<const double> weights, std::span<const ProbabilityMatrix> members);

// Simplex weights for late fusion, fitted on validation predictions.
std::vector<double> fit_late_fusion(std::span<const ProbabilityMatrix> valid_members, std::span<const int> y_valid,
                                    int budget = 64, std::uint64_t seed = 0);

// How one modality is turned into a fixed representation: a preprocessor
// fitted on training rows (imputation, scaling, optional PCA).
struct RepresentationSpec {
  std::string source = kTabular;
  ImputerKind imputer = ImputerKind::mean;
  ScalerKind scaler = ScalerKind::standard;
  std::size_t pca_components = 0;  // 0 keeps every column
};

struct Representation {
  std::string source;
  Preprocessor extractor;

  Matrix transform(const FeatureBlocks& x) const { return extractor.transform(x.block(source)); }
  std::size_t width() const { return extractor.output_width(); }
};

Representation fit_representation(const FeatureBlocks& train, const RepresentationSpec& spec);

struct HeadSpec {
  std::vector<std::size_t> hidden{32};
  nn::Activation activation = nn::Activation::relu;
  nn::TrainConfig train;
};

// Frozen per-modality extractors, concatenated in order, feeding an MLP head.
class EarlyFusionModel final : public Predictor {
 public:
  EarlyFusionModel(std::vector<Representation> representations, nn::MlpParams head);

  ProbabilityMatrix predict_proba(const FeatureBlocks& x) const override;
  int num_classes() const override { return static_cast<int>(head_.output_width()); }
  std::string kind() const override { return "early_fusion"; }
  nlohmann::json to_json() const override;

  Matrix represent(const FeatureBlocks& x) const;
  const std::vector<Representation>& representations() const { return representations_; }
  const nn::MlpParams& head() const { return head_; }

 private:
  std::vector<Representation> representations_;
  nn::MlpParams head_;
};

// Trains the head on already fitted (frozen) representations.
EarlyFusionModel fit_early_fusion(std::vector<Representation> representations, const FeatureBlocks& train,
                                  std::span<const int> y, int classes, const HeadSpec& head);

// Fits the extractors on the training rows, then the head.
EarlyFusionModel fit_early_fusion(const FeatureBlocks& train, std::span<const int> y, int classes,
                                  std::span<const RepresentationSpec> representations, const HeadSpec& head);

struct BranchSpec {
  RepresentationSpec input;
  std::vector<std::size_t> hidden;  // layers before the output layer
  std::size_t output = 16;
};

struct JointFusionSpec {
  std::vector<BranchSpec> branches;
  HeadSpec head;
};

// Trainable per-modality branches and a shared head, optimized together.
// The input preprocessors are fitted on training rows and stay fixed.
class JointFusionModel final : public Predictor {
 public:
  JointFusionModel(std::vector<Representation> inputs, nn::JointNetwork network);

  ProbabilityMatrix predict_proba(const FeatureBlocks& x) const override;
  int num_classes() const override { return static_cast<int>(network_.head.output_width()); }
  std::string kind() const override { return "joint_fusion"; }
  nlohmann::json to_json() const override;

  std::vector<Matrix> branch_inputs(const FeatureBlocks& x) const;
  const std::vector<Representation>& inputs() const { return inputs_; }
  const nn::JointNetwork& network() const { return network_; }

 private:
  std::vector<Representation> inputs_;
  nn::JointNetwork network_;
};

// Seeded initial network for the given branch input widths.
nn::JointNetwork init_joint_network(std::span<const std::size_t> input_widths, const JointFusionSpec& spec,
                                    int classes, std::uint64_t seed);

JointFusionModel fit_joint_fusion(const FeatureBlocks& train, std::span<const int> y, int classes,
                                  const JointFusionSpec& spec, nn::TrainReport* report = nullptr);

// Integrated-gradients baseline for one block: the training mean (missing
// cells skipped) for the tabular block, zero for embeddings.
std::vector<double> attribution_baseline(const FeatureBlocks& train, const std::string& block);

nlohmann::json to_json(const Representation& r);
Representation representation_from_json(const nlohmann::json& j);

}  // namespace mmfuse

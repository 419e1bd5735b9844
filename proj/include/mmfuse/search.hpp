#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmfuse/dataset.hpp"
#include "mmfuse/predictor.hpp"

namespace mmfuse {

enum class Strategy { tabular, imaging_head, late, early, joint };

inline constexpr std::array<Strategy, 5> kAllStrategies{Strategy::tabular, Strategy::imaging_head, Strategy::late,
                                                        Strategy::early, Strategy::joint};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

enum class DimensionKind { categorical, real, integer };

struct Dimension {
  std::string name;
  DimensionKind kind = DimensionKind::real;
  std::vector<std::string> choices;  // categorical only
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;  // real only
};

// A configuration holds one value per dimension: the choice index for
// categorical dimensions, the value itself otherwise.
using Config = std::vector<double>;

struct SearchSpace {
  Strategy strategy = Strategy::tabular;
  std::vector<Dimension> dims;

  void validate() const;  // throws ConfigError
  std::size_t index(const std::string& name) const;
  bool contains(const Config& c) const;
  nlohmann::json describe(const Config& c) const;  // {name: value or choice}
};

// The built-in domain of a strategy; `embeddings` lists the embedding blocks.
SearchSpace default_space(Strategy s, const std::vector<std::string>& embeddings);

// Worst clipped log-loss; failed trials are scored with it.
inline constexpr double kFailedScore = 34.538776394910684;

struct Trial {
  int id = 0;
  Config config;
  std::vector<double> fold_scores;    // validation log-loss per fold
  std::vector<double> fold_accuracy;  // auxiliary validation accuracy
  double score = kFailedScore;        // mean over folds
  bool failed = false;
  std::string error;
};

// Trials ordered by score, ties broken by trial id.
class Leaderboard {
 public:
  void add(Trial t);
  const std::vector<Trial>& trials() const { return trials_; }
  std::size_t size() const { return trials_.size(); }
  bool empty() const { return trials_.empty(); }
  const Trial& best() const { return trials_.front(); }
  std::vector<const Trial*> successful(std::size_t limit) const;
  nlohmann::json to_json(const SearchSpace& space) const;

 private:
  std::vector<Trial> trials_;
};

enum class SamplerKind { density_ratio, uniform };

struct SamplerOptions {
  SamplerKind kind = SamplerKind::density_ratio;
  int warmup = 8;       // uniform proposals while the history is shorter
  int candidates = 24;  // draws from the good-set density per proposal
};

std::string to_string(SamplerKind k);
SamplerKind sampler_from_string(const std::string& s);

// Uniform within bounds during warmup, afterwards the candidate maximizing
// l(x) / g(x), where l and g are Parzen densities over the trials scoring
// below the median and the rest.
Config sample_config(const SearchSpace& space, const Leaderboard& history, std::uint64_t seed,
                     const SamplerOptions& options = {});

struct FoldOutcome {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Scores one configuration on one fold. Must be safe to call concurrently.
using Objective = std::function<FoldOutcome(const Config& config, std::size_t fold, std::uint64_t seed)>;

// Seed handed to the objective for (trial, fold).
std::uint64_t trial_seed(std::uint64_t search_seed, int trial, std::size_t fold);

// Evaluates exactly `budget` configurations in sequence. Folds of a trial may
// run in parallel; proposals depend only on the seed and the history, so the
// leaderboard does not depend on the thread count. Errors mark the trial as
// failed with kFailedScore.
Leaderboard run_search(const SearchSpace& space, const Objective& objective, std::size_t n_folds, int budget,
                       std::uint64_t seed, const SamplerOptions& options = {});

// Fits the model a configuration describes on fold.train; late fusion fits
// its member weights on fold.valid.
PredictorPtr fit_candidate(const SearchSpace& space, const Config& config, const MultimodalDataset& data,
                           const Fold& fold, std::uint64_t seed);

// Validation log-loss objective over the given folds.
Objective dataset_objective(const SearchSpace& space, const MultimodalDataset& data, std::span<const Fold> folds);

// One simplex weight fit and the losses needed to audit it.
struct WeightFitRecord {
  std::string context;
  std::vector<double> member_loss;
  std::vector<double> weights;
  double loss = 0.0;

  double best_member_loss() const;
  bool vertex_recovered(double tol = 1e-6) const { return loss <= best_member_loss() + tol; }
  nlohmann::json to_json() const;
};

struct StrategyEnsemble {
  Strategy strategy = Strategy::tabular;
  std::vector<int> trial_ids;
  std::shared_ptr<const WeightedEnsemble> model;
  double valid_loss = 0.0;
};

struct MetaEnsemble {
  std::vector<StrategyEnsemble> strategies;
  std::vector<double> outer_weights;
  std::shared_ptr<const WeightedEnsemble> model;
  std::vector<Strategy> dropped;
  double valid_loss = 0.0;
};

struct MetaEnsembleOptions {
  std::vector<Strategy> strategies{kAllStrategies.begin(), kAllStrategies.end()};
  std::map<Strategy, int> budgets;  // missing entries use default_budget
  int default_budget = 20;
  int top_k = 3;
  int weight_budget = 64;
  SamplerOptions sampler;
};

struct MetaEnsembleResult {
  MetaEnsemble ensemble;
  std::map<Strategy, SearchSpace> spaces;
  std::map<Strategy, Leaderboard> leaderboards;
  std::vector<WeightFitRecord> weight_fits;
};

// Searches every strategy on fold.train / fold.valid, combines the top-K
// configurations of each into a strategy ensemble and weights the strategy
// ensembles on the validation rows. Strategies without a successful trial
// are dropped.
MetaEnsembleResult build_meta_ensemble(const MultimodalDataset& data, const Fold& fold,
                                       const MetaEnsembleOptions& options, std::uint64_t seed);

}  // namespace mmfuse

#include "mmfuse/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mmfuse/errors.hpp"
#include "mmfuse/fusion.hpp"
#include "mmfuse/rng.hpp"
#include "mmfuse/simplex.hpp"

namespace mmfuse {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::tabular: return "tabular";
    case Strategy::imaging_head: return "imaging_head";
    case Strategy::late: return "late";
    case Strategy::early: return "early";
    case Strategy::joint: return "joint";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  for (Strategy v : kAllStrategies)
    if (to_string(v) == s) return v;
  throw ConfigError("unknown strategy '" + s + "'");
}

std::string to_string(SamplerKind k) { return k == SamplerKind::uniform ? "uniform" : "density_ratio"; }

SamplerKind sampler_from_string(const std::string& s) {
  if (s == "uniform") return SamplerKind::uniform;
  if (s == "density_ratio") return SamplerKind::density_ratio;
  throw ConfigError("unknown sampler '" + s + "'");
}

// ---------------------------------------------------------------------------
// Search spaces

void SearchSpace::validate() const {
  if (dims.empty()) throw ConfigError("search space without dimensions");
  for (const auto& d : dims) {
    if (d.kind == DimensionKind::categorical) {
      if (d.choices.empty()) throw ConfigError("dimension '" + d.name + "' has no choices");
      continue;
    }
    if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.lo > d.hi)
      throw ConfigError("dimension '" + d.name + "' has invalid bounds");
    if (d.log_scale && d.lo <= 0.0) throw ConfigError("log-scale dimension '" + d.name + "' needs a positive range");
    if (d.kind == DimensionKind::integer && (d.lo != std::floor(d.lo) || d.hi != std::floor(d.hi)))
      throw ConfigError("integer dimension '" + d.name + "' needs integer bounds");
  }
}

std::size_t SearchSpace::index(const std::string& name) const {
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (dims[i].name == name) return i;
  throw ConfigError("search space has no dimension '" + name + "'");
}

bool SearchSpace::contains(const Config& c) const {
  if (c.size() != dims.size()) return false;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    if (d.kind == DimensionKind::categorical) {
      if (c[i] != std::floor(c[i]) || c[i] < 0 || c[i] >= static_cast<double>(d.choices.size())) return false;
    } else {
      if (!(c[i] >= d.lo && c[i] <= d.hi)) return false;
      if (d.kind == DimensionKind::integer && c[i] != std::floor(c[i])) return false;
    }
  }
  return true;
}

nlohmann::json SearchSpace::describe(const Config& c) const {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t i = 0; i < dims.size() && i < c.size(); ++i) {
    const auto& d = dims[i];
    if (d.kind == DimensionKind::categorical)
      out[d.name] = d.choices.at(static_cast<std::size_t>(c[i]));
    else if (d.kind == DimensionKind::integer)
      out[d.name] = static_cast<long long>(c[i]);
    else
      out[d.name] = c[i];
  }
  return out;
}

namespace {

Dimension categorical(std::string name, std::vector<std::string> choices) {
  return {std::move(name), DimensionKind::categorical, std::move(choices)};
}
Dimension real(std::string name, double lo, double hi, bool log_scale = false) {
  return {std::move(name), DimensionKind::real, {}, lo, hi, log_scale};
}
Dimension integer(std::string name, double lo, double hi) {
  return {std::move(name), DimensionKind::integer, {}, lo, hi};
}

void add_classifier_dims(std::vector<Dimension>& d, const std::string& p, bool trees) {
  d.push_back(real(p + "lr.l2", 1e-5, 1e-1, true));
  d.push_back(real(p + "lr.learning_rate", 0.01, 0.5, true));
  d.push_back(integer(p + "lr.epochs", 50, 300));
  if (trees) {
    d.push_back(integer(p + "rf.n_trees", 10, 100));
    d.push_back(integer(p + "rf.max_depth", 2, 16));
    d.push_back(integer(p + "rf.min_leaf", 1, 10));
    d.push_back(integer(p + "gb.n_rounds", 10, 100));
    d.push_back(real(p + "gb.learning_rate", 0.03, 0.3, true));
    d.push_back(integer(p + "gb.max_depth", 1, 4));
  }
  d.push_back(integer(p + "mlp.width", 8, 64));
  d.push_back(integer(p + "mlp.layers", 1, 2));
  d.push_back(categorical(p + "mlp.activation", {"relu", "tanh"}));
  d.push_back(real(p + "mlp.learning_rate", 1e-3, 3e-2, true));
  d.push_back(integer(p + "mlp.epochs", 100, 300));
  d.push_back(real(p + "mlp.weight_decay", 1e-6, 1e-2, true));
}

void add_tabular_dims(std::vector<Dimension>& d) {
  d.push_back(categorical("tab.imputer", {"mean", "most_frequent", "constant_zero"}));
  d.push_back(categorical("tab.scaler", {"none", "standard", "minmax"}));
  d.push_back(categorical("tab.reducer", {"none", "pca"}));
  d.push_back(real("tab.pca_frac", 0.2, 1.0));
  d.push_back(categorical("tab.classifier", {"logistic_regression", "random_forest", "gradient_boosting", "mlp"}));
  add_classifier_dims(d, "tab.", true);
}

void add_imaging_dims(std::vector<Dimension>& d, const std::vector<std::string>& embeddings) {
  d.push_back(categorical("img.embedding", embeddings));
  d.push_back(categorical("img.scaler", {"none", "standard"}));
  d.push_back(categorical("img.reducer", {"none", "pca"}));
  d.push_back(real("img.pca_frac", 0.05, 1.0));
  d.push_back(categorical("img.classifier", {"logistic_regression", "mlp"}));
  add_classifier_dims(d, "img.", false);
}

void add_head_dims(std::vector<Dimension>& d) {
  d.push_back(integer("head.width", 8, 64));
  d.push_back(integer("head.layers", 1, 2));
  d.push_back(categorical("head.activation", {"relu", "tanh"}));
  d.push_back(real("head.learning_rate", 1e-3, 3e-2, true));
  d.push_back(integer("head.epochs", 100, 400));
  d.push_back(real("head.weight_decay", 1e-6, 1e-2, true));
}

}  // namespace

SearchSpace default_space(Strategy s, const std::vector<std::string>& embeddings) {
  if (s != Strategy::tabular && embeddings.empty())
    throw ConfigError("strategy '" + to_string(s) + "' needs at least one embedding");
  SearchSpace space;
  space.strategy = s;
  auto& d = space.dims;
  switch (s) {
    case Strategy::tabular:
      add_tabular_dims(d);
      break;
    case Strategy::imaging_head:
      add_imaging_dims(d, embeddings);
      break;
    case Strategy::late:
      add_tabular_dims(d);
      add_imaging_dims(d, embeddings);
      break;
    case Strategy::early:
      d.push_back(categorical("img.reducer", {"none", "pca"}));
      d.push_back(real("img.pca_frac", 0.05, 1.0));
      add_head_dims(d);
      break;
    case Strategy::joint:
      d.push_back(integer("tab.width", 4, 32));
      d.push_back(integer("img.width", 4, 32));
      d.push_back(integer("branch.layers", 1, 2));
      add_head_dims(d);
      break;
  }
  space.validate();
  return space;
}

// ---------------------------------------------------------------------------
// Leaderboard

void Leaderboard::add(Trial t) {
  auto pos = std::upper_bound(trials_.begin(), trials_.end(), t, [](const Trial& a, const Trial& b) {
    return a.score < b.score || (a.score == b.score && a.id < b.id);
  });
  trials_.insert(pos, std::move(t));
}

std::vector<const Trial*> Leaderboard::successful(std::size_t limit) const {
  std::vector<const Trial*> out;
  for (const auto& t : trials_) {
    if (out.size() >= limit) break;
    if (!t.failed) out.push_back(&t);
  }
  return out;
}

nlohmann::json Leaderboard::to_json(const SearchSpace& space) const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : trials_) {
    nlohmann::json j = {{"trial", t.id},
                        {"config", space.describe(t.config)},
                        {"fold_scores", t.fold_scores},
                        {"fold_accuracy", t.fold_accuracy},
                        {"score", t.score},
                        {"status", t.failed ? "failed" : "ok"}};
    if (t.failed) j["error"] = t.error;
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampler

namespace {

double to_unit(const Dimension& d, double v) {
  if (d.kind == DimensionKind::integer) return (v - d.lo + 0.5) / (d.hi - d.lo + 1.0);
  if (d.hi == d.lo) return 0.5;
  if (d.log_scale) return (std::log(v) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo));
  return (v - d.lo) / (d.hi - d.lo);
}

double from_unit(const Dimension& d, double u) {
  u = std::clamp(u, 0.0, 1.0);
  if (d.kind == DimensionKind::integer) {
    const double span = d.hi - d.lo;
    return d.lo + std::min(std::floor(u * (span + 1.0)), span);
  }
  if (d.log_scale) return std::exp(std::log(d.lo) + u * (std::log(d.hi) - std::log(d.lo)));
  return d.lo + u * (d.hi - d.lo);
}

Config uniform_config(const SearchSpace& space, Rng& rng) {
  Config c(space.dims.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& d = space.dims[i];
    c[i] = d.kind == DimensionKind::categorical ? static_cast<double>(rng.index(d.choices.size()))
                                                : from_unit(d, rng.uniform());
  }
  return c;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Parzen density over one dimension: a uniform prior component plus one
// kernel per observation (truncated Gaussian on [0, 1], or a Laplace-smoothed
// histogram for categorical dimensions).
struct Parzen {
  const Dimension* dim = nullptr;
  std::vector<double> centers;  // unit coordinates or choice indices
  double sigma = 0.25;

  void fit(const Dimension& d, std::vector<double> points) {
    dim = &d;
    centers = std::move(points);
    const double n = std::max<double>(1.0, static_cast<double>(centers.size()));
    sigma = std::max(0.03, 0.25 * std::pow(n, -0.2));
  }

  double log_density(double v) const {
    const double n = static_cast<double>(centers.size());
    if (dim->kind == DimensionKind::categorical) {
      const double k = static_cast<double>(dim->choices.size());
      double count = 0.0;
      for (double c : centers) count += (c == v) ? 1.0 : 0.0;
      return std::log((count + 1.0) / (n + k));
    }
    const double u = to_unit(*dim, v);
    double total = 1.0;  // prior component, uniform density on [0, 1]
    for (double mu : centers) {
      const double z = (u - mu) / sigma;
      const double mass = normal_cdf((1.0 - mu) / sigma) - normal_cdf(-mu / sigma);
      total += std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi) * mass);
    }
    return std::log(total / (n + 1.0));
  }

  double sample(Rng& rng) const {
    const std::size_t n = centers.size();
    if (dim->kind == DimensionKind::categorical) {
      // Draw from (count_c + 1) / (n + k): pick the prior with mass k/(n+k).
      const std::size_t k = dim->choices.size();
      const std::size_t pick = rng.index(n + k);
      return pick < n ? centers[pick] : static_cast<double>(pick - n);
    }
    const std::size_t pick = rng.index(n + 1);
    if (pick == n) return from_unit(*dim, rng.uniform());
    const double mu = centers[pick];
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double u = rng.normal(mu, sigma);
      if (u >= 0.0 && u <= 1.0) return from_unit(*dim, u);
    }
    return from_unit(*dim, mu);
  }
};

}  // namespace

Config sample_config(const SearchSpace& space, const Leaderboard& history, std::uint64_t seed,
                     const SamplerOptions& options) {
  Rng rng(seed);
  const std::size_t n = history.size();
  if (options.kind == SamplerKind::uniform || n == 0 || n < static_cast<std::size_t>(std::max(options.warmup, 1)))
    return uniform_config(space, rng);

  // Good set: strictly below the median score; with too many ties, the
  // better half by rank.
  const auto& trials = history.trials();
  const double median = 0.5 * (trials[(n - 1) / 2].score + trials[n / 2].score);
  std::size_t n_good = 0;
  while (n_good < n && trials[n_good].score < median) ++n_good;
  if (n_good == 0) n_good = std::max<std::size_t>(1, n / 2);

  std::vector<Parzen> good(space.dims.size()), bad(space.dims.size());
  for (std::size_t i = 0; i < space.dims.size(); ++i) {
    const auto& d = space.dims[i];
    std::vector<double> g, b;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = trials[t].config[i];
      const double point = d.kind == DimensionKind::categorical ? v : to_unit(d, v);
      (t < n_good ? g : b).push_back(point);
    }
    good[i].fit(d, std::move(g));
    bad[i].fit(d, std::move(b));
  }

  Config best;
  double best_ratio = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < std::max(options.candidates, 1); ++k) {
    Config c(space.dims.size());
    double ratio = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] = good[i].sample(rng);
      ratio += good[i].log_density(c[i]) - bad[i].log_density(c[i]);
    }
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = std::move(c);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Search loop

std::uint64_t trial_seed(std::uint64_t search_seed, int trial, std::size_t fold) {
  return derive_seed(search_seed, {static_cast<std::uint64_t>(trial), 1, fold});
}

Leaderboard run_search(const SearchSpace& space, const Objective& objective, std::size_t n_folds, int budget,
                       std::uint64_t seed, const SamplerOptions& options) {
  space.validate();
  if (budget < 1) throw ConfigError("search budget must be at least 1");
  if (n_folds < 1) throw ConfigError("search needs at least one fold");
  Leaderboard board;
  for (int t = 0; t < budget; ++t) {
    Trial trial;
    trial.id = t;
    trial.config = sample_config(space, board, derive_seed(seed, {static_cast<std::uint64_t>(t), 0}), options);
    trial.fold_scores.assign(n_folds, kFailedScore);
    trial.fold_accuracy.assign(n_folds, 0.0);
    std::vector<std::string> errors(n_folds);
    const long folds = static_cast<long>(n_folds);
#pragma omp parallel for schedule(dynamic) if (folds > 1)
    for (long f = 0; f < folds; ++f) {
      const auto fi = static_cast<std::size_t>(f);
      try {
        const FoldOutcome out = objective(trial.config, fi, trial_seed(seed, t, fi));
        if (!std::isfinite(out.loss)) throw DivergenceError("non-finite validation loss");
        trial.fold_scores[fi] = out.loss;
        trial.fold_accuracy[fi] = out.accuracy;
      } catch (const std::exception& e) {
        errors[fi] = e.what();
      }
    }
    for (std::size_t f = 0; f < n_folds; ++f) {
      if (!errors[f].empty()) {
        trial.failed = true;
        trial.error = errors[f];
        trial.fold_scores[f] = kFailedScore;
        break;
      }
    }
    if (!trial.failed) {
      double sum = 0.0;
      for (double s : trial.fold_scores) sum += s;
      trial.score = sum / static_cast<double>(n_folds);
    }
    board.add(std::move(trial));
  }
  return board;
}

// ---------------------------------------------------------------------------
// Candidate models

namespace {

struct View {
  const SearchSpace& space;
  const Config& config;

  std::string choice(const std::string& name) const {
    const std::size_t i = space.index(name);
    return space.dims[i].choices.at(static_cast<std::size_t>(config.at(i)));
  }
  double real(const std::string& name) const { return config.at(space.index(name)); }
  int integer(const std::string& name) const { return static_cast<int>(config.at(space.index(name))); }
};

std::size_t pca_components(double fraction, std::size_t p, std::size_t n) {
  const std::size_t upper = std::min(n > 0 ? n - 1 : 0, p);
  if (upper == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(p)));
  return std::clamp<std::size_t>(k, 1, upper);
}

std::vector<std::size_t> hidden_layers(int width, int layers) {
  return std::vector<std::size_t>(static_cast<std::size_t>(layers), static_cast<std::size_t>(width));
}

TabularPipelineSpec pipeline_spec(const View& v, const std::string& prefix, bool imaging, std::size_t p,
                                  std::size_t n) {
  TabularPipelineSpec spec;
  spec.imputer = imaging ? ImputerKind::mean : imputer_from_string(v.choice(prefix + "imputer"));
  spec.scaler = scaler_from_string(v.choice(prefix + "scaler"));
  if (v.choice(prefix + "reducer") == "pca") {
    spec.pca_components = pca_components(v.real(prefix + "pca_frac"), p, n);
    spec.reducer = spec.pca_components > 0 ? ReducerKind::pca : ReducerKind::none;
  }
  const auto cls = v.choice(prefix + "classifier");
  if (cls == "logistic_regression") {
    spec.classifier = LogisticSpec{v.real(prefix + "lr.l2"), v.real(prefix + "lr.learning_rate"),
                                   v.integer(prefix + "lr.epochs")};
  } else if (cls == "random_forest") {
    spec.classifier = ForestSpec{v.integer(prefix + "rf.n_trees"), v.integer(prefix + "rf.max_depth"),
                                 v.integer(prefix + "rf.min_leaf")};
  } else if (cls == "gradient_boosting") {
    spec.classifier = BoostingSpec{v.integer(prefix + "gb.n_rounds"), v.real(prefix + "gb.learning_rate"),
                                   v.integer(prefix + "gb.max_depth")};
  } else {
    spec.classifier = MlpSpec{hidden_layers(v.integer(prefix + "mlp.width"), v.integer(prefix + "mlp.layers")),
                              v.real(prefix + "mlp.learning_rate"), v.integer(prefix + "mlp.epochs"),
                              v.real(prefix + "mlp.weight_decay"),
                              nn::activation_from_string(v.choice(prefix + "mlp.activation"))};
  }
  return spec;
}

std::shared_ptr<PipelinePredictor> fit_pipeline_on(const View& v, const std::string& prefix, bool imaging,
                                                   const MultimodalDataset& data, const Fold& fold,
                                                   std::uint64_t seed) {
  const std::string source = imaging ? v.choice(prefix + "embedding") : std::string(kTabular);
  const Matrix x = select_rows(source == kTabular ? data.tabular : data.embeddings.at(source), fold.train);
  const auto spec = pipeline_spec(v, prefix, imaging, x.cols(), x.rows());
  auto fitted = fit_pipeline(x, data.labels(fold.train), data.num_classes(), spec, seed);
  return std::make_shared<PipelinePredictor>(source, std::move(fitted));
}

HeadSpec head_spec(const View& v, std::uint64_t seed) {
  HeadSpec head;
  head.hidden = hidden_layers(v.integer("head.width"), v.integer("head.layers"));
  head.activation = nn::activation_from_string(v.choice("head.activation"));
  head.train.learning_rate = v.real("head.learning_rate");
  head.train.epochs = v.integer("head.epochs");
  head.train.weight_decay = v.real("head.weight_decay");
  head.train.seed = seed;
  return head;
}

}  // namespace

PredictorPtr fit_candidate(const SearchSpace& space, const Config& config, const MultimodalDataset& data,
                           const Fold& fold, std::uint64_t seed) {
  if (!space.contains(config)) throw ConfigError("configuration outside the search space");
  const View v{space, config};
  const int classes = data.num_classes();
  switch (space.strategy) {
    case Strategy::tabular:
      return fit_pipeline_on(v, "tab.", false, data, fold, seed);
    case Strategy::imaging_head:
      return fit_pipeline_on(v, "img.", true, data, fold, seed);
    case Strategy::late: {
      std::vector<PredictorPtr> members{fit_pipeline_on(v, "tab.", false, data, fold, derive_seed(seed, {1})),
                                        fit_pipeline_on(v, "img.", true, data, fold, derive_seed(seed, {2}))};
      const FeatureBlocks valid = data.blocks(fold.valid);
      std::vector<ProbabilityMatrix> preds;
      for (const auto& m : members) preds.push_back(m->predict_proba(valid));
      auto w = fit_late_fusion(preds, data.labels(fold.valid), 64, derive_seed(seed, {3}));
      return std::make_shared<WeightedEnsemble>("late", std::move(members), std::move(w));
    }
    case Strategy::early: {
      const FeatureBlocks train = data.blocks(fold.train);
      std::vector<RepresentationSpec> reps{{kTabular, ImputerKind::mean, ScalerKind::standard, 0}};
      for (const auto& name : data.embedding_names()) {
        RepresentationSpec r{name, ImputerKind::mean, ScalerKind::standard, 0};
        if (v.choice("img.reducer") == "pca")
          r.pca_components = pca_components(v.real("img.pca_frac"), train.block(name).cols(), train.rows());
        reps.push_back(r);
      }
      return std::make_shared<EarlyFusionModel>(fit_early_fusion(train, data.labels(fold.train), classes, reps,
                                                                 head_spec(v, seed)));
    }
    case Strategy::joint: {
      const FeatureBlocks train = data.blocks(fold.train);
      JointFusionSpec spec;
      spec.head = head_spec(v, seed);
      const int layers = v.integer("branch.layers");
      auto branch = [&](const std::string& source, int width) {
        BranchSpec b;
        b.input = {source, ImputerKind::mean, ScalerKind::standard, 0};
        b.hidden = hidden_layers(width, layers - 1);
        b.output = static_cast<std::size_t>(width);
        return b;
      };
      spec.branches.push_back(branch(kTabular, v.integer("tab.width")));
      for (const auto& name : data.embedding_names()) spec.branches.push_back(branch(name, v.integer("img.width")));
      return std::make_shared<JointFusionModel>(fit_joint_fusion(train, data.labels(fold.train), classes, spec));
    }
  }
  throw ConfigError("unknown strategy");
}

Objective dataset_objective(const SearchSpace& space, const MultimodalDataset& data, std::span<const Fold> folds) {
  return [&space, &data, folds](const Config& config, std::size_t f, std::uint64_t seed) {
    const Fold& fold = folds[f];
    const auto model = fit_candidate(space, config, data, fold, seed);
    const auto p = model->predict_proba(data.blocks(fold.valid));
    const auto y = data.labels(fold.valid);
    const auto pred = argmax_rows(p);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1 : 0;
    return FoldOutcome{log_loss(p, y), y.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(y.size())};
  };
}

// ---------------------------------------------------------------------------
// Ensembles

double WeightFitRecord::best_member_loss() const {
  return member_loss.empty() ? loss : *std::min_element(member_loss.begin(), member_loss.end());
}

nlohmann::json WeightFitRecord::to_json() const {
  return {{"context", context},
          {"member_loss", member_loss},
          {"weights", weights},
          {"loss", loss},
          {"vertex_recovered", vertex_recovered()}};
}

MetaEnsembleResult build_meta_ensemble(const MultimodalDataset& data, const Fold& fold,
                                       const MetaEnsembleOptions& options, std::uint64_t seed) {
  if (options.top_k < 1) throw ConfigError("top_k must be at least 1");
  if (fold.valid.empty()) throw ConfigError("ensembles need validation rows");
  MetaEnsembleResult result;
  const std::vector<Fold> folds{fold};
  const FeatureBlocks valid = data.blocks(fold.valid);
  const auto y_valid = data.labels(fold.valid);
  const auto embeddings = data.embedding_names();

  std::vector<PredictorPtr> strategy_models;
  std::vector<ProbabilityMatrix> strategy_preds;
  for (Strategy s : options.strategies) {
    const auto it = options.budgets.find(s);
    const int budget = it != options.budgets.end() ? it->second : options.default_budget;
    const std::uint64_t search_seed = derive_seed(seed, {static_cast<std::uint64_t>(s)});
    const auto& space = result.spaces.emplace(s, default_space(s, embeddings)).first->second;
    const auto& board = result.leaderboards
                            .emplace(s, run_search(space, dataset_objective(space, data, folds), 1, budget,
                                                   search_seed, options.sampler))
                            .first->second;
    const auto top = board.successful(static_cast<std::size_t>(options.top_k));
    if (top.empty()) {
      result.ensemble.dropped.push_back(s);
      continue;
    }
    StrategyEnsemble ens;
    ens.strategy = s;
    std::vector<PredictorPtr> members;
    std::vector<ProbabilityMatrix> preds;
    for (const Trial* t : top) {
      // Refitting with the trial's seed reproduces the scored model exactly.
      members.push_back(fit_candidate(space, t->config, data, fold, trial_seed(search_seed, t->id, 0)));
      preds.push_back(members.back()->predict_proba(valid));
      ens.trial_ids.push_back(t->id);
    }
    const auto fit = optimize_simplex_weights(preds, y_valid, options.weight_budget, derive_seed(search_seed, {2}));
    result.weight_fits.push_back({to_string(s), fit.member_loss, fit.weights, fit.loss});
    ens.model = std::make_shared<WeightedEnsemble>(to_string(s), std::move(members), fit.weights);
    ens.valid_loss = fit.loss;
    strategy_models.push_back(ens.model);
    strategy_preds.push_back(mix_predictions(preds, fit.weights));
    result.ensemble.strategies.push_back(std::move(ens));
  }
  if (strategy_models.empty()) throw ConfigError("no strategy produced a successful trial");

  const auto outer = optimize_simplex_weights(strategy_preds, y_valid, options.weight_budget, derive_seed(seed, {99}));
  result.weight_fits.push_back({"outer", outer.member_loss, outer.weights, outer.loss});
  result.ensemble.outer_weights = outer.weights;
  result.ensemble.valid_loss = outer.loss;
  result.ensemble.model = std::make_shared<WeightedEnsemble>("meta", std::move(strategy_models), outer.weights);
  return result;
}

}  // namespace mmfuse

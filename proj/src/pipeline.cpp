#include "mmfuse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mmfuse/errors.hpp"
#include "mmfuse/kernels.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

void TabularPipelineSpec::validate(std::size_t p) const {
  if (reducer == ReducerKind::pca && (pca_components < 1 || pca_components > p))
    throw ConfigError("pca n_components must lie in [1, " + std::to_string(p) + "]");
  std::visit(overloaded{
                 [](const LogisticSpec& s) {
                   if (s.l2 < 0 || !(s.learning_rate > 0) || s.epochs < 1) throw ConfigError("bad logistic regression spec");
                 },
                 [](const ForestSpec& s) {
                   if (s.n_trees < 1 || s.max_depth < 0 || s.min_leaf < 1) throw ConfigError("bad random forest spec");
                 },
                 [](const BoostingSpec& s) {
                   if (s.n_rounds < 1 || !(s.learning_rate > 0) || s.max_depth < 1)
                     throw ConfigError("bad gradient boosting spec");
                 },
                 [](const MlpSpec& s) {
                   if (!(s.learning_rate > 0) || s.epochs < 1 || s.weight_decay < 0) throw ConfigError("bad MLP spec");
                   for (auto h : s.hidden)
                     if (h == 0) throw ConfigError("MLP hidden width must be positive");
                 },
             },
             classifier);
}

std::string classifier_name(const ClassifierSpec& s) {
  return std::visit(overloaded{[](const LogisticSpec&) { return std::string("logistic_regression"); },
                               [](const ForestSpec&) { return std::string("random_forest"); },
                               [](const BoostingSpec&) { return std::string("gradient_boosting"); },
                               [](const MlpSpec&) { return std::string("mlp"); }},
                    s);
}

nlohmann::json to_json(const ClassifierSpec& s) {
  return std::visit(
      overloaded{
          [](const LogisticSpec& c) -> nlohmann::json {
            return {{"kind", "logistic_regression"}, {"l2", c.l2}, {"learning_rate", c.learning_rate}, {"epochs", c.epochs}};
          },
          [](const ForestSpec& c) -> nlohmann::json {
            return {{"kind", "random_forest"}, {"n_trees", c.n_trees}, {"max_depth", c.max_depth}, {"min_leaf", c.min_leaf}};
          },
          [](const BoostingSpec& c) -> nlohmann::json {
            return {{"kind", "gradient_boosting"},
                    {"n_rounds", c.n_rounds},
                    {"learning_rate", c.learning_rate},
                    {"max_depth", c.max_depth}};
          },
          [](const MlpSpec& c) -> nlohmann::json {
            return {{"kind", "mlp"},
                    {"hidden", c.hidden},
                    {"learning_rate", c.learning_rate},
                    {"epochs", c.epochs},
                    {"weight_decay", c.weight_decay},
                    {"activation", nn::to_string(c.activation)}};
          },
      },
      s);
}

ClassifierSpec classifier_spec_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "logistic_regression")
    return LogisticSpec{j.at("l2").get<double>(), j.at("learning_rate").get<double>(), j.at("epochs").get<int>()};
  if (kind == "random_forest")
    return ForestSpec{j.at("n_trees").get<int>(), j.at("max_depth").get<int>(), j.at("min_leaf").get<int>()};
  if (kind == "gradient_boosting")
    return BoostingSpec{j.at("n_rounds").get<int>(), j.at("learning_rate").get<double>(), j.at("max_depth").get<int>()};
  if (kind == "mlp")
    return MlpSpec{j.at("hidden").get<std::vector<std::size_t>>(), j.at("learning_rate").get<double>(),
                   j.at("epochs").get<int>(), j.at("weight_decay").get<double>(),
                   nn::activation_from_string(j.at("activation").get<std::string>())};
  throw SchemaError("unknown classifier kind '" + kind + "'");
}

nlohmann::json to_json(const TabularPipelineSpec& s) {
  return {{"imputer", to_string(s.imputer)},
          {"scaler", to_string(s.scaler)},
          {"reducer", s.reducer == ReducerKind::pca ? "pca" : "none"},
          {"pca_components", s.pca_components},
          {"classifier", to_json(s.classifier)}};
}

TabularPipelineSpec pipeline_spec_from_json(const nlohmann::json& j) {
  TabularPipelineSpec s;
  s.imputer = imputer_from_string(j.at("imputer").get<std::string>());
  s.scaler = scaler_from_string(j.at("scaler").get<std::string>());
  const auto reducer = j.at("reducer").get<std::string>();
  if (reducer != "none" && reducer != "pca") throw SchemaError("unknown reducer '" + reducer + "'");
  s.reducer = reducer == "pca" ? ReducerKind::pca : ReducerKind::none;
  s.pca_components = j.at("pca_components").get<std::size_t>();
  s.classifier = classifier_spec_from_json(j.at("classifier"));
  return s;
}

// ---------------------------------------------------------------------------
// Random forest

ProbabilityMatrix RandomForest::predict_proba(const Matrix& x) const {
  ProbabilityMatrix p(x.rows(), static_cast<std::size_t>(classes));
  const long n = static_cast<long>(x.rows());
#pragma omp parallel for schedule(static) if (n * static_cast<long>(trees.size()) > 4096)
  for (long i = 0; i < n; ++i) {
    auto out = p.row(static_cast<std::size_t>(i));
    for (const auto& t : trees) {
      auto v = t.leaf_value(x.row(static_cast<std::size_t>(i)));
      for (std::size_t c = 0; c < out.size(); ++c) out[c] += v[c];
    }
    for (double& v : out) v /= static_cast<double>(trees.size());
  }
  return p;
}

namespace {

RandomForest fit_forest(const Matrix& x, std::span<const int> y, int classes, const ForestSpec& spec,
                        std::uint64_t seed) {
  RandomForest f;
  f.classes = classes;
  f.trees.resize(static_cast<std::size_t>(spec.n_trees));
  TreeParams params;
  params.max_depth = spec.max_depth;
  params.min_leaf = spec.min_leaf;
  params.max_features = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols()))));
  const std::size_t n = x.rows();
  // A single tree is grown on every row; bagging only applies to ensembles.
  const bool bootstrap = spec.n_trees > 1;
  const long T = spec.n_trees;
#pragma omp parallel for schedule(dynamic) if (T > 1)
  for (long t = 0; t < T; ++t) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = bootstrap ? rng.index(n) : i;
    f.trees[static_cast<std::size_t>(t)] = fit_classification_tree(x, y, classes, rows, params, rng);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Gradient boosting

double softmax_loss(const Matrix& scores, std::span<const int> y) {
  Matrix p = scores;
  kernels::softmax_rows(p);
  return log_loss(p, y);
}

GradientBoosting fit_boosting(const Matrix& x, std::span<const int> y, int classes, const BoostingSpec& spec) {
  GradientBoosting gb;
  gb.classes = classes;
  const std::size_t n = x.rows(), C = static_cast<std::size_t>(classes);
  std::vector<double> prior(C, 0.0);
  for (int v : y) prior[static_cast<std::size_t>(v)] += 1.0;
  for (double& v : prior) v = std::log(std::max(v / static_cast<double>(n), 1e-6));
  gb.init = prior;

  Matrix scores(n, C);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < C; ++c) scores(r, c) = prior[c];
  double loss = softmax_loss(scores, y);
  gb.train_loss.push_back(loss);

  TreeParams params;
  params.max_depth = spec.max_depth;
  params.min_leaf = 1;
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  const double newton_scale = static_cast<double>(C - 1) / static_cast<double>(C);

  for (int round = 0; round < spec.n_rounds; ++round) {
    Matrix p = scores;
    kernels::softmax_rows(p);
    std::vector<DecisionTree> trees;
    Matrix delta(n, C);
    for (std::size_t c = 0; c < C; ++c) {
      std::vector<double> residual(n), hessian(n);
      for (std::size_t r = 0; r < n; ++r) {
        residual[r] = (y[r] == static_cast<int>(c) ? 1.0 : 0.0) - p(r, c);
        hessian[r] = p(r, c) * (1.0 - p(r, c));
      }
      DecisionTree t = fit_regression_tree(x, residual, hessian, rows, params);
      for (auto& node : t.nodes)
        if (node.feature < 0) node.value[0] *= newton_scale;
      for (std::size_t r = 0; r < n; ++r) delta(r, c) = t.leaf_value(x.row(r))[0];
      trees.push_back(std::move(t));
    }
    // Backtrack on the step so the training loss never increases.
    double step = spec.learning_rate;
    double next_loss = loss;
    Matrix candidate;
    for (int halvings = 0; halvings <= 30; ++halvings, step *= 0.5) {
      candidate = scores;
      for (std::size_t i = 0; i < candidate.size(); ++i) candidate.values()[i] += step * delta.values()[i];
      next_loss = softmax_loss(candidate, y);
      if (next_loss <= loss) break;
    }
    if (!(next_loss <= loss)) {
      step = 0.0;
      next_loss = loss;
    } else {
      scores = std::move(candidate);
    }
    loss = next_loss;
    gb.rounds.push_back(std::move(trees));
    gb.step.push_back(step);
    gb.train_loss.push_back(loss);
  }
  return gb;
}

void require_two_classes(std::span<const int> y) {
  std::set<int> classes(y.begin(), y.end());
  if (classes.size() < 2) throw SingleClassError("training labels contain a single class");
}

}  // namespace

Matrix GradientBoosting::decision_function(const Matrix& x) const {
  const std::size_t C = static_cast<std::size_t>(classes);
  Matrix scores(x.rows(), C);
  const long n = static_cast<long>(x.rows());
#pragma omp parallel for schedule(static) if (n * static_cast<long>(rounds.size()) > 4096)
  for (long i = 0; i < n; ++i) {
    auto xr = x.row(static_cast<std::size_t>(i));
    auto out = scores.row(static_cast<std::size_t>(i));
    for (std::size_t c = 0; c < C; ++c) out[c] = init[c];
    for (std::size_t r = 0; r < rounds.size(); ++r)
      for (std::size_t c = 0; c < C; ++c) out[c] += step[r] * rounds[r][c].leaf_value(xr)[0];
  }
  return scores;
}

ProbabilityMatrix GradientBoosting::predict_proba(const Matrix& x) const {
  Matrix s = decision_function(x);
  kernels::softmax_rows(s);
  return s;
}

ProbabilityMatrix FittedClassifier::predict_proba(const Matrix& x) const {
  return std::visit(overloaded{[&](const nn::MlpParams& p) { return nn::predict_proba(p, x); },
                               [&](const RandomForest& f) { return f.predict_proba(x); },
                               [&](const GradientBoosting& g) { return g.predict_proba(x); }},
                    model);
}

FittedClassifier fit_classifier(const Matrix& x, std::span<const int> y, int classes, const ClassifierSpec& spec,
                                std::uint64_t seed) {
  if (x.rows() != y.size()) throw ShapeMismatch("rows and labels differ in length");
  require_two_classes(y);
  for (double v : x.values())
    if (!std::isfinite(v)) throw ShapeMismatch("classifier input must be finite");
  FittedClassifier out;
  out.classes = classes;
  std::visit(overloaded{
                 [&](const LogisticSpec& s) {
                   nn::TrainConfig cfg;
                   cfg.learning_rate = s.learning_rate;
                   cfg.epochs = s.epochs;
                   cfg.weight_decay = s.l2;
                   cfg.seed = seed;
                   nn::Architecture arch{x.cols(), {}, static_cast<std::size_t>(classes)};
                   out.model = nn::train_mlp_from(nn::zero_mlp(arch), x, y, cfg);
                 },
                 [&](const ForestSpec& s) { out.model = fit_forest(x, y, classes, s, seed); },
                 [&](const BoostingSpec& s) { out.model = fit_boosting(x, y, classes, s); },
                 [&](const MlpSpec& s) {
                   nn::TrainConfig cfg;
                   cfg.learning_rate = s.learning_rate;
                   cfg.epochs = s.epochs;
                   cfg.weight_decay = s.weight_decay;
                   cfg.seed = seed;
                   nn::Architecture arch{x.cols(), s.hidden, static_cast<std::size_t>(classes), s.activation};
                   out.model = nn::train_mlp(x, y, arch, cfg);
                 },
             },
             spec);
  return out;
}

FittedTabularPipeline fit_pipeline(const Matrix& x, std::span<const int> y, int classes,
                                   const TabularPipelineSpec& spec, std::uint64_t seed) {
  spec.validate(x.cols());
  require_two_classes(y);
  FittedTabularPipeline p;
  p.spec = spec;
  p.stages = fit_preprocessor(x, spec.imputer, spec.scaler,
                              spec.reducer == ReducerKind::pca ? spec.pca_components : 0);
  p.classifier = fit_classifier(p.stages.transform(x), y, classes, spec.classifier, seed);
  return p;
}

ProbabilityMatrix pipeline_predict_proba(const FittedTabularPipeline& pipeline, const Matrix& x) {
  return pipeline.classifier.predict_proba(pipeline.stages.transform(x));
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const FittedTabularPipeline& p) {
  nlohmann::json model = std::visit(
      overloaded{
          [](const nn::MlpParams& m) -> nlohmann::json { return {{"kind", "network"}, {"params", nn::to_json(m)}}; },
          [](const RandomForest& f) -> nlohmann::json {
            nlohmann::json trees = nlohmann::json::array();
            for (const auto& t : f.trees) trees.push_back(to_json(t));
            return {{"kind", "forest"}, {"trees", trees}};
          },
          [](const GradientBoosting& g) -> nlohmann::json {
            nlohmann::json rounds = nlohmann::json::array();
            for (const auto& r : g.rounds) {
              nlohmann::json per_class = nlohmann::json::array();
              for (const auto& t : r) per_class.push_back(to_json(t));
              rounds.push_back(per_class);
            }
            return {{"kind", "boosting"}, {"init", g.init}, {"step", g.step}, {"rounds", rounds}};
          },
      },
      p.classifier.model);
  return {{"type", "tabular_pipeline"},
          {"spec", to_json(p.spec)},
          {"stages", to_json(p.stages)},
          {"classes", p.classifier.classes},
          {"model", model}};
}

FittedTabularPipeline pipeline_from_json(const nlohmann::json& j) {
  FittedTabularPipeline p;
  p.spec = pipeline_spec_from_json(j.at("spec"));
  p.stages = preprocessor_from_json(j.at("stages"));
  p.classifier.classes = j.at("classes").get<int>();
  const auto& m = j.at("model");
  const auto kind = m.at("kind").get<std::string>();
  if (kind == "network") {
    p.classifier.model = nn::mlp_from_json(m.at("params"));
  } else if (kind == "forest") {
    RandomForest f;
    f.classes = p.classifier.classes;
    for (const auto& t : m.at("trees")) f.trees.push_back(tree_from_json(t));
    p.classifier.model = std::move(f);
  } else if (kind == "boosting") {
    GradientBoosting g;
    g.classes = p.classifier.classes;
    g.init = m.at("init").get<std::vector<double>>();
    g.step = m.at("step").get<std::vector<double>>();
    for (const auto& r : m.at("rounds")) {
      std::vector<DecisionTree> per_class;
      for (const auto& t : r) per_class.push_back(tree_from_json(t));
      g.rounds.push_back(std::move(per_class));
    }
    p.classifier.model = std::move(g);
  } else {
    throw SchemaError("unknown fitted model kind '" + kind + "'");
  }
  return p;
}

}  // namespace mmfuse

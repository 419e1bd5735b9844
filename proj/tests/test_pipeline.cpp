#include <doctest.h>

#include <cmath>

#include "mmfuse/errors.hpp"
#include "mmfuse/pipeline.hpp"
#include "test_util.hpp"

using namespace mmfuse;

namespace {

struct Labelled {
  Matrix x;
  std::vector<int> y;
};

// label = sign of x0, with a margin so the boundary x0 = 0 separates perfectly.
Labelled separable(std::size_t n, std::uint64_t seed) {
  Labelled d{testutil::random_matrix(n, 2, seed), {}};
  for (std::size_t i = 0; i < n; ++i) {
    d.x(i, 0) += d.x(i, 0) >= 0 ? 0.2 : -0.2;
    d.y.push_back(d.x(i, 0) > 0 ? 1 : 0);
  }
  return d;
}

Labelled blobs(std::size_t n, int classes, std::uint64_t seed) {
  Labelled d{testutil::random_matrix(n, 3, seed), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(classes));
    d.x(i, 0) += 1.5 * c;
    d.x(i, 1) -= 0.8 * c;
    d.y.push_back(c);
  }
  return d;
}

double accuracy(const ProbabilityMatrix& p, const std::vector<int>& y) {
  const auto pred = argmax_rows(p);
  double hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
  return hit / static_cast<double>(y.size());
}

void check_rows(const ProbabilityMatrix& p) {
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double s = 0;
    for (double v : p.row(r)) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

}  // namespace

TEST_CASE("logistic regression separates sign(x0)") {
  const auto d = separable(200, 3);
  // The closed-form boundary x0 = 0 classifies every point correctly.
  for (std::size_t i = 0; i < 200; ++i) REQUIRE((d.x(i, 0) > 0) == (d.y[i] == 1));
  const auto m = fit_classifier(d.x, d.y, 2, LogisticSpec{1e-4, 0.1, 200}, 0);
  CHECK(accuracy(m.predict_proba(d.x), d.y) >= 0.99);
}

TEST_CASE("a single unlimited tree memorises distinct points") {
  const auto d = blobs(90, 3, 4);
  const auto m = fit_classifier(d.x, d.y, 3, ForestSpec{1, 0, 1}, 0);
  CHECK(accuracy(m.predict_proba(d.x), d.y) == 1.0);

  TabularPipelineSpec spec;
  spec.scaler = ScalerKind::none;
  spec.classifier = ForestSpec{1, 0, 1};
  const auto pipe = fit_pipeline(d.x, d.y, 3, spec, 0);
  CHECK(argmax_rows(pipeline_predict_proba(pipe, d.x)) == d.y);
}

TEST_CASE("single-class training data is rejected") {
  const Matrix x = testutil::random_matrix(10, 2, 1);
  const std::vector<int> y(10, 1);
  for (const ClassifierSpec& s : {ClassifierSpec{LogisticSpec{}}, ClassifierSpec{ForestSpec{}},
                                  ClassifierSpec{BoostingSpec{}}, ClassifierSpec{MlpSpec{}}})
    CHECK_THROWS_AS(fit_classifier(x, y, 2, s, 0), SingleClassError);
}

TEST_CASE("boosting training loss never increases") {
  const auto d = blobs(150, 3, 8);
  for (const BoostingSpec& spec : {BoostingSpec{30, 0.1, 2}, BoostingSpec{20, 1.0, 4}, BoostingSpec{15, 0.3, 1}}) {
    const auto m = fit_classifier(d.x, d.y, 3, spec, 0);
    const auto& gb = std::get<GradientBoosting>(m.model);
    REQUIRE(gb.train_loss.size() == static_cast<std::size_t>(spec.n_rounds) + 1);
    for (std::size_t r = 1; r < gb.train_loss.size(); ++r) CHECK(gb.train_loss[r] <= gb.train_loss[r - 1]);
    CHECK(gb.train_loss.back() < gb.train_loss.front());
    CHECK(log_loss(m.predict_proba(d.x), d.y) == doctest::Approx(gb.train_loss.back()).epsilon(1e-9));
  }
}

TEST_CASE("every classifier emits simplex rows and reloads exactly") {
  auto d = blobs(120, 3, 9);
  d.x(4, 2) = std::nan("");
  const Matrix probe = testutil::random_matrix(25, 3, 10, 3.0);
  for (const ClassifierSpec& c : {ClassifierSpec{LogisticSpec{}}, ClassifierSpec{ForestSpec{10, 4, 2}},
                                  ClassifierSpec{BoostingSpec{10, 0.1, 2}}, ClassifierSpec{MlpSpec{{8, 4}, 0.01, 50}}}) {
    TabularPipelineSpec spec;
    spec.imputer = ImputerKind::most_frequent;
    spec.scaler = ScalerKind::minmax;
    spec.reducer = ReducerKind::pca;
    spec.pca_components = 2;
    spec.classifier = c;
    const auto pipe = fit_pipeline(d.x, d.y, 3, spec, 5);
    const auto p = pipeline_predict_proba(pipe, probe);
    check_rows(p);
    const auto back = pipeline_from_json(nlohmann::json::parse(to_json(pipe).dump()));
    CHECK(pipeline_predict_proba(back, probe) == p);
    CHECK(pipeline_predict_proba(fit_pipeline(d.x, d.y, 3, spec, 5), probe) == p);
    CHECK_THROWS_AS(pipeline_predict_proba(pipe, testutil::random_matrix(2, 4, 1)), ShapeMismatch);
  }
}

TEST_CASE("fitting reads only the training rows") {
  const auto d = blobs(100, 2, 12);
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < 70; ++i) train.push_back(i);
  Matrix perturbed = d.x;
  for (std::size_t r = 70; r < 100; ++r)
    for (double& v : perturbed.row(r)) v = v * 100.0 + 7.0;
  std::vector<int> ytr(d.y.begin(), d.y.begin() + 70);
  TabularPipelineSpec spec;
  spec.reducer = ReducerKind::pca;
  spec.pca_components = 2;
  const auto a = fit_pipeline(select_rows(d.x, train), ytr, 2, spec, 1);
  const auto b = fit_pipeline(select_rows(perturbed, train), ytr, 2, spec, 1);
  CHECK(to_json(a) == to_json(b));
}

TEST_CASE("spec validation") {
  TabularPipelineSpec spec;
  spec.reducer = ReducerKind::pca;
  spec.pca_components = 5;
  CHECK_THROWS_AS(spec.validate(4), ConfigError);
  spec.pca_components = 4;
  CHECK_NOTHROW(spec.validate(4));
  spec.classifier = ForestSpec{0, 0, 1};
  CHECK_THROWS_AS(spec.validate(4), ConfigError);
  CHECK(pipeline_spec_from_json(to_json(TabularPipelineSpec{})).imputer == ImputerKind::mean);
}

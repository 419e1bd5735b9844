#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmfuse/conformal.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/metrics.hpp"
#include "test_util.hpp"

using namespace mmfuse;

namespace {

const std::vector<double> kRow{0.6, 0.3, 0.1};

ConformalCalibration with_tau(double tau, double lambda = 0.0, int k_reg = 1) {
  ConformalCalibration c;
  c.config.lambda = lambda;
  c.config.k_reg = k_reg;
  c.tau = tau;
  c.n_cal = 100;
  return c;
}

}  // namespace

// Decimal sums such as 0.6 + 0.3 + 0.1 are not exact in binary floating
// point, so hand values are compared to 1e-12.
TEST_CASE("raps score hand examples") {
  CHECK(raps_score(kRow, 0, 0.0, 1) == 0.6);
  CHECK(std::abs(raps_score(kRow, 2, 0.1, 1) - 1.2) <= 1e-12);
  CHECK(std::abs(raps_score(kRow, 1, 0.0, 1) - 0.9) <= 1e-12);
  const std::vector<double> hot{0.0, 1.0, 0.0};
  for (double lambda : {0.0, 0.5, 3.0}) CHECK(raps_score(hot, 1, lambda, 1) == 1.0);
  CHECK_THROWS_AS(raps_score(std::vector<double>{0.5, 0.2}, 0, 0.0, 1), InvalidProbability);
}

TEST_CASE("tied probabilities rank the lower class first") {
  const std::vector<double> p{0.4, 0.4, 0.2};
  CHECK(raps_score(p, 0, 0.0, 1) == 0.4);
  CHECK(raps_score(p, 1, 0.0, 1) == 0.8);
}

TEST_CASE("calibration quantile") {
  const std::vector<double> s{0.5, 0.1, 0.9, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6};
  CHECK(calibrate(s, 0.1) == 0.9);
  CHECK(calibrate(s, 0.5) == 0.5);  // ceil(10 * 0.5) = 5
  CHECK(std::isinf(calibrate(std::vector<double>{0.3}, 0.1)));
  CHECK(calibrate(std::vector<double>(20, 0.42), 0.1) == 0.42);
  auto shuffled = s;
  Rng rng(3);
  for (int r = 0; r < 10; ++r) {
    rng.shuffle(shuffled);
    CHECK(calibrate(shuffled, 0.2) == calibrate(s, 0.2));
  }
}

TEST_CASE("prediction set hand examples") {
  CHECK(predict_set(kRow, with_tau(0.95)) == std::vector<int>{0, 1});
  CHECK(predict_set(kRow, with_tau(std::numeric_limits<double>::infinity(), 0.01, 2)) == std::vector<int>{0, 1, 2});
  const std::vector<double> hot{0.0, 0.0, 1.0};
  const auto set = predict_set(hot, with_tau(1.0, 0.2, 1));
  CHECK(std::find(set.begin(), set.end(), 2) != set.end());
}

TEST_CASE("sets grow with tau and shrink with lambda") {
  const ProbabilityMatrix p = testutil::random_simplex(200, 5, 4);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    std::vector<int> prev;
    for (double tau : {0.2, 0.5, 0.8, 1.0, 1.3}) {
      const auto s = predict_set(p.row(r), with_tau(tau, 0.05, 1));
      CHECK(std::includes(s.begin(), s.end(), prev.begin(), prev.end()));
      prev = s;
    }
    std::size_t last = 6;
    for (double lambda : {0.0, 0.01, 0.1, 1.0}) {
      const auto s = predict_set(p.row(r), with_tau(0.9, lambda, 1));
      CHECK(s.size() <= last);
      last = s.size();
    }
    // Nonempty whenever tau reaches the top-1 probability.
    const double top = p(r, argmax(p.row(r)));
    CHECK(!predict_set(p.row(r), with_tau(top, 0.3, 1)).empty());
  }
}

TEST_CASE("coverage bookkeeping") {
  const std::vector<int> y{0, 1, 2};
  CHECK(coverage({{0, 1, 2}, {0, 1, 2}, {0, 1, 2}}, y) == 1.0);
  CHECK(coverage({{}, {}, {}}, y) == 0.0);
  CHECK(coverage({{0}, {0}, {2}}, y) == doctest::Approx(2.0 / 3.0));
  CHECK(mean_set_size({{0}, {0, 1}, {}}) == 1.0);
  CHECK_THROWS_AS(coverage({{0}}, y), LengthMismatch);
}

TEST_CASE("calibrated sets cover exchangeable draws") {
  // Labels drawn from the predicted distribution itself, so scores are exchangeable.
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProbabilityMatrix p = testutil::random_simplex(1500, 4, seed);
    Rng rng(seed + 1000);
    std::vector<int> y(1500);
    for (std::size_t i = 0; i < 1500; ++i) {
      double u = rng.uniform(), acc = 0.0;
      y[i] = 3;
      for (int c = 0; c < 4; ++c)
        if (u < (acc += p(i, static_cast<std::size_t>(c)))) {
          y[i] = c;
          break;
        }
    }
    std::vector<std::size_t> cal(500), test(1000);
    for (std::size_t i = 0; i < 500; ++i) cal[i] = i;
    for (std::size_t i = 0; i < 1000; ++i) test[i] = 500 + i;
    std::vector<int> ycal(y.begin(), y.begin() + 500), ytest(y.begin() + 500, y.end());
    const auto c = calibrate(select_rows(p, cal), ycal, ConformalConfig{});
    total += coverage(predict_sets(select_rows(p, test), c), ytest);
  }
  CHECK(total / 20.0 >= 0.88);
  CHECK(total / 20.0 <= 0.93);
}

TEST_CASE("acquisition endpoints and ordering") {
  const ProbabilityMatrix pt = testutil::random_simplex(50, 3, 1), pm = testutil::random_simplex(50, 3, 2);
  std::vector<int> y(50);
  for (std::size_t i = 0; i < 50; ++i) y[i] = static_cast<int>(i % 3);
  const auto cal = calibrate(pt, y, ConformalConfig{});
  const std::vector<double> grid{0.0, 0.25, 0.5, 1.0};
  for (auto policy : {AcquisitionPolicy::uncertainty, AcquisitionPolicy::random}) {
    const auto curve = acquisition_curve(pt, pm, y, cal, grid, policy, 7, 3);
    REQUIRE(curve.points.size() == 4);
    CHECK(curve.points.front().accuracy == confusion_metrics(argmax_rows(pt), y, 3).accuracy);
    CHECK(curve.points.back().accuracy == confusion_metrics(argmax_rows(pm), y, 3).accuracy);
    CHECK(curve.points.front().acquired == 0);
    CHECK(curve.points[1].acquired == 13);
    CHECK(curve.points.back().acquired == 50);
  }
  const auto order = acquisition_order(pt, cal, AcquisitionPolicy::uncertainty, 0);
  const auto sets = predict_sets(pt, cal);
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto a = order[i - 1], b = order[i];
    CHECK(sets[a].size() >= sets[b].size());
    if (sets[a].size() == sets[b].size()) CHECK(pt(a, argmax(pt.row(a))) <= pt(b, argmax(pt.row(b))));
  }
  CHECK_THROWS_AS(acquisition_curve(pt, pm, y, cal, std::vector<double>{0.0, 0.5}, AcquisitionPolicy::random, 0, 3),
                  ConfigError);
}

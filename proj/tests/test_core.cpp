#include <doctest.h>

#include <cmath>
#include <limits>

#include "mmfuse/csv.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/kernels.hpp"
#include "mmfuse/matrix.hpp"
#include "mmfuse/rng.hpp"
#include "test_util.hpp"

using namespace mmfuse;

TEST_CASE("argmax breaks ties toward the lower index") {
  const std::vector<double> v{0.2, 0.4, 0.4};
  CHECK(argmax(v) == 1);
  CHECK(argmax_rows(Matrix{{0.5, 0.5}, {0.1, 0.9}}) == std::vector<int>{0, 1});
}

TEST_CASE("log loss clips and checks lengths") {
  const Matrix p{{1.0, 0.0}, {0.5, 0.5}};
  const std::vector<int> y{1, 0};
  CHECK(log_loss(p, y) == doctest::Approx((-std::log(1e-15) - std::log(0.5)) / 2.0));
  CHECK_THROWS_AS(log_loss(p, std::vector<int>{0}), LengthMismatch);
}

TEST_CASE("check_simplex rejects rows off the simplex") {
  CHECK_NOTHROW(check_simplex(Matrix{{0.25, 0.75}}));
  CHECK_THROWS_AS(check_simplex(Matrix{{0.3, 0.3}}), InvalidProbability);
  CHECK_THROWS_AS(check_simplex(Matrix{{-0.1, 1.1}}), InvalidProbability);
}

TEST_CASE("matrix json round trip is exact") {
  const Matrix m = testutil::random_matrix(3, 4, 9);
  CHECK(matrix_from_json(to_json(m)) == m);
}

TEST_CASE("hconcat and select_rows") {
  const Matrix a{{1, 2}, {3, 4}}, b{{5}, {6}};
  const Matrix* parts[] = {&a, &b};
  CHECK(hconcat(parts) == Matrix{{1, 2, 5}, {3, 4, 6}});
  const std::vector<std::size_t> rows{1, 1};
  CHECK(select_rows(a, rows) == Matrix{{3, 4}, {3, 4}});
}

TEST_CASE("parallel kernels equal the serial reference bitwise") {
  const int before = kernels::max_threads();
  kernels::set_threads(4);
  // Sizes large enough to cross the parallel threshold.
  const Matrix a = testutil::random_matrix(600, 70, 1), b = testutil::random_matrix(70, 90, 2);
  const Matrix c = testutil::random_matrix(600, 90, 3);
  CHECK(kernels::matmul(a, b) == kernels::serial::matmul(a, b));
  CHECK(kernels::matmul_tn(a, c) == kernels::serial::matmul_tn(a, c));
  CHECK(kernels::matmul_nt(c, testutil::random_matrix(40, 90, 4)) ==
        kernels::serial::matmul_nt(c, testutil::random_matrix(40, 90, 4)));
  CHECK(kernels::column_sums(c) == kernels::serial::column_sums(c));

  for (auto act : {kernels::Activation::relu, kernels::Activation::tanh}) {
    Matrix x = c, y = c;
    kernels::activate(x, act);
    kernels::serial::activate(y, act);
    CHECK(x == y);
    Matrix gx = c, gy = c;
    kernels::activation_backward(gx, x, act);
    kernels::serial::activation_backward(gy, y, act);
    CHECK(gx == gy);
  }
  Matrix s1 = c, s2 = c;
  kernels::softmax_rows(s1);
  kernels::serial::softmax_rows(s2);
  CHECK(s1 == s2);
  std::vector<double> bias(90, 0.5);
  Matrix r1 = c, r2 = c;
  kernels::add_row_vector(r1, bias);
  kernels::serial::add_row_vector(r2, bias);
  CHECK(r1 == r2);
  kernels::set_threads(before);
}

TEST_CASE("matmul matches a naive triple loop") {
  const Matrix a = testutil::random_matrix(5, 3, 7), b = testutil::random_matrix(3, 4, 8);
  const Matrix c = kernels::matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-14));
    }
  CHECK_THROWS_AS(kernels::matmul(a, a), ShapeMismatch);
}

TEST_CASE("softmax is stable for large logits") {
  Matrix m{{1000.0, 1000.0}, {-1000.0, 0.0}};
  kernels::softmax_rows(m);
  CHECK(m(0, 0) == doctest::Approx(0.5));
  CHECK(m(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("rng is deterministic and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  const auto p = Rng(3).permutation(50);
  std::vector<bool> seen(50, false);
  for (auto v : p) seen[v] = true;
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}

TEST_CASE("rng moments") {
  Rng rng(5);
  double s = 0, ss = 0, g = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    ss += x * x;
    g += rng.gamma(2.5);
  }
  CHECK(s / n == doctest::Approx(0.0).epsilon(0.01));
  CHECK(ss / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(g / n == doctest::Approx(2.5).epsilon(0.01));
}

TEST_CASE("csv parsing handles quotes, BOM and ragged rows") {
  const auto t = parse_csv("\xEF\xBB\xBFid,note\n1,\"a, \"\"b\"\"\"\n2,\"line\nbreak\"\n");
  REQUIRE(t.header == std::vector<std::string>{"id", "note"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "a, \"b\"");
  CHECK(t.rows[1][1] == "line\nbreak");
  CHECK_THROWS_AS(parse_csv("a,b\n1\n"), SchemaError);
  CHECK_THROWS_AS(read_csv("/nonexistent/file.csv"), MissingFile);
}

TEST_CASE("csv write and read round trip") {
  const auto dir = testutil::scratch("csv");
  CsvTable t{{"a", "b"}, {{"x,y", "1"}, {"\"q\"", ""}}};
  write_csv(dir / "t.csv", t);
  const auto back = read_csv(dir / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

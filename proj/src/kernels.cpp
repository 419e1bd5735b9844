#include "mmfuse/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mmfuse/errors.hpp"

namespace mmfuse::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr long kParallelWork = 1L << 15;

long work(std::size_t a, std::size_t b, std::size_t c = 1) {
  return static_cast<long>(a) * static_cast<long>(b) * static_cast<long>(c);
}

void check_inner(std::size_t lhs, std::size_t rhs, const char* op) {
  if (lhs != rhs) throw ShapeMismatch(std::string(op) + ": inner dimensions differ");
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  const long n = static_cast<long>(a.rows());
  const std::size_t k = a.cols(), m = b.cols();
  Matrix c(a.rows(), m);
#pragma omp parallel for schedule(static) if (work(a.rows(), k, m) > kParallelWork)
  for (long i = 0; i < n; ++i) {
    double* out = c.data() + i * m;
    const double* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) out[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Matrix c(k, m);
  const long kk = static_cast<long>(k);
#pragma omp parallel for schedule(static) if (work(n, k, m) > kParallelWork)
  for (long p = 0; p < kk; ++p) {
    double* out = c.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = a(i, static_cast<std::size_t>(p));
      const double* brow = b.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) out[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  const long n = static_cast<long>(a.rows());
  const std::size_t k = a.cols(), m = b.rows();
  Matrix c(a.rows(), m);
#pragma omp parallel for schedule(static) if (work(a.rows(), k, m) > kParallelWork)
  for (long i = 0; i < n; ++i) {
    const double* arow = a.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c(static_cast<std::size_t>(i), j) = s;
    }
  }
  return c;
}

void add_row_vector(Matrix& m, std::span<const double> v) {
  if (v.size() != m.cols()) throw ShapeMismatch("add_row_vector: width differs");
  const long n = static_cast<long>(m.rows());
#pragma omp parallel for schedule(static) if (work(m.rows(), m.cols()) > kParallelWork)
  for (long i = 0; i < n; ++i) {
    auto r = m.row(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += v[j];
  }
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  const long cols = static_cast<long>(m.cols());
#pragma omp parallel for schedule(static) if (work(m.rows(), m.cols()) > kParallelWork)
  for (long j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, static_cast<std::size_t>(j));
    s[static_cast<std::size_t>(j)] = acc;
  }
  return s;
}

namespace {
void softmax_row(std::span<double> r) {
  if (r.empty()) return;
  const double mx = *std::max_element(r.begin(), r.end());
  double sum = 0.0;
  for (double& v : r) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : r) v /= sum;
}

double act(double z, Activation a) { return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z); }
double act_grad(double out, Activation a) { return a == Activation::relu ? (out > 0.0 ? 1.0 : 0.0) : 1.0 - out * out; }
}  // namespace

void softmax_rows(Matrix& m) {
  const long n = static_cast<long>(m.rows());
#pragma omp parallel for schedule(static) if (work(m.rows(), m.cols(), 8) > kParallelWork)
  for (long i = 0; i < n; ++i) softmax_row(m.row(static_cast<std::size_t>(i)));
}

void activate(Matrix& m, Activation a) {
  auto& v = m.values();
  const long n = static_cast<long>(v.size());
#pragma omp parallel for schedule(static) if (n > kParallelWork)
  for (long i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = act(v[static_cast<std::size_t>(i)], a);
}

void activation_backward(Matrix& grad, const Matrix& activated, Activation a) {
  if (grad.rows() != activated.rows() || grad.cols() != activated.cols())
    throw ShapeMismatch("activation_backward: shapes differ");
  auto& g = grad.values();
  const auto& o = activated.values();
  const long n = static_cast<long>(g.size());
#pragma omp parallel for schedule(static) if (n > kParallelWork)
  for (long i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] *= act_grad(o[static_cast<std::size_t>(i)], a);
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
      c(i, j) = s;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      c(i, j) = s;
    }
  return c;
}

void add_row_vector(Matrix& m, std::span<const double> v) {
  if (v.size() != m.cols()) throw ShapeMismatch("add_row_vector: width differs");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += v[j];
}

std::vector<double> column_sums(const Matrix& m) {
  std::vector<double> s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s[j] += m(i, j);
  return s;
}

void softmax_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) softmax_row(m.row(i));
}

void activate(Matrix& m, Activation a) {
  for (double& v : m.values()) v = act(v, a);
}

void activation_backward(Matrix& grad, const Matrix& activated, Activation a) {
  if (grad.rows() != activated.rows() || grad.cols() != activated.cols())
    throw ShapeMismatch("activation_backward: shapes differ");
  for (std::size_t i = 0; i < grad.size(); ++i) grad.values()[i] *= act_grad(activated.values()[i], a);
}

}  // namespace serial

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n >= 1) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace mmfuse::kernels

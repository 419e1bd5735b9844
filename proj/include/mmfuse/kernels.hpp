#pragma once

#include <span>
#include <vector>

#include "mmfuse/matrix.hpp"

// Dense kernels used by the neural network and ensemble code. The default
// versions split rows across OpenMP threads; every output element is still
// accumulated by a single thread in ascending index order, so results are
// identical to the serial reference regardless of the thread count.
namespace mmfuse::kernels {

enum class Activation { relu, tanh };

Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
void add_row_vector(Matrix& m, std::span<const double> v);
std::vector<double> column_sums(const Matrix& m);
void softmax_rows(Matrix& m);
void activate(Matrix& m, Activation act);
// grad *= f'(z), with f'(z) expressed through the activation output.
void activation_backward(Matrix& grad, const Matrix& activated, Activation act);

// Single-threaded reference implementations, kept for tests and benchmarks.
namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
void add_row_vector(Matrix& m, std::span<const double> v);
std::vector<double> column_sums(const Matrix& m);
void softmax_rows(Matrix& m);
void activate(Matrix& m, Activation act);
void activation_backward(Matrix& grad, const Matrix& activated, Activation act);
}  // namespace serial

// Number of threads OpenMP will use for the next parallel region.
int max_threads();
void set_threads(int n);

}  // namespace mmfuse::kernels

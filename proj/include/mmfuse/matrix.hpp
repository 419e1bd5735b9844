#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <json.hpp>

namespace mmfuse {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// n x C row-stochastic matrix; the exchange format between models, ensembles,
// metrics and conformal prediction.
using ProbabilityMatrix = Matrix;

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows);
Matrix hconcat(std::span<const Matrix* const> blocks);
Matrix transpose(const Matrix& m);
std::vector<double> column_means(const Matrix& m);

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> v);
std::vector<int> argmax_rows(const Matrix& p);

// Throws InvalidProbability when some row leaves the simplex by more than tol.
void check_simplex(const Matrix& p, double tol = 1e-6);

// Mean negative log-likelihood of the labels; probabilities clipped at 1e-15.
double log_loss(const ProbabilityMatrix& p, std::span<const int> y);

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace mmfuse

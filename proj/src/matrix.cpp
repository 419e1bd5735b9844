#include "mmfuse/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmfuse/errors.hpp"

namespace mmfuse {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeMismatch("ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw ShapeMismatch("ragged row list");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= m.rows()) throw ShapeMismatch("row index out of range");
    auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix hconcat(std::span<const Matrix* const> blocks) {
  if (blocks.empty()) return {};
  const std::size_t n = blocks.front()->rows();
  std::size_t width = 0;
  for (const Matrix* b : blocks) {
    if (b->rows() != n) throw ShapeMismatch("hconcat: row counts differ");
    width += b->cols();
  }
  Matrix out(n, width);
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = out.row(r).begin();
    for (const Matrix* b : blocks) {
      auto src = b->row(r);
      dst = std::copy(src.begin(), src.end(), dst);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

std::vector<double> column_means(const Matrix& m) {
  std::vector<double> mean(m.cols(), 0.0);
  if (m.rows() == 0) return mean;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) mean[c] += m(r, c);
  for (double& v : mean) v /= static_cast<double>(m.rows());
  return mean;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::vector<int> argmax_rows(const Matrix& p) {
  std::vector<int> out(p.rows());
  for (std::size_t r = 0; r < p.rows(); ++r) out[r] = static_cast<int>(argmax(p.row(r)));
  return out;
}

void check_simplex(const Matrix& p, double tol) {
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double sum = 0.0;
    for (double v : p.row(r)) {
      if (!(v >= -tol)) throw InvalidProbability("negative or non-finite entry in row " + std::to_string(r));
      sum += v;
    }
    if (std::abs(sum - 1.0) > tol)
      throw InvalidProbability("row " + std::to_string(r) + " sums to " + std::to_string(sum));
  }
}

double log_loss(const ProbabilityMatrix& p, std::span<const int> y) {
  if (p.rows() != y.size()) throw LengthMismatch("log_loss: predictions and labels differ in length");
  if (y.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const double q = std::max(p(r, static_cast<std::size_t>(y[r])), 1e-15);
    total -= std::log(q);
  }
  return total / static_cast<double>(y.size());
}

nlohmann::json to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw SchemaError("matrix payload has wrong length");
  m.values() = std::move(data);
  return m;
}

}  // namespace mmfuse

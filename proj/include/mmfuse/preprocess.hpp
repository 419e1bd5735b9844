#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmfuse/matrix.hpp"

namespace mmfuse {

enum class ImputerKind { mean, most_frequent, constant_zero };
enum class ScalerKind { none, standard, minmax };

std::string to_string(ImputerKind k);
std::string to_string(ScalerKind k);
ImputerKind imputer_from_string(const std::string& s);
ScalerKind scaler_from_string(const std::string& s);

struct Imputer {
  ImputerKind kind = ImputerKind::mean;
  std::vector<double> fill;  // per column

  Matrix transform(const Matrix& x) const;
};

// NaN cells are missing. mean / most_frequent throw AllMissingColumn for a
// column without observations; most_frequent breaks ties toward the smaller value.
Imputer fit_imputer(const Matrix& x, ImputerKind kind);

struct Scaler {
  ScalerKind kind = ScalerKind::none;
  std::vector<double> offset;
  std::vector<double> scale;  // 0 marks a degenerate column, mapped to 0

  Matrix transform(const Matrix& x) const;
};

// standard: population mean/std; minmax: [min, max] -> [0, 1].
Scaler fit_scaler(const Matrix& x, ScalerKind kind);

struct Pca {
  std::vector<double> mean;
  Matrix basis;  // p x k, orthonormal columns
  std::vector<double> explained_variance;
  double total_variance = 0.0;

  std::size_t components() const { return basis.cols(); }
  std::vector<double> explained_variance_ratio() const;
  Matrix transform(const Matrix& x) const;
  Matrix inverse_transform(const Matrix& z) const;
};

// Components ordered by non-increasing variance; throws RankError unless
// 1 <= n_components <= min(n - 1, p).
Pca fit_pca(const Matrix& x, std::size_t n_components);

// Imputation -> scaling -> optional PCA, fitted on training rows.
struct Preprocessor {
  std::size_t input_width = 0;
  Imputer imputer;
  Scaler scaler;
  std::optional<Pca> pca;

  std::size_t output_width() const;
  Matrix transform(const Matrix& x) const;  // throws ShapeMismatch on width
};

Preprocessor fit_preprocessor(const Matrix& x, ImputerKind imputer, ScalerKind scaler, std::size_t pca_components);

nlohmann::json to_json(const Preprocessor& p);
Preprocessor preprocessor_from_json(const nlohmann::json& j);

}  // namespace mmfuse

#include "mmfuse/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "mmfuse/errors.hpp"
#include "mmfuse/kernels.hpp"

namespace mmfuse {

std::string to_string(ImputerKind k) {
  switch (k) {
    case ImputerKind::mean: return "mean";
    case ImputerKind::most_frequent: return "most_frequent";
    case ImputerKind::constant_zero: return "constant_zero";
  }
  return "";
}

std::string to_string(ScalerKind k) {
  switch (k) {
    case ScalerKind::none: return "none";
    case ScalerKind::standard: return "standard";
    case ScalerKind::minmax: return "minmax";
  }
  return "";
}

ImputerKind imputer_from_string(const std::string& s) {
  if (s == "mean") return ImputerKind::mean;
  if (s == "most_frequent") return ImputerKind::most_frequent;
  if (s == "constant_zero") return ImputerKind::constant_zero;
  throw SchemaError("unknown imputer '" + s + "'");
}

ScalerKind scaler_from_string(const std::string& s) {
  if (s == "none") return ScalerKind::none;
  if (s == "standard") return ScalerKind::standard;
  if (s == "minmax") return ScalerKind::minmax;
  throw SchemaError("unknown scaler '" + s + "'");
}

Imputer fit_imputer(const Matrix& x, ImputerKind kind) {
  Imputer imp{kind, std::vector<double>(x.cols(), 0.0)};
  if (kind == ImputerKind::constant_zero) return imp;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double sum = 0.0;
    std::size_t seen = 0;
    std::map<double, std::size_t> counts;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double v = x(r, c);
      if (std::isnan(v)) continue;
      sum += v;
      ++seen;
      if (kind == ImputerKind::most_frequent) ++counts[v];
    }
    if (seen == 0) throw AllMissingColumn("column " + std::to_string(c) + " has no observed values");
    if (kind == ImputerKind::mean) {
      imp.fill[c] = sum / static_cast<double>(seen);
    } else {
      std::size_t best = 0;
      for (const auto& [v, n] : counts)
        if (n > best) {
          best = n;
          imp.fill[c] = v;
        }
    }
  }
  return imp;
}

Matrix Imputer::transform(const Matrix& x) const {
  if (x.cols() != fill.size()) throw ShapeMismatch("imputer width differs");
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c)
      if (std::isnan(out(r, c))) out(r, c) = fill[c];
  return out;
}

Scaler fit_scaler(const Matrix& x, ScalerKind kind) {
  Scaler s{kind, std::vector<double>(x.cols(), 0.0), std::vector<double>(x.cols(), 1.0)};
  if (kind == ScalerKind::none || x.rows() == 0) return s;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    if (kind == ScalerKind::standard) {
      double mean = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) mean += x(r, c);
      mean /= static_cast<double>(x.rows());
      double var = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
      var /= static_cast<double>(x.rows());
      const double sd = std::sqrt(var);
      s.offset[c] = mean;
      s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? 1.0 / sd : 0.0;
    } else {
      double lo = x(0, c), hi = x(0, c);
      for (std::size_t r = 1; r < x.rows(); ++r) {
        lo = std::min(lo, x(r, c));
        hi = std::max(hi, x(r, c));
      }
      s.offset[c] = lo;
      s.scale[c] = hi > lo ? 1.0 / (hi - lo) : 0.0;
    }
  }
  return s;
}

Matrix Scaler::transform(const Matrix& x) const {
  if (x.cols() != offset.size()) throw ShapeMismatch("scaler width differs");
  if (kind == ScalerKind::none) return x;
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - offset[c]) * scale[c];
  return out;
}

std::vector<double> Pca::explained_variance_ratio() const {
  std::vector<double> r(explained_variance.size(), 0.0);
  if (total_variance <= 0.0) return r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = explained_variance[i] / total_variance;
  return r;
}

Matrix Pca::transform(const Matrix& x) const {
  if (x.cols() != mean.size()) throw ShapeMismatch("PCA width differs");
  Matrix centered = x;
  for (std::size_t r = 0; r < centered.rows(); ++r)
    for (std::size_t c = 0; c < centered.cols(); ++c) centered(r, c) -= mean[c];
  return kernels::matmul(centered, basis);
}

Matrix Pca::inverse_transform(const Matrix& z) const {
  Matrix x = kernels::matmul_nt(z, basis);
  kernels::add_row_vector(x, mean);
  return x;
}

Pca fit_pca(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows(), p = x.cols();
  if (k < 1 || n < 2 || k > std::min(n - 1, p))
    throw RankError("n_components=" + std::to_string(k) + " outside [1, min(n-1, p)] for " + std::to_string(n) +
                    "x" + std::to_string(p));
  Pca pca;
  pca.mean = column_means(x);
  Eigen::MatrixXd centered(n, p);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < p; ++c) centered(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(r, c) - pca.mean[c];
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw RankError("covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues; take the top k.
  pca.basis = Matrix(p, k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = static_cast<Eigen::Index>(p - 1 - j);
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0) v = -v;  // deterministic sign
    for (std::size_t i = 0; i < p; ++i) pca.basis(i, j) = v(static_cast<Eigen::Index>(i));
    pca.explained_variance.push_back(std::max(0.0, eig.eigenvalues()(col)));
  }
  pca.total_variance = std::max(0.0, eig.eigenvalues().sum());
  return pca;
}

std::size_t Preprocessor::output_width() const { return pca ? pca->components() : input_width; }

Matrix Preprocessor::transform(const Matrix& x) const {
  if (x.cols() != input_width)
    throw ShapeMismatch("expected " + std::to_string(input_width) + " columns, got " + std::to_string(x.cols()));
  Matrix out = scaler.transform(imputer.transform(x));
  return pca ? pca->transform(out) : out;
}

Preprocessor fit_preprocessor(const Matrix& x, ImputerKind imputer, ScalerKind scaler, std::size_t pca_components) {
  Preprocessor p;
  p.input_width = x.cols();
  p.imputer = fit_imputer(x, imputer);
  Matrix filled = p.imputer.transform(x);
  p.scaler = fit_scaler(filled, scaler);
  if (pca_components > 0) p.pca = fit_pca(p.scaler.transform(filled), pca_components);
  return p;
}

nlohmann::json to_json(const Preprocessor& p) {
  nlohmann::json j = {{"input_width", p.input_width},
                      {"imputer", {{"kind", to_string(p.imputer.kind)}, {"fill", p.imputer.fill}}},
                      {"scaler", {{"kind", to_string(p.scaler.kind)}, {"offset", p.scaler.offset}, {"scale", p.scaler.scale}}}};
  if (p.pca)
    j["pca"] = {{"mean", p.pca->mean},
                {"basis", to_json(p.pca->basis)},
                {"explained_variance", p.pca->explained_variance},
                {"total_variance", p.pca->total_variance}};
  return j;
}

Preprocessor preprocessor_from_json(const nlohmann::json& j) {
  Preprocessor p;
  p.input_width = j.at("input_width").get<std::size_t>();
  p.imputer.kind = imputer_from_string(j.at("imputer").at("kind").get<std::string>());
  p.imputer.fill = j.at("imputer").at("fill").get<std::vector<double>>();
  p.scaler.kind = scaler_from_string(j.at("scaler").at("kind").get<std::string>());
  p.scaler.offset = j.at("scaler").at("offset").get<std::vector<double>>();
  p.scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
  if (j.contains("pca")) {
    Pca pca;
    const auto& jp = j.at("pca");
    pca.mean = jp.at("mean").get<std::vector<double>>();
    pca.basis = matrix_from_json(jp.at("basis"));
    pca.explained_variance = jp.at("explained_variance").get<std::vector<double>>();
    pca.total_variance = jp.at("total_variance").get<double>();
    p.pca = std::move(pca);
  }
  return p;
}

}  // namespace mmfuse

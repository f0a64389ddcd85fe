// faultmap/kpca.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <fstream>

#include <nlohmann/json.hpp>

#include "faultmap/core.hpp"
#include "faultmap/numerics.hpp"

namespace faultmap {

enum class KernelKind { rbf, linear };

/// Kernel family and bandwidth. gamma <= 0 on an rbf spec means "resolve by
/// the median heuristic at fit time"; fitted models always carry a positive
/// gamma.
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double gamma = 0.0;
};

enum class KpcaMode { exact, nystrom };

/// Everything needed to score new observations: the kernel, the reference
/// rows (training set if exact, landmarks if Nystrom, both in standardized
/// space), kernel centering statistics, projection coefficients, and the
/// feature standardization applied before kerneling.
struct KpcaModel {
  KernelSpec kernel;
  KpcaMode mode = KpcaMode::exact;
  Matrix reference_points;           // m x d
  std::vector<double> column_means;  // per-reference-column kernel means
  double grand_mean = 0.0;
  Matrix components;                 // m x k projection coefficients
  std::vector<double> eigenvalues;   // k, descending, strictly positive
  Standardization feature_stats;
  std::size_t dropped_components = 0;  // requested minus kept
  bool ridge_applied = false;
  double ridge_value = 0.0;

  std::size_t component_count() const { return eigenvalues.size(); }
  std::size_t feature_count() const { return feature_stats.means.size(); }
};

/// A fitted model together with the training scores it was fitted from.
/// Scores are reproduced by kpca_project but computed here by the
/// eigendecomposition route, so the two paths can check each other.
struct KpcaFit {
  KpcaModel model;
  Matrix training_scores;  // n x k
};

inline constexpr double kEigenvalueDropRatio = 1e-10;
inline constexpr double kRidgeScale = 1e-10;

/// Kernel evaluations between the rows of a and b.
inline Matrix kernel_matrix(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
  if (a.cols() != b.cols())
    throw invalid_argument("kernel_matrix: feature counts disagree (" + std::to_string(a.cols()) +
                           " vs " + std::to_string(b.cols()) + ")");
  if (spec.kind == KernelKind::rbf && !(spec.gamma > 0.0))
    throw invalid_argument("kernel_matrix: rbf kernel needs gamma > 0");
  Matrix k(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ra = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto rb = b.row(j);
      if (spec.kind == KernelKind::rbf) {
        k(i, j) = std::exp(-spec.gamma * squared_distance(ra, rb));
      } else {
        double dot = 0.0;
        for (std::size_t c = 0; c < ra.size(); ++c) dot += ra[c] * rb[c];
        k(i, j) = dot;
      }
    }
  }
  return k;
}

/// Median-heuristic bandwidth: gamma = 1 / (2 * median of nonzero pairwise
/// squared distances).
inline double median_gamma(const FeatureMatrix& x) {
  if (x.n() < 2) throw invalid_argument("median_gamma: need at least 2 observations");
  std::vector<double> nonzero;
  nonzero.reserve(x.n() * (x.n() - 1) / 2);
  for (std::size_t i = 0; i < x.n(); ++i)
    for (std::size_t j = i + 1; j < x.n(); ++j) {
      const double d = squared_distance(x.values.row(i), x.values.row(j));
      if (d > 0.0) nonzero.push_back(d);
    }
  if (nonzero.empty())
    throw numeric_error("median_gamma: all pairwise distances are zero (degenerate data)");
  std::sort(nonzero.begin(), nonzero.end());
  const std::size_t m = nonzero.size();
  const double median =
      (m % 2 == 1) ? nonzero[m / 2] : 0.5 * (nonzero[m / 2 - 1] + nonzero[m / 2]);
  return 1.0 / (2.0 * median);
}

namespace detail {

inline KernelSpec resolve_kernel(KernelSpec spec, const FeatureMatrix& standardized) {
  if (spec.kind == KernelKind::rbf && !(spec.gamma > 0.0))
    spec.gamma = median_gamma(standardized);
  return spec;
}

/// Keeps eigenpairs with lambda > ratio * lambda_max, all strictly positive.
inline std::size_t positive_rank(const std::vector<double>& values) {
  if (values.empty() || values.front() <= 0.0) return 0;
  const double cutoff = kEigenvalueDropRatio * values.front();
  std::size_t kept = 0;
  while (kept < values.size() && values[kept] > cutoff) ++kept;
  return kept;
}

}  // namespace detail

/// Exact KPCA: double-centered Gram eigendecomposition. Coefficient column j
/// is the unit eigenvector scaled by 1/sqrt(lambda_j), so projecting the
/// training data reproduces classical score geometry. Eigenpairs whose
/// eigenvalue falls below 1e-10 of the largest are dropped and counted.
inline KpcaFit kpca_fit_exact(const FeatureMatrix& x, std::size_t k, KernelSpec spec) {
  const std::size_t n = x.n();
  if (k < 1 || k > n)
    throw invalid_argument("kpca_fit_exact: components must satisfy 1 <= k <= n");

  auto [xs, stats] = standardize(x);
  spec = detail::resolve_kernel(spec, xs);

  Matrix gram = kernel_matrix(xs.values, xs.values, spec);
  std::vector<double> col_means(n, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) col_means[j] += gram(i, j);
  }
  for (std::size_t j = 0; j < n; ++j) {
    col_means[j] /= static_cast<double>(n);
    grand += col_means[j];
  }
  grand /= static_cast<double>(n);

  Matrix centered(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      centered(i, j) = gram(i, j) - col_means[i] - col_means[j] + grand;

  const auto eig = sym_eigen(centered, k);
  const std::size_t kept = detail::positive_rank(eig.values);
  if (kept == 0)
    throw numeric_error("kpca_fit_exact: no strictly positive eigenvalues; data is degenerate");

  KpcaFit fit;
  fit.model.kernel = spec;
  fit.model.mode = KpcaMode::exact;
  fit.model.reference_points = xs.values;
  fit.model.column_means = std::move(col_means);
  fit.model.grand_mean = grand;
  fit.model.feature_stats = std::move(stats);
  fit.model.dropped_components = k - kept;
  fit.model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + kept);
  fit.model.components = Matrix(n, kept);
  fit.training_scores = Matrix(n, kept);
  for (std::size_t j = 0; j < kept; ++j) {
    const double root = std::sqrt(eig.values[j]);
    for (std::size_t i = 0; i < n; ++i) {
      fit.model.components(i, j) = eig.vectors(i, j) / root;
      fit.training_scores(i, j) = eig.vectors(i, j) * root;
    }
  }
  return fit;
}

/// Projects new observations through a fitted model. Rows are standardized
/// with the model's stored statistics and kernel-centered with train-time
/// means, so scoring one row at a time equals scoring a batch bit-for-bit.
inline Matrix kpca_project(const KpcaModel& model, const FeatureMatrix& xnew) {
  if (xnew.d() != model.feature_count())
    throw invalid_argument("kpca_project: feature count " + std::to_string(xnew.d()) +
                           " does not match the model's " +
                           std::to_string(model.feature_count()));
  const FeatureMatrix xs = apply_standardization(model.feature_stats, xnew);
  const std::size_t m = model.reference_points.rows();
  const std::size_t k = model.component_count();
  Matrix scores(xnew.n(), k, 0.0);
  for (std::size_t r = 0; r < xs.n(); ++r) {
    Matrix row(1, xs.d());
    std::copy(xs.values.row(r).begin(), xs.values.row(r).end(), row.row(0).begin());
    const Matrix krow = kernel_matrix(row, model.reference_points, model.kernel);
    double row_mean = 0.0;
    if (model.mode == KpcaMode::exact) {
      for (std::size_t j = 0; j < m; ++j) row_mean += krow(0, j);
      row_mean /= static_cast<double>(m);
    }
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double centered =
            model.mode == KpcaMode::exact
                ? krow(0, j) - model.column_means[j] - row_mean + model.grand_mean
                : krow(0, j) - model.column_means[j];
        s += centered * model.components(j, c);
      }
      scores(r, c) = s;
    }
  }
  return scores;
}

/// Nystrom KPCA against caller-supplied landmarks (given in raw feature
/// space; the training standardization is applied to them). Never
/// materializes an n-by-n matrix: the largest buffers are n-by-c.
inline KpcaFit kpca_fit_nystrom_with_landmarks(const FeatureMatrix& x, const Matrix& landmarks,
                                               std::size_t k, KernelSpec spec) {
  const std::size_t n = x.n();
  const std::size_t c = landmarks.rows();
  if (c < 1 || c > n)
    throw invalid_argument("kpca_fit_nystrom: landmark count must satisfy 1 <= c <= n");
  if (k < 1 || k > c)
    throw invalid_argument("kpca_fit_nystrom: components must satisfy 1 <= k <= c");
  if (landmarks.cols() != x.d())
    throw invalid_argument("kpca_fit_nystrom: landmark dimension mismatch");

  auto [xs, stats] = standardize(x);
  spec = detail::resolve_kernel(spec, xs);
  const FeatureMatrix lm_std =
      apply_standardization(stats, FeatureMatrix(landmarks));

  Matrix w = kernel_matrix(lm_std.values, lm_std.values, spec);
  bool ridge_applied = false;
  double ridge_value = 0.0;
  EigenResult w_eig = sym_eigen(w, c);
  if (w_eig.values.back() <= 1e-12 * std::max(w_eig.values.front(), 0.0) ||
      w_eig.values.back() <= 0.0) {
    double trace = 0.0;
    for (std::size_t i = 0; i < c; ++i) trace += w(i, i);
    ridge_value = kRidgeScale * trace / static_cast<double>(c);
    for (std::size_t i = 0; i < c; ++i) w(i, i) += ridge_value;
    ridge_applied = true;
    w_eig = sym_eigen(w, c);
  }

  // W^{-1/2} with inverse roots clamped to zero below the rank cutoff.
  Matrix w_inv_root(c, c, 0.0);
  {
    const double cutoff = 1e-12 * std::max(w_eig.values.front(), 0.0);
    std::vector<double> inv_roots(c, 0.0);
    for (std::size_t j = 0; j < c; ++j)
      if (w_eig.values[j] > cutoff && w_eig.values[j] > 0.0)
        inv_roots[j] = 1.0 / std::sqrt(w_eig.values[j]);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t t = 0; t < c; ++t)
          s += w_eig.vectors(i, t) * inv_roots[t] * w_eig.vectors(j, t);
        w_inv_root(i, j) = s;
      }
  }

  const Matrix cross = kernel_matrix(xs.values, lm_std.values, spec);  // n x c
  std::vector<double> cross_col_means(c, 0.0);
  double cross_grand = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) cross_col_means[j] += cross(i, j);
  for (std::size_t j = 0; j < c; ++j) {
    cross_col_means[j] /= static_cast<double>(n);
    cross_grand += cross_col_means[j];
  }
  cross_grand /= static_cast<double>(c);

  // Landmark-induced features, mean-centered over the training rows.
  Matrix features = matmul(cross, w_inv_root);  // n x c
  std::vector<double> feature_means(c, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) feature_means[j] += features(i, j);
  for (std::size_t j = 0; j < c; ++j) feature_means[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) features(i, j) -= feature_means[j];

  const Matrix covariance = gram_of_columns(features);  // c x c
  const auto eig = sym_eigen(covariance, k);
  const std::size_t kept = detail::positive_rank(eig.values);
  if (kept == 0)
    throw numeric_error("kpca_fit_nystrom: no strictly positive eigenvalues");

  KpcaFit fit;
  fit.model.kernel = spec;
  fit.model.mode = KpcaMode::nystrom;
  fit.model.reference_points = lm_std.values;
  fit.model.column_means = std::move(cross_col_means);
  fit.model.grand_mean = cross_grand;
  fit.model.feature_stats = std::move(stats);
  fit.model.dropped_components = k - kept;
  fit.model.ridge_applied = ridge_applied;
  fit.model.ridge_value = ridge_value;
  fit.model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + kept);

  // Projection coefficients: W^{-1/2} U, so a centered kernel row against
  // the landmarks maps straight to scores.
  Matrix u(c, kept);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < kept; ++j) u(i, j) = eig.vectors(i, j);
  fit.model.components = matmul(w_inv_root, u);
  fit.training_scores = matmul(features, u);
  return fit;
}

/// Nystrom KPCA with k-means landmarks (seeded, deterministic).
inline KpcaFit kpca_fit_nystrom(const FeatureMatrix& x, std::size_t c, std::size_t k,
                                KernelSpec spec, std::uint64_t seed) {
  if (c > x.n())
    throw invalid_argument("kpca_fit_nystrom: landmark count " + std::to_string(c) +
                           " exceeds observation count " + std::to_string(x.n()));
  const KMeansResult clusters = kmeans(x, c, seed);
  return kpca_fit_nystrom_with_landmarks(x, clusters.centroids, k, spec);
}

// --------------------------------------------------------------------------
// Persistence: kpca-model/v1 JSON document.

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw io_error("model file: expected a non-empty matrix");
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw io_error("model file: ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline nlohmann::json standardization_to_json(const Standardization& s) {
  return nlohmann::json{{"means", s.means},
                        {"sds", s.sds},
                        {"zero_variance", s.zero_variance}};
}

inline Standardization standardization_from_json(const nlohmann::json& j) {
  Standardization s;
  s.means = j.at("means").get<std::vector<double>>();
  s.sds = j.at("sds").get<std::vector<double>>();
  s.zero_variance = j.at("zero_variance").get<std::vector<std::uint8_t>>();
  if (s.means.size() != s.sds.size() || s.means.size() != s.zero_variance.size())
    throw io_error("model file: inconsistent standardization vectors");
  return s;
}

}  // namespace detail

inline nlohmann::json kpca_model_to_json(const KpcaModel& model) {
  return nlohmann::json{
      {"schema", "kpca-model/v1"},
      {"kernel", {{"kind", model.kernel.kind == KernelKind::rbf ? "rbf" : "linear"},
                  {"gamma", model.kernel.gamma}}},
      {"mode", model.mode == KpcaMode::exact ? "exact" : "nystrom"},
      {"reference_points", detail::matrix_to_json(model.reference_points)},
      {"column_means", model.column_means},
      {"grand_mean", model.grand_mean},
      {"components", detail::matrix_to_json(model.components)},
      {"eigenvalues", model.eigenvalues},
      {"feature_stats", detail::standardization_to_json(model.feature_stats)},
      {"dropped_components", model.dropped_components},
      {"ridge_applied", model.ridge_applied},
      {"ridge_value", model.ridge_value}};
}

inline KpcaModel kpca_model_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "kpca-model/v1")
    throw io_error("model file: unsupported schema '" + j.value("schema", "<missing>") + "'");
  KpcaModel model;
  const std::string kind = j.at("kernel").at("kind").get<std::string>();
  if (kind == "rbf")
    model.kernel.kind = KernelKind::rbf;
  else if (kind == "linear")
    model.kernel.kind = KernelKind::linear;
  else
    throw io_error("model file: unknown kernel kind '" + kind + "'");
  model.kernel.gamma = j.at("kernel").at("gamma").get<double>();
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "exact")
    model.mode = KpcaMode::exact;
  else if (mode == "nystrom")
    model.mode = KpcaMode::nystrom;
  else
    throw io_error("model file: unknown mode '" + mode + "'");
  model.reference_points = detail::matrix_from_json(j.at("reference_points"));
  model.column_means = j.at("column_means").get<std::vector<double>>();
  model.grand_mean = j.at("grand_mean").get<double>();
  model.components = detail::matrix_from_json(j.at("components"));
  model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  model.feature_stats = detail::standardization_from_json(j.at("feature_stats"));
  model.dropped_components = j.value("dropped_components", std::size_t{0});
  model.ridge_applied = j.value("ridge_applied", false);
  model.ridge_value = j.value("ridge_value", 0.0);
  if (model.column_means.size() != model.reference_points.rows() ||
      model.components.rows() != model.reference_points.rows() ||
      model.components.cols() != model.eigenvalues.size())
    throw io_error("model file: inconsistent shapes");
  return model;
}

inline void save_kpca_model(const KpcaModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << kpca_model_to_json(model).dump(2) << "\n";
  if (!out) throw io_error("failed writing model to '" + path + "'");
}

inline KpcaModel load_kpca_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("model file '" + path + "': " + e.what());
  }
  return kpca_model_from_json(j);
}

}  // namespace faultmap

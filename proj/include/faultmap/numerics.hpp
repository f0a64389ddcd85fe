// faultmap/numerics.hpp
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

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "faultmap/core.hpp"

namespace faultmap {

/// Top-k eigenpairs of a symmetric matrix, eigenvalues sorted descending,
/// eigenvector columns orthonormal with the largest-magnitude entry positive.
struct EigenResult {
  std::vector<double> values;  // k, non-increasing
  Matrix vectors;              // n x k, columns orthonormal
};

struct KMeansResult {
  Matrix centroids;                     // k x d
  std::vector<std::size_t> assignments; // n labels in [0, k)
  double inertia = 0.0;                 // total within-cluster squared distance
};

/// Per-column centering/scaling statistics. Columns whose spread is
/// numerically zero are centered only and flagged; apply/invert skip the
/// division for them.
struct Standardization {
  std::vector<double> means;
  std::vector<double> sds;              // population standard deviation
  std::vector<std::uint8_t> zero_variance;
};

/// Symmetric n x n matrix of squared Euclidean distances. Zero diagonal;
/// cancellation negatives are clamped to zero.
inline Matrix pairwise_sq_dists(const FeatureMatrix& x) {
  const std::size_t n = x.n();
  Matrix d(n, n, 0.0);
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.values.row(i);
    double s = 0.0;
    for (double v : row) s += v * v;
    norms[i] = s;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto ri = x.values.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto rj = x.values.row(j);
      double dot = 0.0;
      for (std::size_t c = 0; c < ri.size(); ++c) dot += ri[c] * rj[c];
      const double value = std::max(0.0, norms[i] + norms[j] - 2.0 * dot);
      d(i, j) = value;
      d(j, i) = value;
    }
  }
  return d;
}

/// Top-k eigenpairs of a symmetric matrix. Rejects input that is not
/// symmetric within 1e-8. Backed by a dense self-adjoint solver; a
/// convergence failure surfaces as numeric_error naming the budget.
inline EigenResult sym_eigen(const Matrix& a, std::size_t k) {
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n)
    throw invalid_argument("sym_eigen: matrix must be square and non-empty");
  if (k < 1 || k > n)
    throw invalid_argument("sym_eigen: k must satisfy 1 <= k <= n, got " + std::to_string(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-8)
        throw invalid_argument("sym_eigen: input not symmetric within 1e-8 at (" +
                               std::to_string(i) + "," + std::to_string(j) + ")");

  Eigen::MatrixXd sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      sym(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          0.5 * (a(i, j) + a(j, i));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw numeric_error(
        "sym_eigen: eigendecomposition failed to converge within the solver's "
        "30n-iteration budget");

  // Solver returns ascending order; emit the top k descending.
  EigenResult result;
  result.values.resize(k);
  result.vectors = Matrix(n, k);
  for (std::size_t out = 0; out < k; ++out) {
    const Eigen::Index src = static_cast<Eigen::Index>(n - 1 - out);
    result.values[out] = solver.eigenvalues()(src);
    std::size_t arg_max = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mag = std::abs(solver.eigenvectors()(static_cast<Eigen::Index>(i), src));
      if (mag > best) {
        best = mag;
        arg_max = i;
      }
    }
    const double sign =
        solver.eigenvectors()(static_cast<Eigen::Index>(arg_max), src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i)
      result.vectors(i, out) =
          sign * solver.eigenvectors()(static_cast<Eigen::Index>(i), src);
  }
  return result;
}

namespace detail {

inline std::vector<std::size_t> kmeans_pp_seeds(const FeatureMatrix& x, std::size_t k,
                                                std::mt19937_64& rng) {
  const std::size_t n = x.n();
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::uniform_int_distribution<std::size_t> uniform_index(0, n - 1);
  chosen.push_back(uniform_index(rng));

  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> taken(n, 0);
  taken[chosen[0]] = 1;
  while (chosen.size() < k) {
    const auto last = x.values.row(chosen.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x.values.row(i), last));
      total += d2[i];
    }
    std::size_t pick = n;
    if (total > 0.0) {
      std::uniform_real_distribution<double> uniform_mass(0.0, total);
      double r = uniform_mass(rng);
      for (std::size_t i = 0; i < n; ++i) {
        r -= d2[i];
        if (r <= 0.0) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = n - 1;  // guard against accumulated round-off
    }
    if (pick == n || taken[pick]) {
      // All remaining mass sits on duplicates; take the first free index.
      pick = 0;
      while (pick < n && taken[pick]) ++pick;
      if (pick == n) pick = chosen.back();
    }
    taken[pick] = 1;
    chosen.push_back(pick);
  }
  return chosen;
}

}  // namespace detail

inline constexpr std::size_t kKMeansMaxIterations = 300;

/// Lloyd iterations from k-means++ seeds. Deterministic for a given seed.
/// Empty clusters are repaired by donating the point currently farthest from
/// its own centroid. max_iter is exposed so the monotonicity of inertia can
/// be observed mid-run; the default is the standard budget.
inline KMeansResult kmeans(const FeatureMatrix& x, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = kKMeansMaxIterations) {
  const std::size_t n = x.n();
  const std::size_t d = x.d();
  if (k < 1 || k > n)
    throw invalid_argument("kmeans: k must satisfy 1 <= k <= n, got k=" + std::to_string(k) +
                           " with n=" + std::to_string(n));
  std::mt19937_64 rng(seed);
  const auto seeds = detail::kmeans_pp_seeds(x, k, rng);

  Matrix centroids(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = x.values.row(seeds[c]);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
  }

  std::vector<std::size_t> assignments(n, 0);
  std::vector<std::size_t> previous(n, n + 1);
  std::vector<std::size_t> counts(k, 0);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.values.row(i);
      // Only a strictly closer centroid moves a point, so exact ties keep
      // the current assignment and empty-cluster repairs stay put on
      // duplicate-heavy data.
      std::size_t best = assignments[i];
      double best_d = squared_distance(row, centroids.row(best));
      for (std::size_t c = 0; c < k; ++c) {
        if (c == best) continue;
        const double dc = squared_distance(row, centroids.row(c));
        if (dc < best_d) {
          best_d = dc;
          best = c;
        }
      }
      assignments[i] = best;
    }
    if (assignments == previous) break;
    previous = assignments;

    std::fill(counts.begin(), counts.end(), 0);
    for (auto& v : centroids.data()) v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.values.row(i);
      auto c = centroids.row(assignments[i]);
      for (std::size_t j = 0; j < d; ++j) c[j] += row[j];
      ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto crow = centroids.row(c);
      for (std::size_t j = 0; j < d; ++j) crow[j] /= static_cast<double>(counts[c]);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      // Donate the farthest point from any cluster that keeps another member.
      std::size_t donor = n;
      double worst = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assignments[i]] < 2) continue;
        const double di = squared_distance(x.values.row(i), centroids.row(assignments[i]));
        if (di > worst) {
          worst = di;
          donor = i;
        }
      }
      if (donor == n) continue;  // k duplicates of one point; empty stays
      --counts[assignments[donor]];
      assignments[donor] = c;
      counts[c] = 1;
      const auto src = x.values.row(donor);
      std::copy(src.begin(), src.end(), centroids.row(c).begin());
    }
  }

  KMeansResult result;
  result.centroids = std::move(centroids);
  result.assignments = std::move(assignments);
  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    result.inertia +=
        squared_distance(x.values.row(i), result.centroids.row(result.assignments[i]));
  return result;
}

/// Column-wise centering and unit-variance scaling (population sd).
inline std::pair<FeatureMatrix, Standardization> standardize(const FeatureMatrix& x) {
  const std::size_t n = x.n();
  const std::size_t d = x.d();
  Standardization stats;
  stats.means.resize(d);
  stats.sds.resize(d);
  stats.zero_variance.resize(d);

  for (std::size_t j = 0; j < d; ++j) {
    double lo = x.values(0, j), hi = x.values(0, j);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = x.values(i, j);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // A bitwise-constant column centers to exact zeros.
    const double mean = (lo == hi) ? lo : sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = x.values(i, j) - mean;
      ss += c * c;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    stats.means[j] = mean;
    const bool degenerate = sd <= 1e-12 * (1.0 + std::abs(mean));
    stats.zero_variance[j] = degenerate ? 1 : 0;
    stats.sds[j] = degenerate ? 0.0 : sd;
  }

  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x.values(i, j) - stats.means[j];
      out(i, j) = stats.zero_variance[j] ? c : c / stats.sds[j];
    }
  return {FeatureMatrix(std::move(out), x.column_names), std::move(stats)};
}

/// Transforms new data with previously fitted statistics.
inline FeatureMatrix apply_standardization(const Standardization& stats,
                                           const FeatureMatrix& x) {
  if (x.d() != stats.means.size())
    throw invalid_argument("apply_standardization: feature count " + std::to_string(x.d()) +
                           " does not match fitted " + std::to_string(stats.means.size()));
  Matrix out(x.n(), x.d());
  for (std::size_t i = 0; i < x.n(); ++i)
    for (std::size_t j = 0; j < x.d(); ++j) {
      const double c = x.values(i, j) - stats.means[j];
      out(i, j) = stats.zero_variance[j] ? c : c / stats.sds[j];
    }
  return FeatureMatrix(std::move(out), x.column_names);
}

inline FeatureMatrix invert_standardization(const Standardization& stats,
                                            const FeatureMatrix& x) {
  if (x.d() != stats.means.size())
    throw invalid_argument("invert_standardization: feature count mismatch");
  Matrix out(x.n(), x.d());
  for (std::size_t i = 0; i < x.n(); ++i)
    for (std::size_t j = 0; j < x.d(); ++j) {
      const double v = stats.zero_variance[j] ? x.values(i, j) : x.values(i, j) * stats.sds[j];
      out(i, j) = v + stats.means[j];
    }
  return FeatureMatrix(std::move(out), x.column_names);
}

}  // namespace faultmap

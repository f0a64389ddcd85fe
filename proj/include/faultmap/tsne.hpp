// faultmap/tsne.hpp
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
#include <random>

#include "faultmap/core.hpp"
#include "faultmap/numerics.hpp"

namespace faultmap {

/// Exact t-SNE configuration. Defaults follow the common reference
/// conventions; perplexity and learning rate are the knobs that matter.
struct TsneConfig {
  double perplexity = 30.0;
  double learning_rate = 100.0;
  std::size_t out_dims = 2;
  std::size_t max_iter = 1000;
  std::uint64_t seed = 0;
  double early_exaggeration_factor = 12.0;
  std::size_t early_exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  std::size_t momentum_switch_iter = 250;
};

enum class AffinityKind { conditional, joint };

/// Pairwise affinities with a zero diagonal. Conditional rows sum to 1;
/// joint matrices are symmetric and sum to 1 overall.
struct AffinityMatrix {
  Matrix values;
  AffinityKind kind = AffinityKind::conditional;
};

struct Embedding {
  Matrix coords;                   // n x out_dims
  double final_kl = 0.0;
  std::size_t iterations_run = 0;
  std::vector<double> kl_history;  // KL against the un-exaggerated joint P
};

struct SigmaCalibration {
  std::vector<double> sigmas;
  AffinityMatrix conditional;
};

inline constexpr double kAffinityFloor = 1e-12;
inline constexpr double kPerplexityTolerance = 1e-3;
inline constexpr int kBracketDoublings = 50;

namespace detail {

/// Gaussian row affinities for one point at inverse bandwidth beta, with the
/// perplexity (2^H) of the resulting distribution. Distances are shifted by
/// the row minimum so the normalizer never underflows.
struct RowAffinity {
  double perplexity = 0.0;

  RowAffinity(const Matrix& sq_dists, std::size_t i, double beta, std::span<double> out) {
    const std::size_t n = sq_dists.rows();
    double min_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) min_d = std::min(min_d, sq_dists(i, j));
    double z = 0.0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        out[j] = 0.0;
        continue;
      }
      const double shifted = sq_dists(i, j) - min_d;
      const double w = std::exp(-beta * shifted);
      out[j] = w;
      z += w;
      weighted += w * shifted;
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= z;
    // H in nats = ln z + beta * E[d - min_d]; perplexity = e^H = 2^{H_bits}.
    perplexity = std::exp(std::log(z) + beta * weighted / z);
  }
};

}  // namespace detail

/// Per-point Gaussian bandwidths found by bisection on beta = 1/(2 sigma^2)
/// so each row's perplexity matches the target within 1e-3.
inline SigmaCalibration calibrate_sigmas(const Matrix& sq_dists, double perplexity) {
  const std::size_t n = sq_dists.rows();
  if (n < 2 || sq_dists.cols() != n)
    throw invalid_argument("calibrate_sigmas: need a square distance matrix with n >= 2");
  if (!(perplexity > 1.0) || !(perplexity < static_cast<double>(n)))
    throw invalid_argument("calibrate_sigmas: perplexity must lie in (1, n); got " +
                           std::to_string(perplexity) + " with n=" + std::to_string(n));

  SigmaCalibration result;
  result.sigmas.resize(n);
  result.conditional.values = Matrix(n, n, 0.0);
  result.conditional.kind = AffinityKind::conditional;

  for (std::size_t i = 0; i < n; ++i) {
    auto row = result.conditional.values.row(i);
    double beta = 1.0;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double perp = detail::RowAffinity(sq_dists, i, beta, row).perplexity;

    // Bracket the target by doubling/halving beta.
    int doublings = 0;
    while (std::abs(perp - perplexity) > kPerplexityTolerance) {
      if (perp > perplexity) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = (lo == 0.0) ? beta / 2.0 : 0.5 * (beta + lo);
      }
      if (++doublings > kBracketDoublings && (std::isinf(hi) || lo == 0.0))
        throw numeric_error("calibrate_sigmas: failed to bracket the perplexity target for row " +
                            std::to_string(i) + " within " + std::to_string(kBracketDoublings) +
                            " doublings (duplicate points?)");
      if (doublings > 1000)
        throw numeric_error("calibrate_sigmas: bisection stalled for row " + std::to_string(i));
      perp = detail::RowAffinity(sq_dists, i, beta, row).perplexity;
    }
    result.sigmas[i] = std::sqrt(0.5 / beta);
  }
  return result;
}

/// Joint affinities p_ij = (p_{j|i} + p_{i|j}) / (2n), floored off-diagonal
/// at 1e-12 and not renormalized.
inline AffinityMatrix symmetrize(const AffinityMatrix& conditional) {
  if (conditional.kind != AffinityKind::conditional)
    throw invalid_argument("symmetrize: input must be a conditional affinity matrix");
  const std::size_t n = conditional.values.rows();
  AffinityMatrix joint;
  joint.kind = AffinityKind::joint;
  joint.values = Matrix(n, n, 0.0);
  const double scale = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::max(
          (conditional.values(i, j) + conditional.values(j, i)) * scale, kAffinityFloor);
      joint.values(i, j) = v;
      joint.values(j, i) = v;
    }
  return joint;
}

struct LowDimAffinities {
  AffinityMatrix joint;
  Matrix numerators;      // w_ij = (1 + ||y_i - y_j||^2)^-1, zero diagonal
  double numerator_sum = 0.0;
};

/// Student-t (1 degree of freedom) affinities over the embedding.
inline LowDimAffinities low_dim_affinities(const Matrix& coords) {
  const std::size_t n = coords.rows();
  if (n < 2) throw invalid_argument("low_dim_affinities: need at least 2 points");
  LowDimAffinities out;
  out.numerators = Matrix(n, n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = 1.0 / (1.0 + squared_distance(coords.row(i), coords.row(j)));
      out.numerators(i, j) = w;
      out.numerators(j, i) = w;
      total += 2.0 * w;
    }
  out.numerator_sum = total;
  out.joint.kind = AffinityKind::joint;
  out.joint.values = Matrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) out.joint.values(i, j) = out.numerators(i, j) / total;
  return out;
}

/// KL(P || Q) over off-diagonal entries, both floored at 1e-12.
inline double kl_divergence(const AffinityMatrix& p, const AffinityMatrix& q) {
  if (p.kind != AffinityKind::joint || q.kind != AffinityKind::joint)
    throw invalid_argument("kl_divergence: both affinity matrices must be joint");
  const std::size_t n = p.values.rows();
  if (q.values.rows() != n)
    throw invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double pv = std::max(p.values(i, j), kAffinityFloor);
      const double qv = std::max(q.values(i, j), kAffinityFloor);
      kl += pv * std::log(pv / qv);
    }
  return kl;
}

/// KL gradient given precomputed low-dimensional affinities:
/// grad_i = 4 sum_j (p_ij - q_ij) w_ij (y_i - y_j).
inline Matrix kl_gradient_from(const AffinityMatrix& p, const Matrix& coords,
                               const LowDimAffinities& low) {
  if (p.kind != AffinityKind::joint)
    throw invalid_argument("kl_gradient: P must be joint");
  const std::size_t n = coords.rows();
  const std::size_t dims = coords.cols();
  Matrix grad(n, dims, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto yi = coords.row(i);
    auto gi = grad.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double mult =
          4.0 * (p.values(i, j) - low.joint.values(i, j)) * low.numerators(i, j);
      const auto yj = coords.row(j);
      for (std::size_t c = 0; c < dims; ++c) gi[c] += mult * (yi[c] - yj[c]);
    }
  }
  return grad;
}

/// Analytic KL gradient with respect to the embedding coordinates.
inline Matrix kl_gradient(const AffinityMatrix& p, const Matrix& coords) {
  return kl_gradient_from(p, coords, low_dim_affinities(coords));
}

namespace detail {

/// KL against P computed from precomputed student-t numerators; entries at
/// the floor contribute nothing measurable and are skipped.
inline double kl_from_numerators(const AffinityMatrix& p, const Matrix& numerators,
                                 double numerator_sum) {
  const std::size_t n = p.values.rows();
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double pv = p.values(i, j);
      if (pv <= kAffinityFloor) continue;
      const double qv = std::max(numerators(i, j) / numerator_sum, kAffinityFloor);
      kl += pv * std::log(pv / qv);
    }
  return kl;
}

}  // namespace detail

/// Exact t-SNE: perplexity calibration, symmetrized affinities, then
/// momentum gradient descent with early exaggeration. Deterministic for a
/// given seed. Coordinates are re-centered to zero mean every iteration.
inline Embedding tsne_fit(const FeatureMatrix& x, const TsneConfig& cfg) {
  const std::size_t n = x.n();
  if (n < 4) throw invalid_argument("tsne_fit: need at least 4 observations");
  if (cfg.out_dims != 2 && cfg.out_dims != 3)
    throw invalid_argument("tsne_fit: out_dims must be 2 or 3");
  if (!(cfg.perplexity > 1.0) || !(cfg.perplexity < static_cast<double>(n)))
    throw invalid_argument("tsne_fit: perplexity must lie in (1, n); got " +
                           std::to_string(cfg.perplexity) + " with n=" + std::to_string(n));
  if (!(cfg.learning_rate > 0.0))
    throw invalid_argument("tsne_fit: learning_rate must be positive");
  if (cfg.max_iter < 1) throw invalid_argument("tsne_fit: max_iter must be >= 1");

  Matrix sq_dists = pairwise_sq_dists(x);

  // Exact duplicates make the bandwidth search ill-posed; jitter them.
  bool has_duplicates = false;
  for (std::size_t i = 0; i < n && !has_duplicates; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (sq_dists(i, j) == 0.0) {
        has_duplicates = true;
        break;
      }
  if (has_duplicates) {
    FeatureMatrix data = x;
    std::mt19937_64 jitter_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> noise(0.0, 1e-10);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (sq_dists(i, j) == 0.0)
          for (double& v : data.values.row(j)) v += noise(jitter_rng);
    sq_dists = pairwise_sq_dists(data);
  }

  const auto calibration = calibrate_sigmas(sq_dists, cfg.perplexity);
  const AffinityMatrix p_true = symmetrize(calibration.conditional);
  AffinityMatrix p_working = p_true;
  const bool exaggerating = cfg.early_exaggeration_iters > 0 &&
                            cfg.early_exaggeration_factor != 1.0;
  if (exaggerating)
    for (double& v : p_working.values.data()) v *= cfg.early_exaggeration_factor;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 1e-4);
  Matrix coords(n, cfg.out_dims);
  for (double& v : coords.data()) v = init(rng);
  Matrix velocity(n, cfg.out_dims, 0.0);

  Embedding embedding;
  embedding.kl_history.reserve(cfg.max_iter);

  for (std::size_t iter = 0; iter < cfg.max_iter; ++iter) {
    const auto low = low_dim_affinities(coords);
    const AffinityMatrix& p_now =
        (exaggerating && iter < cfg.early_exaggeration_iters) ? p_working : p_true;

    const double momentum =
        iter < cfg.momentum_switch_iter ? cfg.momentum_initial : cfg.momentum_final;
    const Matrix grad = kl_gradient_from(p_now, coords, low);
    for (std::size_t i = 0; i < n; ++i) {
      auto vi = velocity.row(i);
      auto yi = coords.row(i);
      for (std::size_t c = 0; c < cfg.out_dims; ++c) {
        vi[c] = momentum * vi[c] - cfg.learning_rate * grad(i, c);
        yi[c] += vi[c];
      }
    }
    for (std::size_t c = 0; c < cfg.out_dims; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += coords(i, c);
      mean /= static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) coords(i, c) -= mean;
    }
    if (!coords.all_finite())
      throw numeric_error("tsne_fit: non-finite coordinates at iteration " +
                          std::to_string(iter));

    embedding.kl_history.push_back(
        detail::kl_from_numerators(p_true, low.numerators, low.numerator_sum));
  }

  // KL recorded per iteration uses the pre-update Q; refresh for the final Y.
  const auto low_final = low_dim_affinities(coords);
  embedding.final_kl =
      detail::kl_from_numerators(p_true, low_final.numerators, low_final.numerator_sum);
  if (!embedding.kl_history.empty()) embedding.kl_history.back() = embedding.final_kl;
  embedding.coords = std::move(coords);
  embedding.iterations_run = cfg.max_iter;
  return embedding;
}

}  // namespace faultmap

// Shared test utilities: seeded generators and small oracles.
#pragma once

#include <random>
#include <vector>

#include "faultmap/core.hpp"

namespace test_helpers {

inline faultmap::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                      double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  faultmap::Matrix m(rows, cols);
  for (auto& v : m.data()) v = nd(rng);
  return m;
}

inline faultmap::Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  faultmap::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = nd(rng);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

/// Isotropic Gaussian blobs around the given centers, labels by center.
struct Blobs {
  faultmap::Matrix points;
  std::vector<std::size_t> labels;
};

inline Blobs make_blobs(const faultmap::Matrix& centers, std::size_t per_blob,
                        double spread, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, spread);
  Blobs blobs;
  blobs.points = faultmap::Matrix(centers.rows() * per_blob, centers.cols());
  for (std::size_t c = 0; c < centers.rows(); ++c)
    for (std::size_t i = 0; i < per_blob; ++i) {
      const std::size_t r = c * per_blob + i;
      for (std::size_t j = 0; j < centers.cols(); ++j)
        blobs.points(r, j) = centers(c, j) + nd(rng);
      blobs.labels.push_back(c);
    }
  return blobs;
}

/// Fraction of points whose nearest per-label centroid has their own label.
inline double nearest_centroid_purity(const faultmap::Matrix& coords,
                                      const std::vector<std::size_t>& labels) {
  std::size_t k = 0;
  for (std::size_t l : labels) k = std::max(k, l + 1);
  faultmap::Matrix centroids(k, coords.cols(), 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    for (std::size_t j = 0; j < coords.cols(); ++j)
      centroids(labels[i], j) += coords(i, j);
    ++counts[labels[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < coords.cols(); ++j)
      centroids(c, j) /= static_cast<double>(counts[c]);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    std::size_t best = 0;
    double best_d = faultmap::squared_distance(coords.row(i), centroids.row(0));
    for (std::size_t c = 1; c < k; ++c) {
      const double d = faultmap::squared_distance(coords.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(coords.rows());
}

}  // namespace test_helpers

#include <catch2/catch.hpp>

#include "faultmap/numerics.hpp"
#include "helpers.hpp"

using namespace faultmap;
using test_helpers::random_matrix;
using test_helpers::random_symmetric;

TEST_CASE("pairwise squared distances: 3-4-5 triangle", "[numerics]") {
  Matrix m(2, 2);
  m(0, 0) = 0.0;
  m(0, 1) = 0.0;
  m(1, 0) = 3.0;
  m(1, 1) = 4.0;
  const Matrix d = pairwise_sq_dists(FeatureMatrix(m));
  CHECK(d(0, 0) == 0.0);
  CHECK(d(1, 1) == 0.0);
  CHECK(d(0, 1) == Approx(25.0));
  CHECK(d(1, 0) == Approx(25.0));
}

TEST_CASE("pairwise squared distances: single point", "[numerics]") {
  Matrix m(1, 3, 2.5);
  const Matrix d = pairwise_sq_dists(FeatureMatrix(m));
  REQUIRE(d.rows() == 1);
  CHECK(d(0, 0) == 0.0);
}

TEST_CASE("pairwise squared distances match the per-pair loop oracle", "[numerics]") {
  const Matrix m = random_matrix(5, 4, 101);
  const FeatureMatrix x(m);
  const Matrix d = pairwise_sq_dists(x);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double expected = 0.0;
      for (std::size_t c = 0; c < 4; ++c) {
        const double diff = m(i, c) - m(j, c);
        expected += diff * diff;
      }
      CHECK(d(i, j) == Approx(expected).margin(1e-10));
      CHECK(d(i, j) == d(j, i));
      CHECK(d(i, j) >= 0.0);
    }
}

TEST_CASE("pairwise squared distances agree with the norm identity", "[numerics]") {
  const Matrix m = random_matrix(12, 6, 77, 3.0);
  const Matrix d = pairwise_sq_dists(FeatureMatrix(m));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.rows(); ++j) {
      double ni = 0.0, nj = 0.0, dot = 0.0;
      for (std::size_t c = 0; c < m.cols(); ++c) {
        ni += m(i, c) * m(i, c);
        nj += m(j, c) * m(j, c);
        dot += m(i, c) * m(j, c);
      }
      const double identity = ni + nj - 2.0 * dot;
      CHECK(d(i, j) == Approx(std::max(0.0, identity)).epsilon(1e-8).margin(1e-8));
    }
}

TEST_CASE("sym_eigen on a diagonal matrix", "[numerics]") {
  Matrix a(2, 2, 0.0);
  a(0, 0) = 2.0;
  a(1, 1) = 1.0;
  const EigenResult eig = sym_eigen(a, 2);
  REQUIRE(eig.values.size() == 2);
  CHECK(eig.values[0] == Approx(2.0));
  CHECK(eig.values[1] == Approx(1.0));
  CHECK(std::abs(eig.vectors(0, 0)) == Approx(1.0));
  CHECK(std::abs(eig.vectors(1, 0)) == Approx(0.0).margin(1e-12));
  CHECK(std::abs(eig.vectors(1, 1)) == Approx(1.0));
  // Sign convention: dominant entry positive.
  CHECK(eig.vectors(0, 0) > 0.0);
  CHECK(eig.vectors(1, 1) > 0.0);
}

TEST_CASE("sym_eigen on the exchange matrix", "[numerics]") {
  Matrix a(2, 2, 0.0);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  const EigenResult eig = sym_eigen(a, 2);
  CHECK(eig.values[0] == Approx(1.0));
  CHECK(eig.values[1] == Approx(-1.0));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(eig.vectors(0, 0)) == Approx(inv_sqrt2));
  CHECK(std::abs(eig.vectors(1, 0)) == Approx(inv_sqrt2));
  CHECK(eig.vectors(0, 0) * eig.vectors(1, 0) > 0.0);   // same sign
  CHECK(eig.vectors(0, 1) * eig.vectors(1, 1) < 0.0);   // opposite sign
}

TEST_CASE("sym_eigen reconstructs a random symmetric matrix", "[numerics]") {
  const std::size_t n = 8;
  const Matrix a = random_symmetric(n, 2024);
  const EigenResult eig = sym_eigen(a, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (std::size_t t = 0; t < n; ++t)
        sum += eig.values[t] * eig.vectors(i, t) * eig.vectors(j, t);
      CHECK(sum == Approx(a(i, j)).margin(1e-8));
    }
}

TEST_CASE("sym_eigen posts: order, orthonormality, residuals, trace", "[numerics]") {
  const std::size_t n = 10;
  const Matrix a = random_symmetric(n, 5);
  const EigenResult eig = sym_eigen(a, n);

  double trace = 0.0, value_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += a(i, i);
  for (double v : eig.values) value_sum += v;
  CHECK(value_sum == Approx(trace).epsilon(1e-8));

  for (std::size_t j = 1; j < n; ++j) CHECK(eig.values[j] <= eig.values[j - 1]);

  for (std::size_t j = 0; j < n; ++j) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += eig.vectors(i, j) * eig.vectors(i, j);
    CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-10);
    for (std::size_t j2 = j + 1; j2 < n; ++j2) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += eig.vectors(i, j) * eig.vectors(i, j2);
      CHECK(std::abs(dot) <= 1e-8);
    }
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double av = 0.0;
      for (std::size_t t = 0; t < n; ++t) av += a(i, t) * eig.vectors(t, j);
      const double r = av - eig.values[j] * eig.vectors(i, j);
      residual += r * r;
    }
    CHECK(std::sqrt(residual) <= 1e-6 * std::max(1.0, std::abs(eig.values[j])));
  }
}

TEST_CASE("sym_eigen rejects non-symmetric input and bad k", "[numerics]") {
  Matrix a(2, 2, 0.0);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0 + 1e-6;
  CHECK_THROWS_AS(sym_eigen(a, 1), invalid_argument);
  Matrix ok(2, 2, 1.0);
  CHECK_THROWS_AS(sym_eigen(ok, 0), invalid_argument);
  CHECK_THROWS_AS(sym_eigen(ok, 3), invalid_argument);
}

namespace {

double brute_force_best_2partition_inertia(const Matrix& points) {
  const std::size_t n = points.rows();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<std::vector<std::size_t>> groups(2);
    for (std::size_t i = 0; i < n; ++i) groups[(mask >> i) & 1].push_back(i);
    double inertia = 0.0;
    for (const auto& g : groups) {
      std::vector<double> centroid(points.cols(), 0.0);
      for (std::size_t i : g)
        for (std::size_t j = 0; j < points.cols(); ++j) centroid[j] += points(i, j);
      for (auto& v : centroid) v /= static_cast<double>(g.size());
      for (std::size_t i : g)
        inertia += squared_distance(points.row(i), std::span<const double>(centroid));
    }
    best = std::min(best, inertia);
  }
  return best;
}

}  // namespace

TEST_CASE("kmeans recovers the optimal 2-partition of two pairs", "[numerics]") {
  Matrix points(4, 2);
  points(0, 0) = 0.0;  points(0, 1) = 0.0;
  points(1, 0) = 0.0;  points(1, 1) = 1.0;
  points(2, 0) = 10.0; points(2, 1) = 0.0;
  points(3, 0) = 10.0; points(3, 1) = 1.0;
  const FeatureMatrix x(points);
  const KMeansResult result = kmeans(x, 2, 7);

  CHECK(result.assignments[0] == result.assignments[1]);
  CHECK(result.assignments[2] == result.assignments[3]);
  CHECK(result.assignments[0] != result.assignments[2]);
  CHECK(result.inertia == Approx(brute_force_best_2partition_inertia(points)));

  // Centroids are {(0, 0.5), (10, 0.5)} in some order.
  const std::size_t left = result.assignments[0];
  CHECK(result.centroids(left, 0) == Approx(0.0));
  CHECK(result.centroids(left, 1) == Approx(0.5));
  CHECK(result.centroids(1 - left, 0) == Approx(10.0));
  CHECK(result.centroids(1 - left, 1) == Approx(0.5));
}

TEST_CASE("kmeans degenerate cases", "[numerics]") {
  const Matrix m = random_matrix(6, 3, 11);
  const FeatureMatrix x(m);

  SECTION("k = n gives zero inertia") {
    const KMeansResult result = kmeans(x, 6, 3);
    CHECK(result.inertia == Approx(0.0).margin(1e-20));
  }
  SECTION("k = 1 gives the column means") {
    const KMeansResult result = kmeans(x, 1, 3);
    for (std::size_t j = 0; j < 3; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < 6; ++i) mean += m(i, j);
      mean /= 6.0;
      CHECK(result.centroids(0, j) == Approx(mean));
    }
  }
  SECTION("k > n is rejected") { CHECK_THROWS_AS(kmeans(x, 7, 3), invalid_argument); }
}

TEST_CASE("kmeans repairs empty clusters on duplicate-heavy data", "[numerics]") {
  // Two distinct values, k = 3: one cluster must be seeded on a duplicate
  // and survives via the empty-cluster repair.
  Matrix points(12, 2);
  for (std::size_t i = 0; i < 12; ++i) {
    points(i, 0) = i < 6 ? 0.0 : 5.0;
    points(i, 1) = 0.0;
  }
  const KMeansResult result = kmeans(FeatureMatrix(points), 3, 4);
  std::vector<std::size_t> counts(3, 0);
  for (std::size_t a : result.assignments) ++counts[a];
  for (std::size_t c = 0; c < 3; ++c) CHECK(counts[c] >= 1);
  CHECK(result.inertia == Approx(0.0).margin(1e-20));
}

TEST_CASE("kmeans is deterministic and inertia does not increase", "[numerics]") {
  const Matrix m = random_matrix(40, 3, 99, 2.0);
  const FeatureMatrix x(m);
  const KMeansResult a = kmeans(x, 4, 42);
  const KMeansResult b = kmeans(x, 4, 42);
  CHECK(a.assignments == b.assignments);
  CHECK(a.inertia == b.inertia);

  const KMeansResult first_iter = kmeans(x, 4, 42, 1);
  CHECK(a.inertia <= first_iter.inertia + 1e-12);
}

TEST_CASE("standardize: two-point column", "[numerics]") {
  Matrix m(2, 1);
  m(0, 0) = 1.0;
  m(1, 0) = 3.0;
  const auto [xs, stats] = standardize(FeatureMatrix(m));
  CHECK(xs.values(0, 0) == Approx(-1.0));
  CHECK(xs.values(1, 0) == Approx(1.0));
  CHECK(stats.means[0] == Approx(2.0));
  CHECK(stats.sds[0] == Approx(1.0));
  CHECK(stats.zero_variance[0] == 0);
}

TEST_CASE("standardize: constant column is centered only and flagged", "[numerics]") {
  Matrix m(5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    m(i, 0) = 0.1;  // constant
    m(i, 1) = static_cast<double>(i);
  }
  const auto [xs, stats] = standardize(FeatureMatrix(m));
  CHECK(stats.zero_variance[0] == 1);
  CHECK(stats.zero_variance[1] == 0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(xs.values(i, 0) == 0.0);
}

TEST_CASE("standardize posts and round trips", "[numerics]") {
  const Matrix m = random_matrix(20, 4, 8, 5.0);
  const FeatureMatrix x(m);
  const auto [xs, stats] = standardize(x);

  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 20; ++i) mean += xs.values(i, j);
    mean /= 20.0;
    CHECK(std::abs(mean) <= 1e-10);
    double ss = 0.0;
    for (std::size_t i = 0; i < 20; ++i) ss += xs.values(i, j) * xs.values(i, j);
    CHECK(std::abs(std::sqrt(ss / 20.0) - 1.0) <= 1e-10);
  }

  const FeatureMatrix again = apply_standardization(stats, x);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(again.values(i, j) == Approx(xs.values(i, j)).margin(1e-12));

  const FeatureMatrix back = invert_standardization(stats, xs);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(back.values(i, j) == Approx(m(i, j)).margin(1e-10));
}

TEST_CASE("feature matrix rejects non-finite entries", "[numerics]") {
  Matrix m(2, 2, 1.0);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(FeatureMatrix(m), invalid_argument);
}

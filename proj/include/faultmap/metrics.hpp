// faultmap/metrics.hpp
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

#include <map>
#include <string>

#include "faultmap/core.hpp"

namespace faultmap {

/// Embedded coordinates with a ground-truth group label per point.
struct LabeledEmbedding {
  Matrix coords;                    // n x p
  std::vector<std::string> labels;  // n entries, >= 2 distinct
};

/// Davies-Bouldin index with Euclidean centroid distances and mean (not RMS)
/// within-cluster dispersion. Lower is better. Errors on fewer than two
/// clusters or coincident centroids, where the ratio is undefined.
inline double davies_bouldin(const LabeledEmbedding& e) {
  const std::size_t n = e.coords.rows();
  if (e.labels.size() != n)
    throw invalid_argument("davies_bouldin: one label per coordinate row required");
  if (n == 0) throw invalid_argument("davies_bouldin: empty embedding");

  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[e.labels[i]].push_back(i);
  const std::size_t k = groups.size();
  if (k < 2) throw invalid_argument("davies_bouldin: need at least 2 distinct labels");

  const std::size_t p = e.coords.cols();
  Matrix centroids(k, p, 0.0);
  std::vector<double> scatter(k, 0.0);
  std::size_t c = 0;
  for (const auto& [label, members] : groups) {
    auto centroid = centroids.row(c);
    for (std::size_t i : members) {
      const auto row = e.coords.row(i);
      for (std::size_t j = 0; j < p; ++j) centroid[j] += row[j];
    }
    for (std::size_t j = 0; j < p; ++j) centroid[j] /= static_cast<double>(members.size());
    for (std::size_t i : members)
      scatter[c] += std::sqrt(squared_distance(e.coords.row(i), centroid));
    scatter[c] /= static_cast<double>(members.size());
    ++c;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      const double m = std::sqrt(squared_distance(centroids.row(i), centroids.row(j)));
      if (m == 0.0)
        throw numeric_error("davies_bouldin: coincident centroids make the ratio undefined");
      worst = std::max(worst, (scatter[i] + scatter[j]) / m);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

}  // namespace faultmap

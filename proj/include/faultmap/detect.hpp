// faultmap/detect.hpp
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
#include <ostream>

#include <nlohmann/json.hpp>

#include "faultmap/core.hpp"
#include "faultmap/numerics.hpp"

namespace faultmap {

enum class BaselineSource { labels_given, kmeans_discovered };

/// Normal-operation geometry in embedding space: per-cluster centroids and a
/// calibration scale (the 95th-percentile member distance). A point at score
/// 1.0 sits on its nearest cluster's calibration shell.
struct BaselineModel {
  Matrix centroids;            // k x p
  std::vector<double> scales;  // k, strictly positive
  BaselineSource source = BaselineSource::labels_given;
  double threshold = 1.0;

  std::size_t cluster_count() const { return scales.size(); }
  std::size_t dims() const { return centroids.cols(); }
};

/// Per-point drift: normalized distance to the nearest normal cluster, which
/// cluster that was, and whether the score exceeds the alarm threshold.
struct DriftReport {
  std::vector<double> scores;
  std::vector<std::size_t> nearest_cluster;
  std::vector<bool> alarms;
};

inline constexpr std::size_t kMinClusterMembers = 5;
inline constexpr double kScalePercentile = 0.95;

namespace detail {

/// Linear-interpolation percentile of a sorted sample.
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline BaselineModel baseline_from_groups(const Matrix& coords,
                                          const std::vector<std::vector<std::size_t>>& groups,
                                          BaselineSource source, double threshold) {
  const std::size_t p = coords.cols();
  BaselineModel model;
  model.source = source;
  model.threshold = threshold;
  model.centroids = Matrix(groups.size(), p, 0.0);
  model.scales.resize(groups.size());
  for (std::size_t c = 0; c < groups.size(); ++c) {
    const auto& members = groups[c];
    if (members.size() < kMinClusterMembers)
      throw invalid_argument("fit_baseline: cluster " + std::to_string(c) + " has only " +
                             std::to_string(members.size()) + " members; need at least " +
                             std::to_string(kMinClusterMembers));
    auto centroid = model.centroids.row(c);
    for (std::size_t i : members) {
      const auto row = coords.row(i);
      for (std::size_t j = 0; j < p; ++j) centroid[j] += row[j];
    }
    for (std::size_t j = 0; j < p; ++j) centroid[j] /= static_cast<double>(members.size());
    std::vector<double> dists;
    dists.reserve(members.size());
    for (std::size_t i : members)
      dists.push_back(std::sqrt(squared_distance(coords.row(i), centroid)));
    std::sort(dists.begin(), dists.end());
    const double scale = percentile_sorted(dists, kScalePercentile);
    if (!(scale > 0.0))
      throw numeric_error("fit_baseline: cluster " + std::to_string(c) +
                          " has zero calibration scale (degenerate members)");
    model.scales[c] = scale;
  }
  return model;
}

}  // namespace detail

/// Baseline from ground-truth cluster labels (any integer ids).
inline BaselineModel fit_baseline(const Matrix& normal_coords,
                                  std::span<const std::size_t> labels, double threshold = 1.0) {
  if (labels.size() != normal_coords.rows())
    throw invalid_argument("fit_baseline: one label per row required");
  if (!(threshold > 0.0)) throw invalid_argument("fit_baseline: threshold must be positive");
  std::size_t k = 0;
  for (std::size_t l : labels) k = std::max(k, l + 1);
  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  for (std::size_t c = 0; c < k; ++c)
    if (groups[c].empty())
      throw invalid_argument("fit_baseline: label " + std::to_string(c) + " has no members");
  return detail::baseline_from_groups(normal_coords, groups, BaselineSource::labels_given,
                                      threshold);
}

/// Baseline with clusters discovered by seeded k-means.
inline BaselineModel fit_baseline(const Matrix& normal_coords, std::size_t k, std::uint64_t seed,
                                  double threshold = 1.0) {
  if (!(threshold > 0.0)) throw invalid_argument("fit_baseline: threshold must be positive");
  const KMeansResult clusters = kmeans(FeatureMatrix(normal_coords), k, seed);
  std::vector<std::vector<std::size_t>> groups(k);
  for (std::size_t i = 0; i < clusters.assignments.size(); ++i)
    groups[clusters.assignments[i]].push_back(i);
  return detail::baseline_from_groups(normal_coords, groups, BaselineSource::kmeans_discovered,
                                      threshold);
}

/// Score = min over clusters of distance-to-centroid divided by that
/// cluster's scale. Alarm on strict score > threshold.
inline DriftReport drift_score(const BaselineModel& model, const Matrix& coords) {
  if (coords.cols() != model.dims())
    throw invalid_argument("drift_score: coordinate dimension " + std::to_string(coords.cols()) +
                           " does not match the baseline's " + std::to_string(model.dims()));
  DriftReport report;
  const std::size_t n = coords.rows();
  report.scores.resize(n);
  report.nearest_cluster.resize(n);
  report.alarms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = coords.row(i);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < model.cluster_count(); ++c) {
      const double s =
          std::sqrt(squared_distance(row, model.centroids.row(c))) / model.scales[c];
      if (s < best) {
        best = s;
        best_c = c;
      }
    }
    report.scores[i] = best;
    report.nearest_cluster[i] = best_c;
    report.alarms[i] = best > model.threshold;
  }
  return report;
}

// --------------------------------------------------------------------------
// Persistence: baseline/v1 JSON and the drift-report CSV.

inline nlohmann::json baseline_to_json(const BaselineModel& model) {
  nlohmann::json centroids = nlohmann::json::array();
  for (std::size_t i = 0; i < model.centroids.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < model.centroids.cols(); ++j)
      row.push_back(model.centroids(i, j));
    centroids.push_back(std::move(row));
  }
  return nlohmann::json{
      {"schema", "baseline/v1"},
      {"centroids", std::move(centroids)},
      {"scales", model.scales},
      {"source",
       model.source == BaselineSource::labels_given ? "labels-given" : "kmeans-discovered"},
      {"threshold", model.threshold}};
}

inline BaselineModel baseline_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "baseline/v1")
    throw io_error("baseline file: unsupported schema '" + j.value("schema", "<missing>") + "'");
  BaselineModel model;
  const auto& rows = j.at("centroids");
  if (!rows.is_array() || rows.empty()) throw io_error("baseline file: centroids missing");
  model.centroids = Matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != model.centroids.cols())
      throw io_error("baseline file: ragged centroid rows");
    for (std::size_t c = 0; c < model.centroids.cols(); ++c)
      model.centroids(i, c) = rows[i][c].get<double>();
  }
  model.scales = j.at("scales").get<std::vector<double>>();
  if (model.scales.size() != model.centroids.rows())
    throw io_error("baseline file: scale count does not match centroid count");
  const std::string source = j.at("source").get<std::string>();
  model.source = source == "kmeans-discovered" ? BaselineSource::kmeans_discovered
                                               : BaselineSource::labels_given;
  model.threshold = j.at("threshold").get<double>();
  for (double s : model.scales)
    if (!(s > 0.0)) throw io_error("baseline file: non-positive scale");
  return model;
}

inline void save_baseline(const BaselineModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << baseline_to_json(model).dump(2) << "\n";
  if (!out) throw io_error("failed writing baseline to '" + path + "'");
}

inline BaselineModel load_baseline(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open baseline file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error("baseline file '" + path + "': " + e.what());
  }
  return baseline_from_json(j);
}

/// CSV layout: index,score,nearest_cluster,alarm.
inline void write_drift_csv(const DriftReport& report, std::ostream& out) {
  out << "index,score,nearest_cluster,alarm\n";
  for (std::size_t i = 0; i < report.scores.size(); ++i)
    out << i << ',' << format_double(report.scores[i]) << ',' << report.nearest_cluster[i]
        << ',' << (report.alarms[i] ? 1 : 0) << '\n';
}

}  // namespace faultmap

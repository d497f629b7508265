#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "seer/stream.hpp"

namespace seer {

enum class ClusterMethod { dbscan, kmeans };

/// Assignment of points to strata. Cluster ids are dense in [0, n_clusters).
struct Clustering {
  static constexpr int noise = -1;

  std::vector<int> assignments;
  std::size_t n_clusters = 0;
  ClusterMethod method = ClusterMethod::dbscan;

  std::size_t noise_count() const noexcept;
  std::vector<std::vector<std::size_t>> members() const;
};

/// DBSCAN radius picked at the knee of the sorted nearest-neighbor distance curve.
struct EpsilonEstimate {
  double epsilon = 0.0;
  std::vector<double> curve;  // ascending nearest-neighbor distances
  std::size_t knee_index = 0;
};

/// Euclidean nearest-neighbor distance of every point, sorted ascending; the knee is
/// the curve point farthest from the chord joining its endpoints (first one on ties).
/// Needs at least two points; throws InvalidArgument otherwise or when every point
/// coincides.
EpsilonEstimate estimate_epsilon(const FeatureMatrix& points);

/// Classic DBSCAN. A point is core when at least `min_pts` points, itself included,
/// lie within `epsilon` (inclusive). Clusters are numbered in visiting order and a
/// border point joins the first cluster that reaches it.
Clustering dbscan(const FeatureMatrix& points, double epsilon, std::size_t min_pts);

struct KMeansResult {
  Clustering clustering;
  std::vector<std::vector<double>> centroids;
  std::vector<double> objective_trace;  // within-cluster SSE after each assignment
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd iterations from k seeded distinct starting points until the assignment
/// stops changing or `max_iterations` is reached. An emptied cluster is re-seeded at
/// the point farthest from its assigned centroid.
KMeansResult kmeans(const FeatureMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations = 300);

struct ClusterConfig {
  std::size_t window_size = 1000;  // w
  std::size_t min_fill = 0;        // 0 = w / 2
  std::uint64_t seed = 0;
};

/// DBSCAN with min_pts = max(1, w/100); falls back to k-means with k = max(2, w/100)
/// when DBSCAN finds fewer than two clusters, more than w/10, or mostly noise.
/// Returns nullopt (nothing to sample) while the window holds fewer points than
/// the configured minimum.
std::optional<Clustering> cluster_window(const FeatureMatrix& window, const EpsilonEstimate& eps,
                                         const ClusterConfig& cfg);

/// Uniformly draws min(per_stratum, |stratum|) members from every cluster. Returns
/// point positions ordered by cluster id, ascending within a cluster.
std::vector<std::size_t> stratified_sample(const Clustering& clustering, std::size_t per_stratum,
                                           std::uint64_t seed);

// Overloads over the pipeline's window type.
Clustering dbscan(const SlidingWindow& window, double epsilon, std::size_t min_pts);
KMeansResult kmeans(const SlidingWindow& window, std::size_t k, std::uint64_t seed);
std::vector<DataPoint> stratified_sample(const Clustering& clustering, const SlidingWindow& window,
                                         std::size_t per_stratum, std::uint64_t seed);

}  // namespace seer

#include "seer/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>

namespace seer {

std::size_t Clustering::noise_count() const noexcept {
  return static_cast<std::size_t>(std::count(assignments.begin(), assignments.end(), noise));
}

std::vector<std::vector<std::size_t>> Clustering::members() const {
  std::vector<std::vector<std::size_t>> out(n_clusters);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != noise) out[static_cast<std::size_t>(assignments[i])].push_back(i);
  }
  return out;
}

EpsilonEstimate estimate_epsilon(const FeatureMatrix& points) {
  const std::size_t n = points.rows();
  if (n < 2) throw InvalidArgument("epsilon estimation needs at least two points");

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(points.row(i), points.row(j));
      nearest[i] = std::min(nearest[i], d);
      nearest[j] = std::min(nearest[j], d);
    }
  }
  for (auto& d : nearest) d = std::sqrt(d);
  std::sort(nearest.begin(), nearest.end());

  // Distance to the chord is proportional to |cross|; the chord length is common to
  // all candidates, so it never changes the argmax.
  const double x_span = static_cast<double>(n - 1);
  const double y_span = nearest.back() - nearest.front();
  std::size_t knee = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cross = std::abs(x_span * (nearest[i] - nearest.front()) -
                                  y_span * static_cast<double>(i));
    if (cross > best) {
      best = cross;
      knee = i;
    }
  }

  EpsilonEstimate est;
  est.knee_index = knee;
  est.epsilon = nearest[knee];
  if (est.epsilon <= 0.0) {
    // Duplicates put zeros at the front of the curve; take the first positive value.
    auto positive = std::upper_bound(nearest.begin(), nearest.end(), 0.0);
    if (positive == nearest.end()) throw InvalidArgument("all points coincide; epsilon undefined");
    est.knee_index = static_cast<std::size_t>(positive - nearest.begin());
    est.epsilon = *positive;
  }
  est.curve = std::move(nearest);
  return est;
}

Clustering dbscan(const FeatureMatrix& points, double epsilon, std::size_t min_pts) {
  if (!(epsilon > 0.0)) throw InvalidArgument("dbscan epsilon must be positive");
  if (min_pts == 0) throw InvalidArgument("dbscan min_pts must be at least 1");

  constexpr int unvisited = -2;
  const std::size_t n = points.rows();
  const double eps2 = epsilon * epsilon;

  auto region = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j) {
      if (squared_distance(points.row(i), points.row(j)) <= eps2) out.push_back(j);
    }
    return out;
  };

  Clustering result;
  result.method = ClusterMethod::dbscan;
  result.assignments.assign(n, unvisited);
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.assignments[i] != unvisited) continue;
    auto neighbors = region(i);
    if (neighbors.size() < min_pts) {
      result.assignments[i] = Clustering::noise;
      continue;
    }
    result.assignments[i] = cluster;
    std::deque<std::size_t> frontier(neighbors.begin(), neighbors.end());
    while (!frontier.empty()) {
      const std::size_t j = frontier.front();
      frontier.pop_front();
      if (result.assignments[j] == Clustering::noise) {
        result.assignments[j] = cluster;  // border point
        continue;
      }
      if (result.assignments[j] != unvisited) continue;
      result.assignments[j] = cluster;
      auto next = region(j);
      if (next.size() >= min_pts) frontier.insert(frontier.end(), next.begin(), next.end());
    }
    ++cluster;
  }
  result.n_clusters = static_cast<std::size_t>(cluster);
  return result;
}

namespace {

struct Assignment {
  std::vector<int> labels;
  double objective = 0.0;
};

Assignment assign_nearest(const FeatureMatrix& points,
                          const std::vector<std::vector<double>>& centroids) {
  Assignment a;
  a.labels.resize(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points.row(i), centroids[c]);
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    a.labels[i] = arg;
    a.objective += best;
  }
  return a;
}

void recompute_means(const FeatureMatrix& points, const std::vector<int>& labels,
                     std::vector<std::vector<double>>& centroids, std::vector<std::size_t>& sizes) {
  const std::size_t k = centroids.size();
  std::vector<std::vector<double>> sums(k, std::vector<double>(points.cols(), 0.0));
  sizes.assign(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++sizes[c];
    const auto row = points.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) sums[c][d] += row[d];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) continue;
    for (std::size_t d = 0; d < points.cols(); ++d) {
      centroids[c][d] = sums[c][d] / static_cast<double>(sizes[c]);
    }
  }
}

}  // namespace

KMeansResult kmeans(const FeatureMatrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iterations) {
  const std::size_t n = points.rows();
  if (k == 0) throw InvalidArgument("k-means needs k >= 1");
  if (k > n) {
    throw InvalidArgument("k-means with k = " + std::to_string(k) + " exceeds " +
                          std::to_string(n) + " points");
  }

  // Seeded distinct starting points; duplicates only when the data has fewer than k
  // distinct values.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> leftovers;
  for (std::size_t idx : order) {
    if (centroids.size() == k) break;
    const auto row = points.row(idx);
    const bool seen = std::any_of(centroids.begin(), centroids.end(), [&](const auto& c) {
      return squared_distance(row, c) == 0.0;
    });
    if (seen) {
      leftovers.push_back(idx);
    } else {
      centroids.emplace_back(row.begin(), row.end());
    }
  }
  for (std::size_t i = 0; centroids.size() < k; ++i) {
    const auto row = points.row(leftovers[i]);
    centroids.emplace_back(row.begin(), row.end());
  }

  KMeansResult result;
  auto current = assign_nearest(points, centroids);
  result.objective_trace.push_back(current.objective);

  std::vector<std::size_t> sizes;
  while (result.iterations < max_iterations) {
    ++result.iterations;
    recompute_means(points, current.labels, centroids, sizes);

    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      double far = -1.0;
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        const auto owner = static_cast<std::size_t>(current.labels[i]);
        if (sizes[owner] < 2) continue;
        const double d = squared_distance(points.row(i), centroids[owner]);
        if (d > far) {
          far = d;
          pick = i;
        }
      }
      if (pick == n || far == 0.0) continue;  // nothing left to split off
      const auto row = points.row(pick);
      centroids[c].assign(row.begin(), row.end());
      --sizes[static_cast<std::size_t>(current.labels[pick])];
      current.labels[pick] = static_cast<int>(c);
      sizes[c] = 1;
      recompute_means(points, current.labels, centroids, sizes);
    }

    auto next = assign_nearest(points, centroids);
    result.objective_trace.push_back(next.objective);
    const bool changed = next.labels != current.labels;
    current = std::move(next);
    if (!changed) {
      result.converged = true;
      break;
    }
  }

  // Compact ids in case some clusters ended empty.
  std::vector<int> remap(k, -1);
  int dense = 0;
  for (int& label : current.labels) {
    auto& slot = remap[static_cast<std::size_t>(label)];
    if (slot < 0) slot = dense++;
    label = slot;
  }
  std::vector<std::vector<double>> kept(static_cast<std::size_t>(dense));
  for (std::size_t c = 0; c < k; ++c) {
    if (remap[c] >= 0) kept[static_cast<std::size_t>(remap[c])] = std::move(centroids[c]);
  }

  result.clustering.assignments = std::move(current.labels);
  result.clustering.n_clusters = static_cast<std::size_t>(dense);
  result.clustering.method = ClusterMethod::kmeans;
  result.centroids = std::move(kept);
  return result;
}

std::optional<Clustering> cluster_window(const FeatureMatrix& window, const EpsilonEstimate& eps,
                                         const ClusterConfig& cfg) {
  const std::size_t w = cfg.window_size;
  const std::size_t min_fill = cfg.min_fill != 0 ? cfg.min_fill : std::max<std::size_t>(1, w / 2);
  if (window.rows() < min_fill || window.rows() == 0) return std::nullopt;

  const std::size_t min_pts = std::max<std::size_t>(1, w / 100);
  auto clusters = dbscan(window, eps.epsilon, min_pts);

  const double n = static_cast<double>(window.rows());
  const bool too_few = clusters.n_clusters < 2;
  const bool too_many = static_cast<double>(clusters.n_clusters) > static_cast<double>(w) / 10.0;
  const bool mostly_noise = static_cast<double>(clusters.noise_count()) > 0.5 * n;
  if (!too_few && !too_many && !mostly_noise) return clusters;

  const std::size_t k = std::min(std::max<std::size_t>(2, w / 100), window.rows());
  return kmeans(window, k, cfg.seed).clustering;
}

std::vector<std::size_t> stratified_sample(const Clustering& clustering, std::size_t per_stratum,
                                           std::uint64_t seed) {
  if (per_stratum == 0) throw InvalidArgument("per_stratum must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  for (auto& stratum : clustering.members()) {
    std::vector<std::size_t> picked;
    std::sample(stratum.begin(), stratum.end(), std::back_inserter(picked), per_stratum, rng);
    out.insert(out.end(), picked.begin(), picked.end());
  }
  return out;
}

Clustering dbscan(const SlidingWindow& window, double epsilon, std::size_t min_pts) {
  return dbscan(FeatureMatrix::from_points(window.points()), epsilon, min_pts);
}

KMeansResult kmeans(const SlidingWindow& window, std::size_t k, std::uint64_t seed) {
  return kmeans(FeatureMatrix::from_points(window.points()), k, seed);
}

std::vector<DataPoint> stratified_sample(const Clustering& clustering, const SlidingWindow& window,
                                         std::size_t per_stratum, std::uint64_t seed) {
  if (clustering.assignments.size() != window.size()) {
    throw ShapeError("clustering does not cover the window");
  }
  std::vector<DataPoint> out;
  for (std::size_t i : stratified_sample(clustering, per_stratum, seed)) out.push_back(window[i]);
  return out;
}

}  // namespace seer

#include "seer/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace seer {

namespace {

struct Edge {
  std::size_t to;
  double weight;
};

using Graph = std::vector<std::vector<Edge>>;

Graph build_graph(const FeatureMatrix& x, const SpreadConfig& cfg) {
  const std::size_t n = x.rows();
  Graph graph(n);
  if (n < 2) return graph;

  std::vector<std::vector<double>> dist2(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist2[i][j] = dist2[j][i] = squared_distance(x.row(i), x.row(j));
    }
  }

  const std::size_t k = std::min(cfg.k, n - 1);
  std::vector<std::vector<std::size_t>> knn(n);
  double sigma_sum = 0.0;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), 0);
    std::swap(order[i], order.back());
    auto by_distance = [&](std::size_t a, std::size_t b) {
      return dist2[i][a] < dist2[i][b] || (dist2[i][a] == dist2[i][b] && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end() - 1, by_distance);
    knn[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t j : knn[i]) sigma_sum += std::sqrt(dist2[i][j]);
  }
  const double sigma = sigma_sum / static_cast<double>(n * k);
  auto weight = [&](std::size_t i, std::size_t j) {
    return sigma > 0.0 ? std::exp(-dist2[i][j] / (sigma * sigma)) : 1.0;
  };

  if (cfg.graph == GraphKind::complete) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) graph[i].push_back({j, weight(i, j)});
      }
    }
    return graph;
  }

  std::vector<std::vector<std::size_t>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : knn[i]) {
      adjacency[i].push_back(j);
      adjacency[j].push_back(i);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& adj = adjacency[i];
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    for (std::size_t j : adj) graph[i].push_back({j, weight(i, j)});
  }
  return graph;
}

std::vector<double> normalized(std::span<const double> row) {
  const double sum = std::accumulate(row.begin(), row.end(), 0.0);
  std::vector<double> out(row.begin(), row.end());
  if (sum > 0.0) {
    for (auto& v : out) v /= sum;
  }
  return out;
}

// Spreads over `all`, whose first labels.size() rows are the seeds. Returns a
// label and distribution for every node.
SpreadResult spread_all(const FeatureMatrix& all, std::span<const ClassId> labels,
                        const SpreadConfig& cfg) {
  if (cfg.k == 0) throw InvalidArgument("spreading graph needs k >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InvalidArgument("spreading alpha must lie in (0, 1)");

  const std::size_t n_labeled = labels.size();
  const std::size_t n = all.rows();
  ClassId max_label = 0;
  for (ClassId y : labels) {
    if (y < 0) throw InvalidArgument("class ids must be non-negative");
    max_label = std::max(max_label, y);
  }
  const auto n_classes = static_cast<std::size_t>(max_label) + 1;

  const Graph graph = build_graph(all, cfg);

  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (const auto& e : graph[i]) d += e.weight;
    inv_sqrt_degree[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }

  // Row-major n x n_classes matrices.
  std::vector<double> seeds(n * n_classes, 0.0);
  for (std::size_t i = 0; i < n_labeled; ++i) {
    seeds[i * n_classes + static_cast<std::size_t>(labels[i])] = 1.0;
  }
  std::vector<double> f = seeds;
  std::vector<double> next(n * n_classes);

  SpreadResult result;
  while (result.iterations < cfg.max_iterations) {
    ++result.iterations;
    for (std::size_t i = 0; i < n; ++i) {
      double* out = next.data() + i * n_classes;
      for (std::size_t c = 0; c < n_classes; ++c) out[c] = (1.0 - cfg.alpha) * seeds[i * n_classes + c];
      for (const auto& e : graph[i]) {
        const double s = cfg.alpha * e.weight * inv_sqrt_degree[i] * inv_sqrt_degree[e.to];
        const double* in = f.data() + e.to * n_classes;
        for (std::size_t c = 0; c < n_classes; ++c) out[c] += s * in[c];
      }
    }
    // Far nodes carry tiny absolute mass, so convergence is judged on each row's
    // label distribution rather than on raw values.
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto before = normalized({f.data() + i * n_classes, n_classes});
      const auto after = normalized({next.data() + i * n_classes, n_classes});
      for (std::size_t c = 0; c < n_classes; ++c) change = std::max(change, std::abs(after[c] - before[c]));
    }
    f.swap(next);
    if (change < cfg.tolerance) {
      result.converged = true;
      break;
    }
  }

  result.labels.reserve(n);
  result.confidence.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = normalized({f.data() + i * n_classes, n_classes});
    if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(n_classes));
    }
    ClassId best = 0;
    for (std::size_t c = 1; c < n_classes; ++c) {
      if (row[c] > row[static_cast<std::size_t>(best)]) best = static_cast<ClassId>(c);
    }
    result.labels.push_back(best);
    result.confidence.push_back(std::move(row));
  }
  return result;
}

}  // namespace

SpreadResult spread_labels(const FeatureMatrix& labeled, std::span<const ClassId> labels,
                           const FeatureMatrix& unlabeled, const SpreadConfig& cfg) {
  if (labeled.rows() == 0) throw InvalidArgument("label spreading needs at least one labeled point");
  if (labels.size() != labeled.rows()) throw ShapeError("one label per labeled point required");
  if (unlabeled.rows() != 0 && unlabeled.cols() != labeled.cols()) {
    throw ShapeError("labeled and unlabeled points differ in dimensionality");
  }
  FeatureMatrix all = labeled;
  for (std::size_t i = 0; i < unlabeled.rows(); ++i) all.append(unlabeled.row(i));
  auto spread = spread_all(all, labels, cfg);
  spread.labels.erase(spread.labels.begin(), spread.labels.begin() + static_cast<std::ptrdiff_t>(labeled.rows()));
  spread.confidence.erase(spread.confidence.begin(),
                          spread.confidence.begin() + static_cast<std::ptrdiff_t>(labeled.rows()));
  return spread;
}

SpreadResult spread_labels(const LabelMemory& memory, const SlidingWindow& window,
                           const SpreadConfig& cfg) {
  if (memory.empty()) throw InvalidArgument("cannot spread labels from an empty memory");

  FeatureMatrix nodes;
  std::vector<ClassId> labels;
  std::unordered_map<StreamIndex, std::size_t> memory_pos;
  for (const auto& entry : memory.entries()) {
    if (!window.empty() && entry.point.dim() != window[0].dim()) {
      throw ShapeError("memory and window points differ in dimensionality");
    }
    memory_pos[entry.point.index()] = nodes.rows();
    nodes.append(entry.point.features());
    labels.push_back(entry.label);
  }

  // A window point already held in memory is the same graph node.
  std::vector<std::size_t> window_node(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (auto it = memory_pos.find(window[i].index()); it != memory_pos.end()) {
      window_node[i] = it->second;
    } else {
      window_node[i] = nodes.rows();
      nodes.append(window[i].features());
    }
  }

  auto spread = spread_all(nodes, labels, cfg);

  SpreadResult result;
  result.iterations = spread.iterations;
  result.converged = spread.converged;
  result.labels.reserve(window.size());
  result.confidence.reserve(window.size());
  for (std::size_t node : window_node) {
    result.labels.push_back(spread.labels[node]);
    result.confidence.push_back(spread.confidence[node]);
  }
  return result;
}

}  // namespace seer

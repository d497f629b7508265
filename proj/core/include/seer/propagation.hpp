#pragma once

#include <cstddef>
#include <vector>

#include "seer/stream.hpp"

namespace seer {

enum class GraphKind { knn, complete };

struct SpreadConfig {
  GraphKind graph = GraphKind::knn;
  std::size_t k = 7;
  double alpha = 0.2;  // share of each step taken from the neighbors
  std::size_t max_iterations = 30;
  double tolerance = 1e-3;
};

struct SpreadResult {
  std::vector<ClassId> labels;                  // one per window point, window order
  std::vector<std::vector<double>> confidence;  // normalized label distribution per point
  std::size_t iterations = 0;
  bool converged = false;
};

/// Graph label spreading from the labeled memory onto every window point.
///
/// Nodes are the memory points plus the window points not already in memory. Edges
/// come from a symmetrised kNN graph (or the complete graph) weighted by
/// exp(-d^2 / sigma^2), sigma being the mean kNN distance. With S the symmetrically
/// normalized affinity and Y the one-hot seed matrix the iteration is
///   F <- alpha * S * F + (1 - alpha) * Y
/// and it stops once no row-normalized distribution moves by `tolerance` (max abs)
/// or after `max_iterations`. Each point takes the argmax of its row, ties toward
/// the smaller class id.
///
/// Throws InvalidArgument on an empty memory and ShapeError on mismatched dimensions.
SpreadResult spread_labels(const LabelMemory& memory, const SlidingWindow& window,
                           const SpreadConfig& cfg);

/// Same algorithm over explicit labeled and unlabeled feature sets.
SpreadResult spread_labels(const FeatureMatrix& labeled, std::span<const ClassId> labels,
                           const FeatureMatrix& unlabeled, const SpreadConfig& cfg);

}  // namespace seer

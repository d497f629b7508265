#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seer/stream.hpp"

namespace seer {

enum class ModelKind { decision_tree, random_forest };

struct TrainConfig {
  /// decision_tree forces one tree, no bootstrap and every feature at every split.
  ModelKind kind = ModelKind::random_forest;
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_split = 2;
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// CART tree with Gini splits. Samples go left when x[feature] <= threshold.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> distribution;  // per-class sample counts, leaves only

    bool is_leaf() const noexcept { return feature < 0; }
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes);

  ClassId predict(std::span<const double> features) const;
  const Node& leaf_for(std::span<const double> features) const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<Node> nodes_;
};

/// Immutable fitted model: a single CART tree or a bagged forest voting by majority.
class ClassifierModel {
 public:
  ClassifierModel(ModelKind kind, std::vector<DecisionTree> trees, std::size_t n_classes,
                  std::size_t dim, std::uint64_t seed);

  /// Majority vote over trees, ties toward the smaller class id.
  /// Throws ShapeError on a dimensionality mismatch.
  ClassId predict(std::span<const double> features) const;
  std::vector<ClassId> predict(const FeatureMatrix& rows) const;

  ModelKind kind() const noexcept { return kind_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::string to_json() const;
  static ClassifierModel from_json(std::string_view text);

 private:
  ModelKind kind_;
  std::vector<DecisionTree> trees_;
  std::size_t n_classes_;
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Deterministic in (data, cfg). Throws TrainingError on empty data and ShapeError
/// on inconsistent feature lengths.
ClassifierModel train(std::span<const LabeledPoint> data, const TrainConfig& cfg);
ClassifierModel train(const FeatureMatrix& features, std::span<const ClassId> labels,
                      const TrainConfig& cfg);

/// Per-point disagreement between two predictions: 0 when equal, 1 otherwise.
constexpr int disagreement(ClassId a, ClassId b) noexcept { return a == b ? 0 : 1; }

}  // namespace seer

#include "seer/classifiers.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace seer {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ClassId argmax(std::span<const double> counts) noexcept {
  ClassId best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<ClassId>(c);
  }
  return best;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const ClassId> y, std::size_t n_classes,
              const TrainConfig& cfg, std::size_t features_per_split, std::uint64_t seed)
      : x_(x), y_(y), n_classes_(n_classes), cfg_(cfg), mtry_(features_per_split), rng_(seed) {}

  DecisionTree build(std::vector<std::uint32_t> samples) {
    samples_ = std::move(samples);
    nodes_.clear();
    grow(0, samples_.size(), 0);
    return DecisionTree(std::move(nodes_));
  }

 private:
  struct Sorted {
    double value;
    ClassId label;
  };

  std::vector<double> class_counts(std::size_t begin, std::size_t end) const {
    std::vector<double> counts(n_classes_, 0.0);
    for (std::size_t i = begin; i < end; ++i) counts[static_cast<std::size_t>(y_[samples_[i]])] += 1.0;
    return counts;
  }

  static double gini(std::span<const double> counts, double n) noexcept {
    if (n <= 0.0) return 0.0;
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    return 1.0 - sq / (n * n);
  }

  int grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    auto counts = class_counts(begin, end);
    const double n = static_cast<double>(end - begin);
    const double impurity = gini(counts, n);

    const bool depth_limited = cfg_.max_depth != 0 && depth >= cfg_.max_depth;
    Split split;
    if (impurity > 0.0 && !depth_limited && end - begin >= cfg_.min_samples_split) {
      split = best_split(begin, end, counts, impurity);
    }
    if (split.feature < 0) {
      nodes_[static_cast<std::size_t>(id)].distribution = std::move(counts);
      return id;
    }

    auto mid_it = std::partition(
        samples_.begin() + static_cast<std::ptrdiff_t>(begin),
        samples_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t s) {
          return x_.row(s)[static_cast<std::size_t>(split.feature)] <= split.threshold;
        });
    const auto mid = static_cast<std::size_t>(mid_it - samples_.begin());
    assert(mid > begin && mid < end);

    const int left = grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  Split best_split(std::size_t begin, std::size_t end, const std::vector<double>& parent_counts,
                   double parent_impurity) {
    const std::size_t dim = x_.cols();
    std::vector<std::size_t> features(dim);
    std::iota(features.begin(), features.end(), 0);
    std::shuffle(features.begin(), features.end(), rng_);

    Split best;
    std::vector<Sorted> sorted(end - begin);
    std::vector<double> left(n_classes_);
    const double n = static_cast<double>(end - begin);

    // Like CART in common libraries, keep drawing features past the mtry budget
    // only while no valid split has been found.
    for (std::size_t k = 0; k < dim; ++k) {
      if (k >= mtry_ && best.feature >= 0) break;
      const std::size_t f = features[k];
      for (std::size_t i = begin; i < end; ++i) {
        sorted[i - begin] = {x_.row(samples_[i])[f], y_[samples_[i]]};
      }
      std::sort(sorted.begin(), sorted.end(),
                [](const Sorted& a, const Sorted& b) { return a.value < b.value; });
      if (sorted.front().value == sorted.back().value) continue;

      std::fill(left.begin(), left.end(), 0.0);
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double c : parent_counts) right_sq += c * c;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const auto c = static_cast<std::size_t>(sorted[i].label);
        const double right_c = parent_counts[c] - left[c];
        left_sq += 2.0 * left[c] + 1.0;
        right_sq -= 2.0 * right_c - 1.0;
        left[c] += 1.0;
        if (sorted[i].value == sorted[i + 1].value) continue;

        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double child = ((nl - left_sq / nl) + (nr - right_sq / nr)) / n;
        const double gain = parent_impurity - child;
        if (best.feature < 0 || gain > best.gain) {
          double threshold = 0.5 * (sorted[i].value + sorted[i + 1].value);
          if (threshold >= sorted[i + 1].value) threshold = sorted[i].value;
          best = {static_cast<int>(f), threshold, gain};
        }
      }
    }
    if (best.feature >= 0) {
      assert(best.gain >= -1e-12 && "gini gain of an accepted split must be non-negative");
      if (best.gain < 0.0) best.gain = 0.0;
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const ClassId> y_;
  std::size_t n_classes_;
  const TrainConfig& cfg_;
  std::size_t mtry_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> samples_;
  std::vector<DecisionTree::Node> nodes_;
};

std::string_view kind_name(ModelKind kind) {
  return kind == ModelKind::decision_tree ? "decision_tree" : "random_forest";
}

}  // namespace

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvalidArgument("a tree needs at least one node");
}

const DecisionTree::Node& DecisionTree::leaf_for(std::span<const double> features) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(features[static_cast<std::size_t>(node.feature)] <= node.threshold
                                     ? node.left
                                     : node.right);
  }
  return nodes_[i];
}

ClassId DecisionTree::predict(std::span<const double> features) const {
  return argmax(leaf_for(features).distribution);
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t deepest = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
    }
  }
  return deepest;
}

ClassifierModel::ClassifierModel(ModelKind kind, std::vector<DecisionTree> trees,
                                 std::size_t n_classes, std::size_t dim, std::uint64_t seed)
    : kind_(kind), trees_(std::move(trees)), n_classes_(n_classes), dim_(dim), seed_(seed) {
  if (trees_.empty()) throw InvalidArgument("a model needs at least one tree");
  if (n_classes_ == 0) throw InvalidArgument("a model needs at least one class");
}

ClassId ClassifierModel::predict(std::span<const double> features) const {
  if (features.size() != dim_) {
    throw ShapeError("predict with " + std::to_string(features.size()) +
                     " features, model expects " + std::to_string(dim_));
  }
  if (trees_.size() == 1) return trees_.front().predict(features);
  std::vector<double> votes(n_classes_, 0.0);
  for (const auto& tree : trees_) votes[static_cast<std::size_t>(tree.predict(features))] += 1.0;
  return argmax(votes);
}

std::vector<ClassId> ClassifierModel::predict(const FeatureMatrix& rows) const {
  std::vector<ClassId> out;
  out.reserve(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out.push_back(predict(rows.row(i)));
  return out;
}

std::string ClassifierModel::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes()) {
      if (n.is_leaf()) {
        nodes.push_back({{"distribution", n.distribution}});
      } else {
        nodes.push_back(
            {{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  nlohmann::json doc{{"kind", kind_name(kind_)},
                     {"n_classes", n_classes_},
                     {"dim", dim_},
                     {"seed", seed_},
                     {"trees", std::move(trees)}};
  return doc.dump();
}

ClassifierModel ClassifierModel::from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    const auto kind_str = doc.at("kind").get<std::string>();
    ModelKind kind;
    if (kind_str == "decision_tree") {
      kind = ModelKind::decision_tree;
    } else if (kind_str == "random_forest") {
      kind = ModelKind::random_forest;
    } else {
      throw ParseError("unknown model kind '" + kind_str + "'", 0);
    }
    const auto n_classes = doc.at("n_classes").get<std::size_t>();
    const auto dim = doc.at("dim").get<std::size_t>();
    std::vector<DecisionTree> trees;
    for (const auto& t : doc.at("trees")) {
      std::vector<DecisionTree::Node> nodes;
      for (const auto& n : t.at("nodes")) {
        DecisionTree::Node node;
        if (n.contains("distribution")) {
          node.distribution = n.at("distribution").get<std::vector<double>>();
          if (node.distribution.size() != n_classes) {
            throw ParseError("leaf distribution length differs from n_classes", 0);
          }
        } else {
          node.feature = n.at("feature").get<int>();
          node.threshold = n.at("threshold").get<double>();
          node.left = n.at("left").get<int>();
          node.right = n.at("right").get<int>();
        }
        nodes.push_back(std::move(node));
      }
      const auto count = static_cast<int>(nodes.size());
      for (const auto& node : nodes) {
        if (!node.is_leaf() && (node.left <= 0 || node.left >= count || node.right <= 0 ||
                                node.right >= count || node.feature >= static_cast<int>(dim))) {
          throw ParseError("tree node refers outside the tree", 0);
        }
      }
      trees.emplace_back(std::move(nodes));
    }
    return ClassifierModel(kind, std::move(trees), n_classes, dim, doc.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what(), 0);
  }
}

ClassifierModel train(const FeatureMatrix& features, std::span<const ClassId> labels,
                      const TrainConfig& cfg) {
  if (features.rows() == 0) throw TrainingError("cannot train on an empty data set");
  if (labels.size() != features.rows()) {
    throw ShapeError("label count " + std::to_string(labels.size()) + " differs from row count " +
                     std::to_string(features.rows()));
  }
  if (cfg.min_samples_split < 2) throw TrainingError("min_samples_split must be at least 2");
  if (cfg.kind == ModelKind::random_forest && cfg.n_trees == 0) {
    throw TrainingError("a forest needs at least one tree");
  }

  ClassId max_label = 0;
  for (ClassId y : labels) {
    if (y < 0) throw TrainingError("class ids must be non-negative");
    max_label = std::max(max_label, y);
  }
  const auto n_classes = static_cast<std::size_t>(max_label) + 1;
  const std::size_t dim = features.cols();
  const std::size_t n = features.rows();

  const bool single = cfg.kind == ModelKind::decision_tree;
  const std::size_t n_trees = single ? 1 : cfg.n_trees;
  const bool bootstrap = single ? false : cfg.bootstrap;
  std::size_t mtry = dim;
  if (!single) {
    mtry = cfg.features_per_split != 0
               ? cfg.features_per_split
               : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim))));
    mtry = std::clamp<std::size_t>(mtry, 1, std::max<std::size_t>(dim, 1));
  }

  std::vector<DecisionTree> trees;
  trees.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    const std::uint64_t tree_seed = splitmix64(cfg.seed ^ splitmix64(t + 1));
    std::vector<std::uint32_t> samples(n);
    if (bootstrap) {
      std::mt19937_64 rng(splitmix64(tree_seed));
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
      for (auto& s : samples) s = pick(rng);
    } else {
      std::iota(samples.begin(), samples.end(), 0U);
    }
    TreeBuilder builder(features, labels, n_classes, cfg, mtry, tree_seed);
    trees.push_back(builder.build(std::move(samples)));
  }
  return ClassifierModel(single ? ModelKind::decision_tree : ModelKind::random_forest,
                         std::move(trees), n_classes, dim, cfg.seed);
}

ClassifierModel train(std::span<const LabeledPoint> data, const TrainConfig& cfg) {
  if (data.empty()) throw TrainingError("cannot train on an empty data set");
  FeatureMatrix x;
  std::vector<ClassId> y;
  y.reserve(data.size());
  for (const auto& p : data) {
    if (p.point.dim() != data.front().point.dim()) {
      throw ShapeError("inconsistent dimensionality in training data at stream index " +
                       std::to_string(p.point.index()));
    }
    x.append(p.point.features());
    y.push_back(p.label);
  }
  return train(x, y, cfg);
}

}  // namespace seer

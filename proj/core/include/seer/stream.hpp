#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "seer/error.hpp"

namespace seer {

/// Class labels are small non-negative integers; binary tasks use {0, 1}.
using ClassId = int;
using StreamIndex = std::uint64_t;

class GroundTruth;

/// One stream instance. The true label travels with the point but can only be
/// read through GroundTruth, which the oracle and the evaluator use.
class DataPoint {
 public:
  DataPoint(StreamIndex index, std::vector<double> features);
  DataPoint(StreamIndex index, std::vector<double> features, ClassId true_label);

  StreamIndex index() const noexcept { return index_; }
  std::span<const double> features() const noexcept { return features_; }
  std::size_t dim() const noexcept { return features_.size(); }

  /// Points are identified by their stream position.
  friend bool operator==(const DataPoint& a, const DataPoint& b) noexcept {
    return a.index_ == b.index_;
  }

 private:
  friend class GroundTruth;

  StreamIndex index_;
  std::vector<double> features_;
  std::optional<ClassId> true_label_;
};

/// The only door to a point's hidden label.
class GroundTruth {
 public:
  static std::optional<ClassId> label(const DataPoint& p) noexcept { return p.true_label_; }
  static DataPoint without_label(const DataPoint& p) { return DataPoint(p.index_, p.features_); }
};

struct LabeledPoint {
  DataPoint point;
  ClassId label;
};

/// Latest-w buffer of unlabeled points, oldest first.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity);

  /// Appends `x`, evicting the oldest point when over capacity.
  /// Throws OrderingError when x.index() is not past the newest buffered index.
  void push(DataPoint x);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return buffer_.size(); }
  bool empty() const noexcept { return buffer_.empty(); }
  bool full() const noexcept { return buffer_.size() == capacity_; }
  const std::deque<DataPoint>& points() const noexcept { return buffer_; }
  const DataPoint& operator[](std::size_t i) const { return buffer_[i]; }

 private:
  std::size_t capacity_;
  std::deque<DataPoint> buffer_;
  std::optional<StreamIndex> last_index_;
};

/// Fixed-capacity FIFO of expert-labeled points.
class LabelMemory {
 public:
  explicit LabelMemory(std::size_t capacity);

  /// Appends in order; the oldest entries are dropped silently past capacity.
  void insert(std::span<const LabeledPoint> pts);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return queue_.size(); }
  bool empty() const noexcept { return queue_.empty(); }
  const std::deque<LabeledPoint>& entries() const noexcept { return queue_; }

 private:
  std::size_t capacity_;
  std::deque<LabeledPoint> queue_;
};

/// Dense row-major copy of a set of feature vectors.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols);

  template <typename Range>
  static FeatureMatrix from_points(const Range& points) {
    FeatureMatrix m;
    for (const auto& p : points) m.append(feature_span(p));
    return m;
  }

  void append(std::span<const double> row);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

 private:
  static std::span<const double> feature_span(const DataPoint& p) { return p.features(); }
  static std::span<const double> feature_span(const LabeledPoint& p) { return p.point.features(); }
  static std::span<const double> feature_span(const std::vector<double>& v) { return v; }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept;

}  // namespace seer
